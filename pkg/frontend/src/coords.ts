/** Display-to-image coordinate mapping for a zoomed, panned canvas.
 *
 * The image is drawn at `scale` display pixels per image pixel with its
 * top-left corner at (offsetX, offsetY) in display space. Display points
 * land in an image pixel by flooring; image pixels map back to the center
 * of their display footprint, so a round trip moves a point at most half
 * a footprint (<= 1 display pixel for any scale up to 2).
 */

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface ImagePoint {
  row: number;
  col: number;
}

export interface DisplayPoint {
  x: number;
  y: number;
}

export const displayToImage = (
  view: ViewTransform,
  point: DisplayPoint,
  imageHeight: number,
  imageWidth: number,
): ImagePoint | null => {
  const col = Math.floor((point.x - view.offsetX) / view.scale);
  const row = Math.floor((point.y - view.offsetY) / view.scale);
  if (row < 0 || col < 0 || row >= imageHeight || col >= imageWidth) {
    return null;
  }
  return { row, col };
};

export const imageToDisplay = (
  view: ViewTransform,
  point: ImagePoint,
): DisplayPoint => ({
  x: view.offsetX + (point.col + 0.5) * view.scale,
  y: view.offsetY + (point.row + 0.5) * view.scale,
});

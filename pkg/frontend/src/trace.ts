/** Pointer-trace capture: display samples to an image-space pixel mask.
 *
 * A click yields one pixel, a drag yields a 1-pixel-wide polyline with
 * consecutive samples bridged in image space so fast pointer motion does
 * not leave gaps, and the star control selects the whole image. Pixels
 * keep first-visit order and never repeat; samples landing outside the
 * image are dropped rather than clamped.
 */

import type { DisplayPoint, ImagePoint, ViewTransform } from "./coords.js";
import { displayToImage } from "./coords.js";

export type MaskPayload = "whole" | Array<[number, number]>;

/** Integer line between two pixels, endpoints included (Bresenham). */
export const linePixels = (a: ImagePoint, b: ImagePoint): ImagePoint[] => {
  const pixels: ImagePoint[] = [];
  const dCol = Math.abs(b.col - a.col);
  const dRow = -Math.abs(b.row - a.row);
  const stepCol = a.col < b.col ? 1 : -1;
  const stepRow = a.row < b.row ? 1 : -1;
  let err = dCol + dRow;
  let { row, col } = a;
  for (;;) {
    pixels.push({ row, col });
    if (row === b.row && col === b.col) {
      break;
    }
    const doubled = 2 * err;
    if (doubled >= dRow) {
      err += dRow;
      col += stepCol;
    }
    if (doubled <= dCol) {
      err += dCol;
      row += stepRow;
    }
  }
  return pixels;
};

export interface TraceCapture {
  add(point: DisplayPoint): void;
  /** The deduplicated mask so far, or null if nothing landed in the image. */
  finish(): Array<[number, number]> | null;
}

export const createTrace = (
  view: ViewTransform,
  imageHeight: number,
  imageWidth: number,
): TraceCapture => {
  const seen = new Set<number>();
  const mask: Array<[number, number]> = [];
  let last: ImagePoint | null = null;

  const stamp = (pixel: ImagePoint): void => {
    const key = pixel.row * imageWidth + pixel.col;
    if (!seen.has(key)) {
      seen.add(key);
      mask.push([pixel.row, pixel.col]);
    }
  };

  return {
    add(point: DisplayPoint): void {
      const pixel = displayToImage(view, point, imageHeight, imageWidth);
      if (pixel === null) {
        // Leaving the image breaks the stroke; bridging back in would
        // paint pixels the pointer never crossed.
        last = null;
        return;
      }
      if (last === null) {
        stamp(pixel);
      } else {
        for (const step of linePixels(last, pixel)) {
          stamp(step);
        }
      }
      last = pixel;
    },
    finish(): Array<[number, number]> | null {
      return mask.length > 0 ? mask : null;
    },
  };
};

/** Brush state: what the last dip loaded and what a combine is gathering.
 *
 * Painting stays disabled until a dip completes, mirroring the session's
 * precondition. Combine clicks park their targets here until a plain
 * click closes the group and sends one dip for all of them.
 */

import type { DipResult, DipTarget } from "./client.js";

export type PaintMode = "auto" | "manual";

export interface LoadedBrush {
  /** Monotonic id so the UI can tell consecutive dips apart. */
  id: number;
  /** CSS color summarizing the brush mean, for the palette indicator. */
  swatch: string;
  sources: string[];
  channels: number;
}

/** CSS color for a feature mean; Lab channels map directly to lab(). */
export const swatchFromMean = (mean: number[]): string => {
  if (mean.length === 3) {
    const [l, a, b] = mean as [number, number, number];
    return `lab(${l.toFixed(2)} ${a.toFixed(2)} ${b.toFixed(2)})`;
  }
  return "rgb(127 127 127)";
};

export interface BrushStore {
  mode(): PaintMode;
  setMode(mode: PaintMode): void;
  canPaint(): boolean;
  current(): LoadedBrush | null;
  addPending(target: DipTarget): void;
  pendingCount(): number;
  /** Pending combine targets plus the closing one, clearing the queue. */
  takeTargets(closing: DipTarget): DipTarget[];
  loadFromDip(result: DipResult): LoadedBrush;
}

export const createBrushStore = (): BrushStore => {
  let mode: PaintMode = "auto";
  let loaded: LoadedBrush | null = null;
  let pending: DipTarget[] = [];
  let nextId = 1;

  return {
    mode: () => mode,
    setMode(next: PaintMode): void {
      mode = next;
    },
    canPaint: () => loaded !== null,
    current: () => loaded,
    addPending(target: DipTarget): void {
      pending.push(target);
    },
    pendingCount: () => pending.length,
    takeTargets(closing: DipTarget): DipTarget[] {
      const targets = [...pending, closing];
      pending = [];
      return targets;
    },
    loadFromDip(result: DipResult): LoadedBrush {
      loaded = {
        id: nextId,
        swatch: swatchFromMean(result.mean),
        sources: result.sources,
        channels: result.channels,
      };
      nextId += 1;
      return loaded;
    },
  };
};

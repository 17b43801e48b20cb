/** Sequence-keyed reorder buffer for streamed frames.
 *
 * The service numbers each stream's frames from 1. Delivery may arrive
 * out of order; the buffer holds early frames and releases the longest
 * in-order run each time the next expected frame shows up. Duplicates
 * and frames older than the cursor are dropped.
 */

export interface ReorderBuffer<T> {
  /** Accepts one frame and returns the frames now deliverable, in order. */
  push(seq: number, frame: T): T[];
  /** Count of frames parked waiting for earlier sequence numbers. */
  pending(): number;
}

export const createReorderBuffer = <T>(): ReorderBuffer<T> => {
  const parked = new Map<number, T>();
  let next = 1;

  return {
    push(seq: number, frame: T): T[] {
      if (seq < next || parked.has(seq)) {
        return [];
      }
      parked.set(seq, frame);
      const run: T[] = [];
      while (parked.has(next)) {
        run.push(parked.get(next) as T);
        parked.delete(next);
        next += 1;
      }
      return run;
    },
    pending(): number {
      return parked.size;
    },
  };
};

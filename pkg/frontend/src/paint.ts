/** Paint stream orchestration against a render surface.
 *
 * Every pixel the user sees comes from a server frame: render frames are
 * drawn as they arrive (in sequence order, via the reorder buffer), the
 * terminal frame swaps in the committed render, and an abort or stream
 * error restores the last committed render. Nothing is composed locally.
 */

import type { FrameMessage, ServiceClient } from "./client.js";
import { createReorderBuffer } from "./reorder.js";
import type { MaskPayload } from "./trace.js";

export interface RenderSurface {
  /** Replaces the content canvas with this base64 PNG. */
  draw(pngB64: string): void;
  /** Sets or clears the penetration heat overlay. */
  overlay(pngB64: string | null): void;
  toast(message: string): void;
}

export interface PaintOutcome {
  state: string;
  committed: boolean;
  step: number | null;
}

export interface PaintController {
  painting(): boolean;
  lastCommitted(): string | null;
  /** Seeds or refreshes the committed render (session create, undo). */
  setCommitted(pngB64: string): void;
  setOverlayEnabled(enabled: boolean): void;
  run(
    pixels: MaskPayload,
    mode: "auto" | "manual",
    steps?: number,
  ): Promise<PaintOutcome>;
  /** Pointer release: asks the server to stop the running paint. */
  release(): Promise<void>;
}

export const createPaintController = (
  client: ServiceClient,
  sessionId: string,
  surface: RenderSurface,
): PaintController => {
  let committed: string | null = null;
  let overlayEnabled = true;
  let activeStream: string | null = null;

  const restore = (): void => {
    if (committed !== null) {
      surface.draw(committed);
    }
  };

  return {
    painting: () => activeStream !== null,
    lastCommitted: () => committed,
    setCommitted(pngB64: string): void {
      committed = pngB64;
      surface.draw(pngB64);
    },
    setOverlayEnabled(enabled: boolean): void {
      overlayEnabled = enabled;
      if (!enabled) {
        surface.overlay(null);
      }
    },

    async run(pixels, mode, steps) {
      if (activeStream !== null) {
        throw new Error("a paint is already running");
      }
      const streamId = await client.paint(sessionId, pixels, mode, steps);
      activeStream = streamId;
      const buffer = createReorderBuffer<FrameMessage>();
      let outcome: PaintOutcome = {
        state: "error",
        committed: false,
        step: null,
      };
      let failure: string | null = null;

      const handle = (frame: FrameMessage): void => {
        switch (frame.kind) {
          case "render-frame":
            surface.draw(frame.payload);
            break;
          case "penetration-frame":
            if (overlayEnabled) {
              surface.overlay(frame.payload);
            }
            break;
          case "terminal":
            outcome = {
              state: frame.state,
              committed: frame.committed,
              step: frame.step,
            };
            if (frame.committed) {
              committed = frame.payload;
              surface.draw(frame.payload);
            } else {
              restore();
            }
            break;
          case "error":
            failure = frame.payload;
            break;
        }
      };

      try {
        await client.streamFrames(sessionId, streamId, (frame) => {
          for (const ready of buffer.push(frame.seq, frame)) {
            handle(ready);
          }
        });
      } catch (error) {
        failure = error instanceof Error ? error.message : String(error);
      } finally {
        activeStream = null;
        surface.overlay(null);
      }

      if (failure !== null) {
        surface.toast(failure);
        restore();
        return { state: "error", committed: false, step: null };
      }
      return outcome;
    },

    async release() {
      if (activeStream !== null) {
        await client.stop(sessionId, activeStream);
      }
    },
  };
};

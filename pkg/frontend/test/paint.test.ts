import { describe, expect, it } from "vitest";

import type { FrameMessage, ServiceClient } from "../src/client.js";
import type { RenderSurface } from "../src/paint.js";
import { createPaintController } from "../src/paint.js";

const frame = (
  seq: number,
  kind: FrameMessage["kind"],
  step: number,
  extra: Partial<FrameMessage> = {},
): FrameMessage => ({
  seq,
  kind,
  step,
  state: "diffusing",
  rate: 0.5,
  committed: false,
  payload: `${kind}-${seq}`,
  ...extra,
});

/** Deterministic Fisher-Yates shuffle driven by a small LCG. */
const shuffled = <T>(items: T[], seed: number): T[] => {
  const out = [...items];
  let state = seed >>> 0;
  for (let i = out.length - 1; i > 0; i -= 1) {
    state = (state * 1664525 + 1013904223) >>> 0;
    const j = state % (i + 1);
    const a = out[i] as T;
    out[i] = out[j] as T;
    out[j] = a;
  }
  return out;
};

interface Recorded {
  draws: string[];
  overlays: Array<string | null>;
  toasts: string[];
  surface: RenderSurface;
}

const recordSurface = (): Recorded => {
  const draws: string[] = [];
  const overlays: Array<string | null> = [];
  const toasts: string[] = [];
  return {
    draws,
    overlays,
    toasts,
    surface: {
      draw: (png) => draws.push(png),
      overlay: (png) => overlays.push(png),
      toast: (message) => toasts.push(message),
    },
  };
};

interface MockOptions {
  frames?: FrameMessage[];
  holdStream?: Promise<void>;
  failStream?: Error;
}

interface Mock {
  client: ServiceClient;
  stops: string[];
  paints: Array<{ pixels: unknown; mode: string; steps: number | undefined }>;
}

const mockClient = (options: MockOptions = {}): Mock => {
  const stops: string[] = [];
  const paints: Mock["paints"] = [];
  const client: ServiceClient = {
    createSession: () => Promise.reject(new Error("not used")),
    dip: () => Promise.reject(new Error("not used")),
    paint: (_sid, pixels, mode, steps) => {
      paints.push({ pixels, mode, steps });
      return Promise.resolve("stream-1");
    },
    streamFrames: async (_sid, _stream, onFrame) => {
      if (options.failStream !== undefined) {
        throw options.failStream;
      }
      for (const message of options.frames ?? []) {
        await Promise.resolve();
        onFrame(message);
      }
      if (options.holdStream !== undefined) {
        await options.holdStream;
      }
    },
    stop: (_sid, streamId) => {
      stops.push(streamId);
      return Promise.resolve();
    },
    undo: () => Promise.resolve(0),
    exportPng: () => Promise.resolve(new Uint8Array()),
    deleteSession: () => Promise.resolve(),
  };
  return { client, stops, paints };
};

describe("paint controller", () => {
  it("renders a shuffled 20-frame stream in sequence order", async () => {
    // Acceptance: 19 render frames plus the terminal, delivered in a
    // scrambled order, must draw strictly by sequence number.
    const ordered = [
      ...Array.from({ length: 19 }, (_, i) =>
        frame(i + 1, "render-frame", i + 1),
      ),
      frame(20, "terminal", 19, {
        state: "auto-stopped",
        committed: true,
        payload: "final-render",
      }),
    ];
    for (const seed of [3, 11, 99]) {
      const { client } = mockClient({ frames: shuffled(ordered, seed) });
      const recorded = recordSurface();
      const controller = createPaintController(
        client,
        "sid",
        recorded.surface,
      );
      const outcome = await controller.run("whole", "auto");

      expect(recorded.draws).toEqual([
        ...Array.from({ length: 19 }, (_, i) => `render-frame-${i + 1}`),
        "final-render",
      ]);
      expect(outcome).toEqual({
        state: "auto-stopped",
        committed: true,
        step: 19,
      });
      expect(controller.lastCommitted()).toBe("final-render");
    }
  });

  it("an aborted paint restores the last committed render", async () => {
    // Acceptance: provisional frames may hit the canvas, but a terminal
    // with committed=false must put the previous render back.
    const frames = shuffled(
      [
        frame(1, "penetration-frame", 1),
        frame(2, "render-frame", 1),
        frame(3, "penetration-frame", 2),
        frame(4, "render-frame", 2),
        frame(5, "terminal", 0, { state: "manually-stopped" }),
      ],
      42,
    );
    const { client } = mockClient({ frames });
    const recorded = recordSurface();
    const controller = createPaintController(client, "sid", recorded.surface);
    controller.setCommitted("pre-paint-render");

    const outcome = await controller.run([[4, 5]], "manual");

    expect(outcome.committed).toBe(false);
    expect(recorded.draws[recorded.draws.length - 1]).toBe("pre-paint-render");
    expect(controller.lastCommitted()).toBe("pre-paint-render");
  });

  it("a committed terminal becomes the new baseline", async () => {
    const { client } = mockClient({
      frames: [
        frame(1, "render-frame", 1),
        frame(2, "terminal", 1, {
          state: "manually-stopped",
          committed: true,
          payload: "step-1-render",
        }),
      ],
    });
    const recorded = recordSurface();
    const controller = createPaintController(client, "sid", recorded.surface);
    controller.setCommitted("pre-paint-render");

    await controller.run([[0, 0]], "manual", 1);

    expect(controller.lastCommitted()).toBe("step-1-render");
    expect(recorded.draws[recorded.draws.length - 1]).toBe("step-1-render");
  });

  it("a stream error shows a toast and restores the canvas", async () => {
    const { client } = mockClient({
      frames: [
        frame(1, "render-frame", 1),
        frame(2, "error", 0, { state: "error", payload: "solver failed" }),
      ],
    });
    const recorded = recordSurface();
    const controller = createPaintController(client, "sid", recorded.surface);
    controller.setCommitted("pre-paint-render");

    const outcome = await controller.run("whole", "auto");

    expect(outcome.state).toBe("error");
    expect(recorded.toasts).toContain("solver failed");
    expect(recorded.draws[recorded.draws.length - 1]).toBe("pre-paint-render");
    expect(controller.lastCommitted()).toBe("pre-paint-render");
  });

  it("a transport failure is handled like a stream error", async () => {
    const { client } = mockClient({
      failStream: new Error("connection reset"),
    });
    const recorded = recordSurface();
    const controller = createPaintController(client, "sid", recorded.surface);
    controller.setCommitted("pre-paint-render");

    const outcome = await controller.run("whole", "auto");

    expect(outcome.state).toBe("error");
    expect(recorded.toasts).toContain("connection reset");
    expect(controller.lastCommitted()).toBe("pre-paint-render");
    expect(controller.painting()).toBe(false);
  });

  it("never draws pixels the server did not send", async () => {
    const frames = [
      frame(1, "penetration-frame", 1),
      frame(2, "render-frame", 1),
      frame(3, "terminal", 1, { committed: true, state: "auto-stopped" }),
    ];
    const { client } = mockClient({ frames: shuffled(frames, 5) });
    const recorded = recordSurface();
    const controller = createPaintController(client, "sid", recorded.surface);
    controller.setCommitted("server-export");

    await controller.run("whole", "auto");

    const serverPayloads = new Set([
      "server-export",
      ...frames.map((message) => message.payload),
    ]);
    for (const drawn of recorded.draws) {
      expect(serverPayloads.has(drawn)).toBe(true);
    }
    for (const overlay of recorded.overlays) {
      if (overlay !== null) {
        expect(serverPayloads.has(overlay)).toBe(true);
      }
    }
  });

  it("routes penetration frames to the overlay only when enabled", async () => {
    const frames = [
      frame(1, "penetration-frame", 1),
      frame(2, "render-frame", 1),
      frame(3, "terminal", 1, { committed: true, state: "auto-stopped" }),
    ];
    const disabled = recordSurface();
    const off = createPaintController(
      mockClient({ frames }).client,
      "sid",
      disabled.surface,
    );
    off.setOverlayEnabled(false);
    await off.run("whole", "auto");
    expect(disabled.overlays.filter((o) => o !== null)).toEqual([]);

    const enabled = recordSurface();
    const on = createPaintController(
      mockClient({ frames }).client,
      "sid",
      enabled.surface,
    );
    await on.run("whole", "auto");
    expect(enabled.overlays).toContain("penetration-frame-1");
    // The overlay never outlives the paint.
    expect(enabled.overlays[enabled.overlays.length - 1]).toBeNull();
  });

  it("rejects a second paint while one is running", async () => {
    let releaseStream!: () => void;
    const hold = new Promise<void>((resolve) => {
      releaseStream = resolve;
    });
    const { client } = mockClient({ frames: [], holdStream: hold });
    const controller = createPaintController(
      client,
      "sid",
      recordSurface().surface,
    );

    const first = controller.run("whole", "auto");
    await Promise.resolve();
    expect(controller.painting()).toBe(true);
    await expect(controller.run("whole", "auto")).rejects.toThrow(
      "already running",
    );
    releaseStream();
    await first;
    expect(controller.painting()).toBe(false);
  });

  it("release stops the active stream and is a no-op otherwise", async () => {
    let releaseStream!: () => void;
    const hold = new Promise<void>((resolve) => {
      releaseStream = resolve;
    });
    const mock = mockClient({ frames: [], holdStream: hold });
    const controller = createPaintController(
      mock.client,
      "sid",
      recordSurface().surface,
    );

    await controller.release();
    expect(mock.stops).toEqual([]);

    const running = controller.run([[1, 1]], "manual");
    await Promise.resolve();
    await controller.release();
    expect(mock.stops).toEqual(["stream-1"]);
    releaseStream();
    await running;
    await controller.release();
    expect(mock.stops).toEqual(["stream-1"]);
  });

  it("passes mask, mode, and step budget through to the service", async () => {
    const mock = mockClient({
      frames: [frame(1, "terminal", 0, { state: "manually-stopped" })],
    });
    const controller = createPaintController(
      mock.client,
      "sid",
      recordSurface().surface,
    );
    await controller.run([[2, 3]], "manual", 5);
    expect(mock.paints).toEqual([
      { pixels: [[2, 3]], mode: "manual", steps: 5 },
    ]);
  });
});

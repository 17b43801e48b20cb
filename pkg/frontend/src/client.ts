/** HTTP client for the paint service.
 *
 * Thin wrapper over fetch: JSON endpoints for session control, an NDJSON
 * reader for paint streams. The fetch function is injected so tests can
 * run against a scripted transport instead of a live server.
 */

import type { MaskPayload } from "./trace.js";

export interface HttpResponse {
  status: number;
  json(): Promise<unknown>;
  arrayBuffer(): Promise<ArrayBuffer>;
  body: ReadableStream<Uint8Array> | null;
}

export type HttpFetch = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ServiceError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ServiceError";
    this.status = status;
  }
}

export type FrameKind =
  | "penetration-frame"
  | "render-frame"
  | "terminal"
  | "error";

export interface FrameMessage {
  seq: number;
  kind: FrameKind;
  step: number | null;
  state: string;
  rate: number | null;
  committed: boolean;
  /** Base64 PNG for frame kinds; the error text for kind "error". */
  payload: string;
}

export interface SessionInfo {
  sessionId: string;
  height: number;
  width: number;
  styles: Array<{ height: number; width: number }>;
}

export interface DipTarget {
  style: number;
  pixels: MaskPayload;
}

export interface DipResult {
  channels: number;
  sources: string[];
  /** Base64 PNG of the style-side penetration, when one was produced. */
  previewPenetration: string | null;
  mean: number[];
  std: number[];
}

export interface DiffusionParams {
  v?: number;
  r?: number;
  epsilon?: number;
  alpha?: number;
  dt?: number;
}

/** Incremental NDJSON decoder tolerant of arbitrary chunk boundaries. */
export const createNdjsonParser = (
  onMessage: (message: FrameMessage) => void,
): { push(text: string): void; flush(): void } => {
  let tail = "";

  const emit = (line: string): void => {
    const trimmed = line.trim();
    if (trimmed.length > 0) {
      onMessage(JSON.parse(trimmed) as FrameMessage);
    }
  };

  return {
    push(text: string): void {
      tail += text;
      for (;;) {
        const cut = tail.indexOf("\n");
        if (cut < 0) {
          break;
        }
        emit(tail.slice(0, cut));
        tail = tail.slice(cut + 1);
      }
    },
    flush(): void {
      emit(tail);
      tail = "";
    },
  };
};

export interface ServiceClient {
  createSession(
    contentPngB64: string,
    stylePngsB64: string[],
    params?: DiffusionParams,
  ): Promise<SessionInfo>;
  dip(sessionId: string, targets: DipTarget[]): Promise<DipResult>;
  paint(
    sessionId: string,
    pixels: MaskPayload,
    mode: "auto" | "manual",
    steps?: number,
  ): Promise<string>;
  streamFrames(
    sessionId: string,
    streamId: string,
    onFrame: (frame: FrameMessage) => void,
  ): Promise<void>;
  stop(sessionId: string, streamId: string): Promise<void>;
  undo(sessionId: string): Promise<number>;
  exportPng(sessionId: string): Promise<Uint8Array>;
  deleteSession(sessionId: string): Promise<void>;
}

export const createServiceClient = (
  baseUrl: string,
  fetchFn: HttpFetch,
): ServiceClient => {
  const base = baseUrl.replace(/\/+$/, "");

  const fail = async (response: HttpResponse): Promise<never> => {
    let message = `request failed with status ${response.status}`;
    try {
      const parsed = (await response.json()) as { error?: string };
      if (typeof parsed.error === "string") {
        message = parsed.error;
      }
    } catch {
      // Non-JSON error body; keep the status-based message.
    }
    throw new ServiceError(response.status, message);
  };

  const postJson = async (path: string, body: unknown): Promise<unknown> => {
    const response = await fetchFn(base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (response.status < 200 || response.status >= 300) {
      return fail(response);
    }
    return response.json();
  };

  return {
    async createSession(contentPngB64, stylePngsB64, params) {
      const body: Record<string, unknown> = {
        content: contentPngB64,
        styles: stylePngsB64,
      };
      if (params !== undefined) {
        body["params"] = params;
      }
      const raw = (await postJson("/sessions", body)) as {
        session_id: string;
        height: number;
        width: number;
        styles: Array<{ height: number; width: number }>;
      };
      return {
        sessionId: raw.session_id,
        height: raw.height,
        width: raw.width,
        styles: raw.styles,
      };
    },

    async dip(sessionId, targets) {
      const raw = (await postJson(`/sessions/${sessionId}/dip`, {
        targets,
      })) as {
        channels: number;
        sources: string[];
        preview_penetration: string | null;
        mean: number[];
        std: number[];
      };
      return {
        channels: raw.channels,
        sources: raw.sources,
        previewPenetration: raw.preview_penetration,
        mean: raw.mean,
        std: raw.std,
      };
    },

    async paint(sessionId, pixels, mode, steps) {
      const body: Record<string, unknown> = { pixels, mode };
      if (steps !== undefined) {
        body["steps"] = steps;
      }
      const raw = (await postJson(`/sessions/${sessionId}/paint`, body)) as {
        stream_id: string;
      };
      return raw.stream_id;
    },

    async streamFrames(sessionId, streamId, onFrame) {
      const response = await fetchFn(
        `${base}/sessions/${sessionId}/paint/${streamId}/stream`,
      );
      if (response.status < 200 || response.status >= 300) {
        return fail(response);
      }
      const parser = createNdjsonParser(onFrame);
      if (response.body === null) {
        parser.push(new TextDecoder().decode(await response.arrayBuffer()));
        parser.flush();
        return;
      }
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) {
          break;
        }
        parser.push(decoder.decode(value, { stream: true }));
      }
      parser.push(decoder.decode());
      parser.flush();
    },

    async stop(sessionId, streamId) {
      await postJson(`/sessions/${sessionId}/paint/${streamId}/stop`, {});
    },

    async undo(sessionId) {
      const raw = (await postJson(`/sessions/${sessionId}/undo`, {})) as {
        paints: number;
      };
      return raw.paints;
    },

    async exportPng(sessionId) {
      const response = await fetchFn(`${base}/sessions/${sessionId}/export`);
      if (response.status < 200 || response.status >= 300) {
        return fail(response);
      }
      return new Uint8Array(await response.arrayBuffer());
    },

    async deleteSession(sessionId) {
      const response = await fetchFn(`${base}/sessions/${sessionId}`, {
        method: "DELETE",
      });
      if (response.status < 200 || response.status >= 300) {
        return fail(response);
      }
      await response.json();
    },
  };
};

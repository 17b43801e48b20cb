/** DOM wiring: content canvas on the left, style palette on the right.
 *
 * This layer owns no image math. It maps pointer events to mask payloads
 * through the trace module, forwards them to the service client, and
 * lets the paint controller decide what ends up on the canvas.
 */

import { createBrushStore } from "./brush.js";
import type { DipTarget, ServiceClient } from "./client.js";
import { ServiceError } from "./client.js";
import type { ViewTransform } from "./coords.js";
import type { RenderSurface } from "./paint.js";
import { createPaintController } from "./paint.js";
import type { ModifierKey } from "./settings.js";
import { createSettingsStore } from "./settings.js";
import type { MaskPayload } from "./trace.js";
import { createTrace } from "./trace.js";

const ZOOM_LEVELS = [0.5, 1, 2] as const;

const bytesToB64 = (bytes: Uint8Array): string => {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
};

const fileToB64 = (file: File): Promise<string> =>
  new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => {
      const url = reader.result as string;
      resolve(url.slice(url.indexOf(",") + 1));
    };
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });

const decodePng = async (b64: string): Promise<HTMLImageElement> => {
  const img = new Image();
  img.src = `data:image/png;base64,${b64}`;
  await img.decode();
  return img;
};

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className !== undefined) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
};

/** Grayscale penetration PNG to a translucent black-red-yellow ramp. */
const paintHeat = (
  ctx: CanvasRenderingContext2D,
  img: HTMLImageElement,
  displayWidth: number,
  displayHeight: number,
): void => {
  const off = document.createElement("canvas");
  off.width = img.naturalWidth;
  off.height = img.naturalHeight;
  const octx = off.getContext("2d");
  if (octx === null) {
    return;
  }
  octx.drawImage(img, 0, 0);
  const data = octx.getImageData(0, 0, off.width, off.height);
  const px = data.data;
  for (let i = 0; i < px.length; i += 4) {
    const v = px[i] ?? 0;
    px[i] = Math.min(255, v * 2);
    px[i + 1] = Math.max(0, v * 2 - 255);
    px[i + 2] = 0;
    px[i + 3] = Math.round(v * 0.6);
  }
  octx.putImageData(data, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, displayWidth, displayHeight);
  ctx.drawImage(off, 0, 0, displayWidth, displayHeight);
};

interface SessionSetup {
  contentB64: string;
  styleB64s: string[];
  baseUrl: string;
}

export const createApp = (
  root: HTMLElement,
  makeClient: (baseUrl: string) => ServiceClient,
): void => {
  root.replaceChildren();
  const form = el("div", "setup");
  const urlInput = el("input") as HTMLInputElement;
  urlInput.value = "http://localhost:8000";
  const contentInput = el("input") as HTMLInputElement;
  contentInput.type = "file";
  contentInput.accept = "image/png";
  const styleInput = el("input") as HTMLInputElement;
  styleInput.type = "file";
  styleInput.accept = "image/png";
  styleInput.multiple = true;
  const startButton = el("button", undefined, "Start session");
  const status = el("div", "status");

  form.append(
    el("label", undefined, "Service URL"),
    urlInput,
    el("label", undefined, "Content PNG"),
    contentInput,
    el("label", undefined, "Style PNGs (1-16)"),
    styleInput,
    startButton,
    status,
  );
  root.append(form);

  startButton.addEventListener("click", () => {
    const content = contentInput.files?.[0];
    const styles = styleInput.files;
    if (content === undefined || styles === null || styles.length === 0) {
      status.textContent = "Pick a content image and at least one style.";
      return;
    }
    void (async () => {
      status.textContent = "Uploading...";
      try {
        const setup: SessionSetup = {
          contentB64: await fileToB64(content),
          styleB64s: await Promise.all(Array.from(styles).map(fileToB64)),
          baseUrl: urlInput.value,
        };
        await startSession(root, makeClient(setup.baseUrl), setup);
      } catch (error) {
        status.textContent =
          error instanceof Error ? error.message : String(error);
      }
    })();
  });
};

const startSession = async (
  root: HTMLElement,
  client: ServiceClient,
  setup: SessionSetup,
): Promise<void> => {
  const info = await client.createSession(setup.contentB64, setup.styleB64s);
  const settings = createSettingsStore();
  const brush = createBrushStore();

  root.replaceChildren();
  const layout = el("div", "layout");
  const left = el("div", "content-pane");
  const right = el("div", "palette-pane");
  layout.append(left, right);
  root.append(layout);

  // Left pane: render canvas with the heat overlay stacked on top.
  const stack = el("div", "canvas-stack");
  const renderCanvas = el("canvas", "render") as HTMLCanvasElement;
  const overlayCanvas = el("canvas", "overlay") as HTMLCanvasElement;
  stack.append(renderCanvas, overlayCanvas);
  const toastBox = el("div", "toast");
  left.append(stack, toastBox);

  let zoom = 1;
  const view = (): ViewTransform => ({ scale: zoom, offsetX: 0, offsetY: 0 });

  const resizeCanvases = (): void => {
    const width = Math.round(info.width * zoom);
    const height = Math.round(info.height * zoom);
    for (const canvas of [renderCanvas, overlayCanvas]) {
      canvas.width = width;
      canvas.height = height;
    }
  };
  resizeCanvases();

  let drawToken = 0;
  const surface: RenderSurface = {
    draw(pngB64: string): void {
      drawToken += 1;
      const token = drawToken;
      void decodePng(pngB64).then((img) => {
        if (token !== drawToken) {
          return;
        }
        const ctx = renderCanvas.getContext("2d");
        if (ctx === null) {
          return;
        }
        ctx.imageSmoothingEnabled = false;
        ctx.drawImage(img, 0, 0, renderCanvas.width, renderCanvas.height);
      });
    },
    overlay(pngB64: string | null): void {
      const ctx = overlayCanvas.getContext("2d");
      if (ctx === null) {
        return;
      }
      if (pngB64 === null) {
        ctx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
        return;
      }
      void decodePng(pngB64).then((img) => {
        paintHeat(ctx, img, overlayCanvas.width, overlayCanvas.height);
      });
    },
    toast(message: string): void {
      toastBox.textContent = message;
      toastBox.classList.add("visible");
      setTimeout(() => toastBox.classList.remove("visible"), 2500);
    },
  };

  const controller = createPaintController(client, info.sessionId, surface);
  controller.setCommitted(bytesToB64(await client.exportPng(info.sessionId)));

  // Right pane: palette, brush readout, controls.
  const swatch = el("div", "swatch");
  const brushLabel = el("div", "brush-label", "No brush loaded");
  right.append(el("h2", undefined, "Styles"), swatch, brushLabel);

  const sendDip = async (closing: DipTarget): Promise<void> => {
    try {
      const loaded = brush.loadFromDip(
        await client.dip(info.sessionId, brush.takeTargets(closing)),
      );
      swatch.style.background = loaded.swatch;
      brushLabel.textContent = `Brush ${loaded.id}: ${loaded.sources.join(" + ")}`;
    } catch (error) {
      surface.toast(error instanceof Error ? error.message : String(error));
    }
  };

  setup.styleB64s.forEach((styleB64, index) => {
    const extents = info.styles[index];
    if (extents === undefined) {
      return;
    }
    const item = el("div", "palette-item");
    const thumb = el("canvas", "thumb") as HTMLCanvasElement;
    const displayWidth = 160;
    const scale = displayWidth / extents.width;
    thumb.width = displayWidth;
    thumb.height = Math.round(extents.height * scale);
    void decodePng(styleB64).then((img) => {
      const ctx = thumb.getContext("2d");
      if (ctx !== null) {
        ctx.drawImage(img, 0, 0, thumb.width, thumb.height);
      }
    });
    item.append(thumb, el("div", "style-name", `style-${index}`));
    right.append(item);

    const styleView: ViewTransform = { scale, offsetX: 0, offsetY: 0 };
    let trace: ReturnType<typeof createTrace> | null = null;
    let starDown = false;
    let combineDown = false;

    thumb.addEventListener("pointerdown", (event) => {
      event.preventDefault();
      const kind = settings.classify(event);
      starDown = kind.star;
      combineDown = kind.combine;
      trace = createTrace(styleView, extents.height, extents.width);
      const rect = thumb.getBoundingClientRect();
      trace.add({ x: event.clientX - rect.left, y: event.clientY - rect.top });
      thumb.setPointerCapture(event.pointerId);
    });
    thumb.addEventListener("pointermove", (event) => {
      if (trace === null) {
        return;
      }
      const rect = thumb.getBoundingClientRect();
      trace.add({ x: event.clientX - rect.left, y: event.clientY - rect.top });
    });
    thumb.addEventListener("pointerup", () => {
      if (trace === null) {
        return;
      }
      const mask: MaskPayload | null = starDown ? "whole" : trace.finish();
      trace = null;
      if (mask === null) {
        return;
      }
      const target: DipTarget = { style: index, pixels: mask };
      if (combineDown) {
        brush.addPending(target);
        brushLabel.textContent = `Combining: ${brush.pendingCount()} target(s) pending`;
      } else {
        void sendDip(target);
      }
    });
  });

  // Content canvas interactions: trace for auto paints, hold for manual.
  let contentTrace: ReturnType<typeof createTrace> | null = null;
  let holdRelease = false;

  const runPaint = (pixels: MaskPayload, mode: "auto" | "manual"): void => {
    brush.setMode(mode);
    void controller
      .run(pixels, mode)
      .then((outcome) => {
        if (outcome.state !== "error") {
          surface.toast(`${outcome.state} at step ${outcome.step ?? 0}`);
        }
      })
      .catch((error) => {
        surface.toast(error instanceof Error ? error.message : String(error));
      });
  };

  overlayCanvas.addEventListener("pointerdown", (event) => {
    event.preventDefault();
    if (controller.painting()) {
      return;
    }
    if (!brush.canPaint()) {
      surface.toast("Dip a style before painting.");
      return;
    }
    const kind = settings.classify(event);
    const rect = overlayCanvas.getBoundingClientRect();
    if (kind.star) {
      holdRelease = kind.manual;
      runPaint("whole", kind.manual ? "manual" : "auto");
      return;
    }
    if (kind.manual) {
      const single = createTrace(view(), info.height, info.width);
      single.add({
        x: event.clientX - rect.left,
        y: event.clientY - rect.top,
      });
      const mask = single.finish();
      if (mask !== null) {
        holdRelease = true;
        runPaint(mask, "manual");
      }
      return;
    }
    contentTrace = createTrace(view(), info.height, info.width);
    contentTrace.add({
      x: event.clientX - rect.left,
      y: event.clientY - rect.top,
    });
    overlayCanvas.setPointerCapture(event.pointerId);
  });
  overlayCanvas.addEventListener("pointermove", (event) => {
    if (contentTrace === null) {
      return;
    }
    const rect = overlayCanvas.getBoundingClientRect();
    contentTrace.add({
      x: event.clientX - rect.left,
      y: event.clientY - rect.top,
    });
  });
  overlayCanvas.addEventListener("pointerup", () => {
    if (holdRelease) {
      holdRelease = false;
      void controller.release();
      return;
    }
    if (contentTrace === null) {
      return;
    }
    const mask = contentTrace.finish();
    contentTrace = null;
    if (mask !== null) {
      runPaint(mask, "auto");
    }
  });

  // Controls: zoom, undo, bindings, overlay toggle.
  const controls = el("div", "controls");
  right.append(el("h2", undefined, "Controls"), controls);

  const zoomSelect = el("select") as HTMLSelectElement;
  for (const level of ZOOM_LEVELS) {
    const option = el("option", undefined, `${level}x`) as HTMLOptionElement;
    option.value = String(level);
    option.selected = level === 1;
    zoomSelect.append(option);
  }
  zoomSelect.addEventListener("change", () => {
    zoom = Number(zoomSelect.value);
    resizeCanvases();
    const committed = controller.lastCommitted();
    if (committed !== null) {
      surface.draw(committed);
    }
  });

  const undoButton = el("button", undefined, "Undo");
  undoButton.addEventListener("click", () => {
    if (controller.painting()) {
      return;
    }
    void (async () => {
      try {
        await client.undo(info.sessionId);
        controller.setCommitted(
          bytesToB64(await client.exportPng(info.sessionId)),
        );
      } catch (error) {
        if (error instanceof ServiceError) {
          surface.toast(error.message);
        }
      }
    })();
  });

  const overlayToggle = el("input") as HTMLInputElement;
  overlayToggle.type = "checkbox";
  overlayToggle.checked = settings.get().overlayEnabled;
  overlayToggle.addEventListener("change", () => {
    settings.set({ overlayEnabled: overlayToggle.checked });
    controller.setOverlayEnabled(overlayToggle.checked);
  });
  const overlayLabel = el("label", "row", "Penetration overlay ");
  overlayLabel.prepend(overlayToggle);

  const modifierSelect = (
    label: string,
    key: "combineModifier" | "manualModifier",
  ): HTMLElement => {
    const select = el("select") as HTMLSelectElement;
    for (const mod of ["ctrlKey", "shiftKey", "altKey", "metaKey"]) {
      const option = el(
        "option",
        undefined,
        mod.replace("Key", ""),
      ) as HTMLOptionElement;
      option.value = mod;
      option.selected = settings.get()[key] === mod;
      select.append(option);
    }
    select.addEventListener("change", () => {
      settings.set({ [key]: select.value as ModifierKey });
    });
    const row = el("label", "row", `${label} `);
    row.append(select);
    return row;
  };

  const starSelect = el("select") as HTMLSelectElement;
  for (const [value, name] of [
    ["1", "middle"],
    ["2", "right"],
  ] as const) {
    const option = el("option", undefined, name) as HTMLOptionElement;
    option.value = value;
    option.selected = Number(value) === settings.get().starButton;
    starSelect.append(option);
  }
  starSelect.addEventListener("change", () => {
    settings.set({ starButton: Number(starSelect.value) });
  });
  const starRow = el("label", "row", "Whole-image button ");
  starRow.append(starSelect);

  const zoomRow = el("label", "row", "Zoom ");
  zoomRow.append(zoomSelect);
  controls.append(
    zoomRow,
    undoButton,
    overlayLabel,
    modifierSelect("Combine modifier", "combineModifier"),
    modifierSelect("Manual modifier", "manualModifier"),
    starRow,
  );
};

"""Interactive dip-and-paint sessions over one content image.

A session holds the padded content image, its feature pyramid, the running
mixed-feature canvas M, the content retention map R, the loaded brush
(dipped style statistics), and an undo stack. Dips always run the
automatic diffusion; paints stream frames and commit M/R only when their
diffusion run terminates, so stopping early is side-effect free.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from . import diffusion, transfer
from .core import (
    Image,
    InteractionMask,
    Params,
    PenetrationMap,
    WHOLE_IMAGE,
    check_image_limits,
    downsample_area,
)
from .errors import (
    ConfigurationError,
    NoBrushError,
    NothingToUndoError,
    ScriptError,
)
from .features import AnalyticBackend, aggregate_similarity
from .transfer import StyleStats

MAX_STYLES = 16
UNDO_DEPTH = 32
PAD_MULTIPLE = 8


def _pad_image(img: Image) -> Image:
    """Reflect-pad bottom/right to multiples of 8 for the stride pyramid."""
    ph = (-img.height) % PAD_MULTIPLE
    pw = (-img.width) % PAD_MULTIPLE
    if ph == 0 and pw == 0:
        return img
    data = np.pad(img.data, ((0, ph), (0, pw), (0, 0)), mode="reflect")
    return Image(data)


def _pad_mask(mask: InteractionMask, height: int, width: int) -> InteractionMask:
    """Whole-image selections cover the padding too (the star means
    everything); clicks and scribbles keep their pixel coordinates."""
    if (mask.height, mask.width) == (height, width):
        return mask
    if mask.kind == WHOLE_IMAGE:
        return InteractionMask.whole(height, width)
    return mask.pad_to(height, width)


@dataclass(frozen=True)
class PaintFrame:
    """One streamed paint update. Non-terminal frames carry provisional
    renders; the terminal frame reflects the committed (or, on an abort,
    the unchanged) session state."""

    step: int
    state: str
    rate: float
    cg_iterations: int
    image: Image
    penetration: np.ndarray
    terminal: bool
    committed: bool


class Session:
    def __init__(self, content: Image, styles: Sequence[Image],
                 params: Params | None = None, backend=None):
        if not 1 <= len(styles) <= MAX_STYLES:
            raise ValueError(
                f"need between 1 and {MAX_STYLES} style images, got {len(styles)}"
            )
        check_image_limits(content)
        for s in styles:
            check_image_limits(s)
        self.params = params if params is not None else Params()
        self.backend = backend if backend is not None else AnalyticBackend()
        self.content = content
        self.styles = list(styles)
        self._content_padded = _pad_image(content)
        self._styles_padded = [_pad_image(s) for s in styles]
        self._content_pyramid = self.backend.extract(self._content_padded)
        self._style_pyramids = [self.backend.extract(s)
                                for s in self._styles_padded]
        self._fc = self.backend.transfer_features(self._content_padded)
        self._style_features = [self.backend.transfer_features(s)
                                for s in self._styles_padded]
        self.mixed = self._fc.copy()
        self.retention = np.ones(
            (self._content_padded.height, self._content_padded.width)
        )
        self.brush: StyleStats | None = None
        self.last_dip_penetrations: list[np.ndarray] = []
        self.paint_count = 0
        self.paint_log: list[dict] = []
        self.dip_log: list[dict] = []
        self._undo_stack: list[tuple[np.ndarray, np.ndarray]] = []
        self._paint_active = False

    # -- geometry ---------------------------------------------------------

    def _crop(self, field: np.ndarray) -> np.ndarray:
        return field[: self.content.height, : self.content.width]

    def _crop_image(self, img: Image) -> Image:
        if (img.height, img.width) == (self.content.height, self.content.width):
            return img
        return Image(img.data[: self.content.height, : self.content.width])

    def _feature_extents(self) -> tuple[int, int]:
        s = self.backend.transfer_stride
        return (self._content_padded.height // s,
                self._content_padded.width // s)

    def _penetration_at_feature_res(self, p: np.ndarray) -> np.ndarray:
        th, tw = self._feature_extents()
        if (th, tw) == p.shape:
            return p
        return np.clip(downsample_area(p, th, tw), 0.0, 1.0)

    # -- rendering --------------------------------------------------------

    def _render(self, mixed: np.ndarray, retention: np.ndarray) -> Image:
        img = transfer.render(mixed, self._content_padded, retention,
                              self.params.alpha, self.backend)
        return self._crop_image(img)

    def render_current(self) -> Image:
        return self._render(self.mixed, self.retention)

    def export(self) -> Image:
        return self.render_current()

    # -- dipping ----------------------------------------------------------

    def dip(self, targets: Sequence[tuple[int, InteractionMask]]) -> StyleStats:
        """Run the automatic diffusion on each style target and pool the
        weighted statistics into a fresh brush."""
        if not targets:
            raise ValueError("dip needs at least one (style, interaction) target")
        entries = []
        previews = []
        for idx, mask in targets:
            if not 0 <= idx < len(self.styles):
                raise ValueError(f"style index {idx} out of range")
            style = self.styles[idx]
            if (mask.height, mask.width) != (style.height, style.width):
                raise ValueError(
                    f"interaction extents {(mask.height, mask.width)} do not "
                    f"match style {idx} extents {(style.height, style.width)}"
                )
            padded = self._styles_padded[idx]
            mask_p = _pad_mask(mask, padded.height, padded.width)
            g = aggregate_similarity(self._style_pyramids[idx], mask_p)
            final = None
            for frame in diffusion.run(mask_p, g, self.params, mode="auto"):
                final = frame
            assert final is not None
            p_map = diffusion.normalize_penetration(final.p)
            s = self.backend.transfer_stride
            th = padded.height // s
            tw = padded.width // s
            if (th, tw) == p_map.values.shape:
                p_feat = p_map.values
            else:
                p_feat = np.clip(downsample_area(p_map.values, th, tw), 0.0, 1.0)
            entries.append((f"style-{idx}", self._style_features[idx], p_feat))
            previews.append(
                p_map.values[: self.styles[idx].height,
                             : self.styles[idx].width].copy()
            )
        stats = transfer.dip(entries, backend=self.backend.tag)
        self.brush = stats
        self.last_dip_penetrations = previews
        self.dip_log.append(
            {"targets": [(idx, m.kind) for idx, m in targets],
             "channels": stats.channels}
        )
        return stats

    # -- painting ---------------------------------------------------------

    def paint(self, interaction: InteractionMask, mode: str = "auto",
              stop_signal=None,
              frame_filter: Callable[[int], bool] | None = None
              ) -> Iterator[PaintFrame]:
        """Stream paint frames; commit M/R and push an undo checkpoint only
        when the run terminates with at least one executed step.

        frame_filter(step) -> bool suppresses rendering of intermediate
        frames (the diffusion still advances); the terminal frame is always
        rendered and yielded.
        """
        if self.brush is None:
            raise NoBrushError("dip a style before painting")
        if (interaction.height, interaction.width) != (
            self.content.height,
            self.content.width,
        ):
            raise ValueError("interaction extents must match the content image")
        if self._paint_active:
            raise ConfigurationError("another paint is already running")
        mask_p = _pad_mask(interaction, self._content_padded.height,
                           self._content_padded.width)
        g = aggregate_similarity(self._content_pyramid, mask_p)
        brush_a = transfer.local_adain(self._fc, self.brush)
        mask_kind = interaction.kind
        self._paint_active = True
        try:
            for frame in diffusion.run(mask_p, g, self.params, mode,
                                       stop_signal):
                if frame.terminal:
                    aborted = (
                        frame.state == diffusion.MANUALLY_STOPPED
                        and frame.step == 0
                    )
                    if aborted:
                        yield PaintFrame(
                            step=0,
                            state=frame.state,
                            rate=frame.rate,
                            cg_iterations=0,
                            image=self.render_current(),
                            penetration=np.zeros(
                                (self.content.height, self.content.width)
                            ),
                            terminal=True,
                            committed=False,
                        )
                        return
                    p_map = diffusion.normalize_penetration(frame.p)
                    self._commit(p_map, brush_a, mask_kind, frame)
                    yield PaintFrame(
                        step=frame.step,
                        state=frame.state,
                        rate=frame.rate,
                        cg_iterations=frame.cg_iterations,
                        image=self.render_current(),
                        penetration=self._crop(p_map.values).copy(),
                        terminal=True,
                        committed=True,
                    )
                    return
                if frame_filter is not None and not frame_filter(frame.step):
                    continue
                p_map = diffusion.normalize_penetration(frame.p)
                p_feat = self._penetration_at_feature_res(p_map.values)
                mixed = transfer.mix_features(self.mixed, brush_a, p_feat)
                retention = self.retention * (1.0 - p_map.values)
                yield PaintFrame(
                    step=frame.step,
                    state=frame.state,
                    rate=frame.rate,
                    cg_iterations=frame.cg_iterations,
                    image=self._render(mixed, retention),
                    penetration=self._crop(p_map.values).copy(),
                    terminal=False,
                    committed=False,
                )
        finally:
            self._paint_active = False

    def _commit(self, p_map: PenetrationMap, brush_a: np.ndarray,
                mask_kind: str, frame: diffusion.RunFrame) -> None:
        self._undo_stack.append((self.mixed.copy(), self.retention.copy()))
        if len(self._undo_stack) > UNDO_DEPTH:
            self._undo_stack.pop(0)
        p_feat = self._penetration_at_feature_res(p_map.values)
        self.mixed = transfer.mix_features(self.mixed, brush_a, p_feat)
        self.retention = self.retention * (1.0 - p_map.values)
        self.paint_count += 1
        self.paint_log.append(
            {"kind": mask_kind, "steps": frame.step, "state": frame.state}
        )

    # -- undo -------------------------------------------------------------

    def undo(self) -> None:
        if not self._undo_stack:
            raise NothingToUndoError("no paint to undo")
        self.mixed, self.retention = self._undo_stack.pop()
        self.paint_count -= 1
        self.paint_log.pop()


def create_session(content: Image, styles: Sequence[Image],
                   params: Params | None = None, backend=None) -> Session:
    return Session(content, styles, params=params, backend=backend)


# -- scripted replay ------------------------------------------------------


@dataclass(frozen=True)
class DipAction:
    targets: tuple[tuple[int, object], ...]  # (style index, pixels | "whole")


@dataclass(frozen=True)
class PaintAction:
    pixels: object  # [[r, c], ...] or "whole"
    mode: str
    steps: int | None


@dataclass(frozen=True)
class UndoAction:
    pass


def _parse_pixels(raw, where: str):
    if raw == "whole":
        return "whole"
    if not isinstance(raw, list) or not raw:
        raise ScriptError(f"{where}: pixels must be 'whole' or a non-empty list")
    pixels = []
    for entry in raw:
        if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                or not all(isinstance(c, int) for c in entry)):
            raise ScriptError(
                f"{where}: each pixel must be a [row, col] integer pair"
            )
        pixels.append((entry[0], entry[1]))
    return pixels


def parse_actions(raw_actions) -> list:
    if not isinstance(raw_actions, list):
        raise ScriptError("actions must be a list")
    actions = []
    for i, raw in enumerate(raw_actions):
        where = f"actions[{i}]"
        if not isinstance(raw, dict) or "op" not in raw:
            raise ScriptError(f"{where}: each action needs an 'op' field")
        op = raw["op"]
        if op == "dip":
            targets_raw = raw.get("targets")
            if not isinstance(targets_raw, list) or not targets_raw:
                raise ScriptError(f"{where}: dip needs a non-empty targets list")
            targets = []
            for t, traw in enumerate(targets_raw):
                twhere = f"{where}.targets[{t}]"
                if not isinstance(traw, dict) or "style" not in traw:
                    raise ScriptError(f"{twhere}: needs a 'style' index")
                if not isinstance(traw["style"], int):
                    raise ScriptError(f"{twhere}: style must be an integer")
                targets.append(
                    (traw["style"], _parse_pixels(traw.get("pixels"), twhere))
                )
            actions.append(DipAction(targets=tuple(targets)))
        elif op == "paint":
            mode = raw.get("mode", "auto")
            if mode not in ("auto", "manual"):
                raise ScriptError(f"{where}: mode must be 'auto' or 'manual'")
            steps = raw.get("steps")
            if steps is not None and (not isinstance(steps, int) or steps < 0):
                raise ScriptError(f"{where}: steps must be a non-negative integer")
            actions.append(
                PaintAction(
                    pixels=_parse_pixels(raw.get("pixels"), where),
                    mode=mode,
                    steps=steps,
                )
            )
        elif op == "undo":
            actions.append(UndoAction())
        else:
            raise ScriptError(f"{where}: unknown op {op!r}")
    return actions


def build_mask(pixels, height: int, width: int) -> InteractionMask:
    if pixels == "whole":
        return InteractionMask.whole(height, width)
    try:
        return InteractionMask.from_pixels(height, width, pixels)
    except ValueError as exc:
        raise ScriptError(str(exc)) from exc


def apply_action(session: Session, action,
                 frame_hook: Callable[[int, PaintFrame], None] | None = None,
                 action_index: int = 0) -> dict:
    """Execute one parsed action; returns a small metrics record."""
    if isinstance(action, DipAction):
        targets = []
        for idx, pixels in action.targets:
            if not 0 <= idx < len(session.styles):
                raise ScriptError(f"dip target style {idx} out of range")
            style = session.styles[idx]
            targets.append(
                (idx, build_mask(pixels, style.height, style.width))
            )
        session.dip(targets)
        return {"op": "dip", "targets": len(targets)}
    if isinstance(action, PaintAction):
        mask = build_mask(action.pixels, session.content.height,
                          session.content.width)
        stop = threading.Event()
        if action.mode == "manual" and action.steps == 0:
            stop.set()
        steps = 0
        iters = 0
        state = None
        for frame in session.paint(mask, action.mode, stop):
            steps = frame.step
            iters += frame.cg_iterations
            state = frame.state
            if frame_hook is not None:
                frame_hook(action_index, frame)
            if (action.mode == "manual" and action.steps is not None
                    and not frame.terminal and frame.step >= action.steps):
                stop.set()
        return {"op": "paint", "mode": action.mode, "steps": steps,
                "cg_iterations": iters, "state": state}
    if isinstance(action, UndoAction):
        session.undo()
        return {"op": "undo"}
    raise ScriptError(f"unsupported action {action!r}")

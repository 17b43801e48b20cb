"""Shared domain types, resampling utilities, and PNG I/O.

All spatial fields are row-major (row, col) with the origin at the top-left.
Upsampling uses align-corners bilinear interpolation; downsampling uses area
averaging so that total concentration is preserved.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image as PILImage

from .errors import ResourceLimitError

CLICK = "click"
SCRIBBLE = "scribble"
WHOLE_IMAGE = "whole-image"

MAX_IMAGE_SIDE = 2048
MAX_STYLES = 16


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Image:
    """An sRGB image: float64 values in [0, 1], shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValueError(f"image data must have shape (H, W, 3), got {d.shape}")
        if d.shape[0] < 8 or d.shape[1] < 8:
            raise ValueError(f"image extents must be at least 8x8, got {d.shape[:2]}")
        if not np.isfinite(d).all():
            raise ValueError("image values must be finite")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _readonly(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_array(cls, arr, clamp: bool = False) -> "Image":
        a = np.asarray(arr, dtype=np.float64)
        if clamp:
            a = np.clip(a, 0.0, 1.0)
        return cls(a)


def check_image_limits(image: Image) -> None:
    """Enforce the hard size cap for session inputs."""
    if image.height > MAX_IMAGE_SIDE or image.width > MAX_IMAGE_SIDE:
        raise ResourceLimitError(
            f"image {image.height}x{image.width} exceeds the "
            f"{MAX_IMAGE_SIDE}px per-side limit"
        )


def decode_png(data: bytes) -> Image:
    """Decode PNG bytes to an Image; 8-bit values map to [0, 1] by v/255."""
    with PILImage.open(io.BytesIO(data)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return Image(arr)


def encode_png(image: Image) -> bytes:
    """Encode an Image to PNG bytes (8-bit sRGB, values rounded to v*255)."""
    arr = np.rint(image.data * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(arr, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_png(path) -> Image:
    return decode_png(Path(path).read_bytes())


def save_png(image: Image, path) -> None:
    Path(path).write_bytes(encode_png(image))


@dataclass(frozen=True)
class InteractionMask:
    """Pixels selected by one user action: a click, a scribble, or the
    whole-image star.

    The kind is `whole-image` if and only if every cell is selected.
    """

    mask: np.ndarray  # bool, (height, width)
    kind: str

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {m.shape}")
        if not m.any():
            raise ValueError("interaction mask must select at least one pixel")
        if self.kind not in (CLICK, SCRIBBLE, WHOLE_IMAGE):
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if (self.kind == WHOLE_IMAGE) != bool(m.all()):
            raise ValueError("whole-image kind must cover every cell, and vice versa")
        if self.kind == CLICK and m.sum() != 1:
            raise ValueError("a click selects exactly one pixel")
        object.__setattr__(self, "mask", _readonly(m))

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @classmethod
    def click(cls, height: int, width: int, row: int, col: int) -> "InteractionMask":
        m = np.zeros((height, width), dtype=bool)
        m[row, col] = True
        return cls(m, CLICK)

    @classmethod
    def scribble(cls, height: int, width: int,
                 pixels: Iterable[tuple[int, int]]) -> "InteractionMask":
        return cls.from_pixels(height, width, pixels)

    @classmethod
    def whole(cls, height: int, width: int) -> "InteractionMask":
        return cls(np.ones((height, width), dtype=bool), WHOLE_IMAGE)

    @classmethod
    def from_pixels(cls, height: int, width: int,
                    pixels: Iterable[tuple[int, int]]) -> "InteractionMask":
        """Build a mask from (row, col) pairs; the kind is inferred."""
        m = np.zeros((height, width), dtype=bool)
        count = 0
        for r, c in pixels:
            if not (0 <= r < height and 0 <= c < width):
                raise ValueError(f"pixel ({r}, {c}) outside {height}x{width} image")
            m[r, c] = True
            count += 1
        if count == 0:
            raise ValueError("interaction mask must select at least one pixel")
        if m.all():
            kind = WHOLE_IMAGE
        elif m.sum() == 1:
            kind = CLICK
        else:
            kind = SCRIBBLE
        return cls(m, kind)

    def pixels(self) -> list[tuple[int, int]]:
        return [tuple(p) for p in np.argwhere(self.mask)]

    def to_field(self) -> np.ndarray:
        """The mask as a float64 field of 0s and 1s."""
        return self.mask.astype(np.float64)

    def pad_to(self, height: int, width: int) -> "InteractionMask":
        """Zero-extend to a larger grid (selection pixels keep coordinates)."""
        if height < self.height or width < self.width:
            raise ValueError("pad_to target must not shrink the mask")
        if (height, width) == (self.mask.shape):
            return self
        m = np.zeros((height, width), dtype=bool)
        m[: self.height, : self.width] = self.mask
        if m.all():
            kind = WHOLE_IMAGE
        elif m.sum() == 1:
            kind = CLICK
        else:
            kind = SCRIBBLE
        return InteractionMask(m, kind)


def _validate_unit_field(values, what: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"{what} must be 2-D, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError(f"{what} values must be finite")
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError(f"{what} values must lie in [0, 1]")
    return _readonly(v)


@dataclass(frozen=True)
class SimilarityMap:
    """Per-pixel aggregated feature similarity to an interaction, in [0, 1].

    Acts as the inverse of diffusion resistance: high similarity lets the
    painted fluid spread, low similarity blocks it.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _validate_unit_field(self.values, "similarity")
        )

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PenetrationMap:
    """Per-pixel fluid concentration marking one interaction's action scope."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _validate_unit_field(self.values, "penetration")
        )

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def field_values(field) -> np.ndarray:
    """Unwrap a SimilarityMap/PenetrationMap or pass an array through."""
    if isinstance(field, (SimilarityMap, PenetrationMap)):
        return field.values
    return np.asarray(field, dtype=np.float64)


FACE_INTERP_MODES = ("min", "linear", "max")


@dataclass(frozen=True)
class Params:
    """Tunables for diffusion, termination, and blending.

    cg_max_iters of None means 10 * (H + W), resolved at solve time.
    """

    v: float = 1.0
    r: float = 10.0
    epsilon: float = 0.01
    alpha: float = 0.7
    dt: float = 1.0
    cg_tolerance: float = 1e-8
    cg_max_iters: int | None = None
    max_steps: int = 2000
    face_interp: str = "min"

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("v must be positive")
        if not self.r >= 0:
            raise ValueError("r must be non-negative")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.cg_tolerance > 0:
            raise ValueError("cg_tolerance must be positive")
        if self.cg_max_iters is not None and self.cg_max_iters < 1:
            raise ValueError("cg_max_iters must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.face_interp not in FACE_INTERP_MODES:
            raise ValueError(f"face_interp must be one of {FACE_INTERP_MODES}")


def _axis_samples(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align-corners sample positions along one axis: low index, high index,
    and fractional weight toward the high index."""
    if dst > 1 and src > 1:
        coords = np.arange(dst, dtype=np.float64) * ((src - 1) / (dst - 1))
        coords = np.clip(coords, 0.0, float(src - 1))
    else:
        coords = np.zeros(dst, dtype=np.float64)
    lo = np.floor(coords).astype(np.intp)
    lo = np.minimum(lo, src - 1)
    hi = np.minimum(lo + 1, src - 1)
    t = coords - lo
    return lo, hi, t


def resample_bilinear(field, target_h: int, target_w: int) -> np.ndarray:
    """Resize a 2-D field with align-corners bilinear interpolation.

    Every output value is a convex combination of input values, so the
    output range never exceeds [field.min(), field.max()].
    """
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2-D field, got shape {f.shape}")
    if target_h < 1 or target_w < 1:
        raise ValueError("target extents must be positive")
    src_h, src_w = f.shape
    if src_h < 1 or src_w < 1:
        raise ValueError("source extents must be positive")

    rlo, rhi, rt = _axis_samples(src_h, target_h)
    clo, chi, ct = _axis_samples(src_w, target_w)

    # Lerp form a + t*(b - a) keeps constant fields exact.
    top = f[rlo, :]
    rows = top + rt[:, None] * (f[rhi, :] - top)
    left = rows[:, clo]
    out = left + ct[None, :] * (rows[:, chi] - left)
    # Projection onto the source hull guards against last-ulp overshoot.
    return np.clip(out, f.min(), f.max())


def _area_weights(src: int, dst: int) -> np.ndarray:
    """Row-stochastic (dst, src) matrix averaging source cells over each
    destination cell's footprint."""
    w = np.zeros((dst, src), dtype=np.float64)
    step = src / dst
    for k in range(dst):
        lo = k * step
        hi = (k + 1) * step
        i0 = int(np.floor(lo))
        i1 = min(int(np.ceil(hi)), src)
        for i in range(i0, i1):
            overlap = min(hi, i + 1) - max(lo, i)
            if overlap > 0:
                w[k, i] = overlap
        w[k, :] /= w[k, :].sum()
    return w


def downsample_area(field, target_h: int, target_w: int) -> np.ndarray:
    """Shrink a 2-D field by averaging each output cell's source footprint.

    When the extents divide evenly this is an exact block mean.
    """
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2-D field, got shape {f.shape}")
    src_h, src_w = f.shape
    if target_h < 1 or target_w < 1:
        raise ValueError("target extents must be positive")
    if target_h > src_h or target_w > src_w:
        raise ValueError("downsample targets must not exceed source extents")
    if src_h % target_h == 0 and src_w % target_w == 0:
        bh = src_h // target_h
        bw = src_w // target_w
        return f.reshape(target_h, bh, target_w, bw).mean(axis=(1, 3))
    wr = _area_weights(src_h, target_h)
    wc = _area_weights(src_w, target_w)
    return wr @ f @ wc.T

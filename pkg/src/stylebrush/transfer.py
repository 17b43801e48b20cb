"""Style statistics and their application to content features.

A "dip" pools weighted per-channel mean and standard deviation from one or
more style feature tensors, weighted by their penetration maps. Painting
renormalizes the content features to those statistics, mixes the result
into the running canvas features wherever the paint penetrated, and blends
the decoded result with the original image by the content retention map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Image
from .errors import EmptySelectionError

SIGMA_FLOOR = 1e-6


def _as_channel_major(f) -> np.ndarray:
    a = np.asarray(f, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim == 2 and a.shape[0] > 0:
        return a.reshape(a.shape[0], -1)
    if a.ndim == 3:
        return a.reshape(a.shape[0], -1)
    raise ValueError(f"feature tensor must be 1-D, 2-D or 3-D, got {a.shape}")


def weighted_mean(f, p) -> np.ndarray:
    """Per-channel weighted average: sum(P * F) / sum(P)."""
    flat = _as_channel_major(f)
    w = np.asarray(p, dtype=np.float64).ravel()
    if w.shape[0] != flat.shape[1]:
        raise ValueError("weight field extents do not match the features")
    total = w.sum()
    if not total > 0:
        raise EmptySelectionError("weights sum to zero: the dip touched nothing")
    return (flat * w).sum(axis=1) / total


def weighted_std(f, p) -> np.ndarray:
    """Per-channel weighted population deviation:
    sqrt(sum(P * (F - mean)^2) / sum(P))."""
    flat = _as_channel_major(f)
    w = np.asarray(p, dtype=np.float64).ravel()
    if w.shape[0] != flat.shape[1]:
        raise ValueError("weight field extents do not match the features")
    total = w.sum()
    if not total > 0:
        raise EmptySelectionError("weights sum to zero: the dip touched nothing")
    mu = (flat * w).sum(axis=1) / total
    sq = (flat - mu[:, None]) ** 2
    return np.sqrt(np.maximum((sq * w).sum(axis=1) / total, 0.0))


@dataclass(frozen=True)
class StyleStats:
    """The pigment: per-channel weighted mean/std plus provenance."""

    mean: np.ndarray  # (channels,)
    std: np.ndarray  # (channels,), >= 0
    backend: str
    sources: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=np.float64)
        s = np.asarray(self.std, dtype=np.float64)
        if m.ndim != 1 or s.shape != m.shape:
            raise ValueError("stats must be matching per-channel vectors")
        if s.min() < 0:
            raise ValueError("standard deviations must be non-negative")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "std", s)

    @property
    def channels(self) -> int:
        return self.mean.shape[0]


def dip(entries: list[tuple[str, np.ndarray, np.ndarray]],
        backend: str = "analytic") -> StyleStats:
    """Pool stats over (source id, features, weights) entries as one
    weighted population spanning all listed style images."""
    if not entries:
        raise ValueError("dip needs at least one style entry")
    flats = []
    weights = []
    sources = []
    channels = None
    for source, f, p in entries:
        flat = _as_channel_major(f)
        w = np.asarray(p, dtype=np.float64).ravel()
        if w.shape[0] != flat.shape[1]:
            raise ValueError("weight field extents do not match the features")
        if channels is None:
            channels = flat.shape[0]
        elif flat.shape[0] != channels:
            raise ValueError("all dip entries must share a channel count")
        flats.append(flat)
        weights.append(w)
        sources.append(source)
    f_all = np.concatenate(flats, axis=1)
    w_all = np.concatenate(weights)
    mu = weighted_mean(f_all, w_all)
    sigma = weighted_std(f_all, w_all)
    return StyleStats(mean=mu, std=sigma, backend=backend,
                      sources=tuple(sources))


def _content_stats(fc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    flat = _as_channel_major(fc)
    mu = flat.mean(axis=1)
    sigma = np.sqrt(((flat - mu[:, None]) ** 2).mean(axis=1))
    return mu, sigma


def _apply_affine(fc: np.ndarray, target_mean: np.ndarray,
                  target_std: np.ndarray) -> np.ndarray:
    fc = np.asarray(fc, dtype=np.float64)
    mu_c, sigma_c = _content_stats(fc)
    sigma_c = np.maximum(sigma_c, SIGMA_FLOOR)
    shape = (-1,) + (1,) * (fc.ndim - 1)
    return (
        target_std.reshape(shape)
        * ((fc - mu_c.reshape(shape)) / sigma_c.reshape(shape))
        + target_mean.reshape(shape)
    )


def classic_adain(fc, fs) -> np.ndarray:
    """Whole-tensor renormalization: scale content channels to the style
    tensor's plain per-channel mean and population deviation."""
    flat_s = _as_channel_major(fs)
    mu_s = flat_s.mean(axis=1)
    sigma_s = np.sqrt(((flat_s - mu_s[:, None]) ** 2).mean(axis=1))
    return _apply_affine(np.asarray(fc, dtype=np.float64), mu_s, sigma_s)


def local_adain(fc, stats: StyleStats) -> np.ndarray:
    """Renormalize content channels to dipped (weighted) statistics."""
    fc = np.asarray(fc, dtype=np.float64)
    if fc.shape[0] != stats.channels:
        raise ValueError(
            f"content has {fc.shape[0]} channels, stats {stats.channels}"
        )
    return _apply_affine(fc, stats.mean, stats.std)


def mix_features(m_prev, a, p) -> np.ndarray:
    """Pointwise convex combination (1 - P) * M_prev + P * A.

    P is a 2-D field broadcast over channels. The result is projected onto
    [min(M_prev, A), max(M_prev, A)] so the convexity bound is exact even
    at the last bit.
    """
    m_prev = np.asarray(m_prev, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    w = np.asarray(p, dtype=np.float64)
    if w.min() < 0 or w.max() > 1:
        raise ValueError("penetration weights must lie in [0, 1]")
    if m_prev.shape != a.shape:
        raise ValueError("feature tensors must share a shape")
    if w.shape != m_prev.shape[-2:]:
        raise ValueError("penetration extents do not match the features")
    out = (1.0 - w) * m_prev + w * a
    return np.clip(out, np.minimum(m_prev, a), np.maximum(m_prev, a))


def retention_blend(r: np.ndarray, alpha: float) -> np.ndarray:
    """Content weight phi(R) = max((R - alpha) / (1 - alpha), 0)."""
    r = np.asarray(r, dtype=np.float64)
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    return np.maximum((r - alpha) / (1.0 - alpha), 0.0)


def render(m: np.ndarray, content: Image, r: np.ndarray, alpha: float,
           backend) -> Image:
    """Decode the mixed features and blend with the original content:
    O = C * phi(R) + T * (1 - phi(R))."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (content.height, content.width):
        raise ValueError("retention extents must match the content image")
    if r.min() < 0 or r.max() > 1:
        raise ValueError("retention values must lie in [0, 1]")
    t = backend.features_to_image(m)
    if (t.height, t.width) != (content.height, content.width):
        raise ValueError("decoded extents do not match the content image")
    phi = retention_blend(r, alpha)[:, :, None]
    out = content.data * phi + t.data * (1.0 - phi)
    return Image.from_array(out, clamp=True)

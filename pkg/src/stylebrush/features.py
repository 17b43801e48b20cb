"""Multi-layer feature extraction and interaction-conditioned similarity.

Two backends produce the same 4-layer pyramid shape (strides 1, 2, 4, 8):

* analytic: hand-built per-pixel descriptors (color, local luminance
  statistics, gradient orientation) needing no trained weights;
* neural: forward pass through pretrained convolution weights (see the
  neural module).

Similarity of every pixel to an interaction region is the mean cosine
between feature vectors, averaged across layers at image resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .color import lab_to_srgb, srgb_to_lab
from .core import (
    Image,
    InteractionMask,
    SimilarityMap,
    downsample_area,
    resample_bilinear,
)

LAYER_STRIDES = (1, 2, 4, 8)


@dataclass(frozen=True)
class FeatureMap:
    """One layer of the pyramid: a channels-first tensor at a reduced grid."""

    layer_index: int  # 1-based
    stride: int
    data: np.ndarray  # (channels, height, width)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class FeaturePyramid:
    layers: tuple[FeatureMap, ...]
    backend: str
    image_height: int
    image_width: int

    def __post_init__(self):
        if len(self.layers) != 4:
            raise ValueError("a feature pyramid has exactly 4 layers")
        for lay, stride in zip(self.layers, LAYER_STRIDES):
            if lay.stride != stride:
                raise ValueError(
                    f"layer {lay.layer_index} stride {lay.stride}, "
                    f"expected {stride}"
                )


def _box_mean(f: np.ndarray, radius: int) -> np.ndarray:
    """Mean over a (2*radius+1)^2 window, borders replicated."""
    if radius == 0:
        return f.copy()
    w = 2 * radius + 1
    p = np.pad(f, radius, mode="edge")
    s = np.zeros((p.shape[0] + 1, p.shape[1] + 1))
    s[1:, 1:] = p.cumsum(axis=0).cumsum(axis=1)
    total = s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]
    return total / (w * w)


def _box_std(f: np.ndarray, radius: int) -> np.ndarray:
    # Shifting by the global mean leaves every window variance unchanged
    # but keeps the summed-area cancellation E[x^2] - E[x]^2 from
    # amplifying a large common offset into the result.
    shifted = f - f.mean()
    m = _box_mean(shifted, radius)
    m2 = _box_mean(shifted * shifted, radius)
    return np.sqrt(np.maximum(m2 - m * m, 0.0))


def _gradients(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gy = np.zeros_like(f)
    gx = np.zeros_like(f)
    if f.shape[0] >= 2:
        gy = np.gradient(f, axis=0)
    if f.shape[1] >= 2:
        gx = np.gradient(f, axis=1)
    return gy, gx


def _orientation_bins(lum: np.ndarray) -> np.ndarray:
    """4 channels of gradient magnitude split by orientation quadrant
    (angles folded onto [0, pi))."""
    gy, gx = _gradients(lum)
    mag = np.hypot(gx, gy) / 200.0
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.minimum((theta / (np.pi / 4.0)).astype(np.intp), 3)
    out = np.zeros((4,) + lum.shape)
    for b in range(4):
        out[b] = np.where(bins == b, mag, 0.0)
    return out


def _layer_extent(n: int, stride: int) -> int:
    return max(1, (n + stride - 1) // stride)


class AnalyticBackend:
    """Weight-free descriptors: 9 channels per layer, all shifted/scaled to
    be non-negative so cosine similarity lands in [0, 1].

    Channel plan per layer k (window radius k): L*, a*, b* color; local mean
    and local standard deviation of L* over a (2k+1)^2 window; 4 orientation
    bins of gradient-magnitude.
    """

    tag = "analytic"
    transfer_stride = 1

    def extract(self, image: Image) -> FeaturePyramid:
        layers = []
        for idx, stride in enumerate(LAYER_STRIDES, start=1):
            th = _layer_extent(image.height, stride)
            tw = _layer_extent(image.width, stride)
            rgb = np.stack(
                [downsample_area(image.data[:, :, c], th, tw) for c in range(3)],
                axis=-1,
            )
            lab = srgb_to_lab(np.clip(rgb, 0.0, 1.0))
            lum = lab[..., 0]
            chans = np.zeros((9, th, tw))
            chans[0] = lum / 100.0
            chans[1] = (lab[..., 1] + 128.0) / 255.0
            chans[2] = (lab[..., 2] + 128.0) / 255.0
            chans[3] = _box_mean(lum, idx) / 100.0
            chans[4] = _box_std(lum, idx) / 100.0
            chans[5:9] = _orientation_bins(lum)
            layers.append(FeatureMap(layer_index=idx, stride=stride, data=chans))
        return FeaturePyramid(
            layers=tuple(layers),
            backend=self.tag,
            image_height=image.height,
            image_width=image.width,
        )

    def transfer_features(self, image: Image) -> np.ndarray:
        """Transfer operates on raw L*a*b* pixel channels (3, H, W)."""
        lab = srgb_to_lab(image.data)
        return np.ascontiguousarray(lab.transpose(2, 0, 1))

    def features_to_image(self, tensor: np.ndarray) -> Image:
        """Invert transfer_features: (3, H, W) L*a*b* back to an image."""
        rgb = lab_to_srgb(tensor.transpose(1, 2, 0))
        return Image(rgb)


def layer_similarity(feature_map: FeatureMap, cells) -> np.ndarray:
    """Mean cosine similarity of every cell's feature vector to the
    interaction cells' vectors, clamped to [0, 1].

    Zero-norm vectors keep similarity 0 (they carry no feature direction).
    The mean over interaction cells of per-cell cosines equals the dot
    product with the mean of the normalized interaction vectors.
    """
    sel = np.asarray(cells, dtype=bool)
    if sel.shape != (feature_map.height, feature_map.width):
        raise ValueError(
            f"cell mask shape {sel.shape} does not match layer "
            f"{(feature_map.height, feature_map.width)}"
        )
    if not sel.any():
        raise ValueError("interaction cell set must be non-empty")
    c = feature_map.channels
    flat = feature_map.data.reshape(c, -1)
    norms = np.sqrt((flat * flat).sum(axis=0))
    unit = np.divide(flat, norms, out=np.zeros_like(flat), where=norms > 0)
    anchor = unit[:, sel.ravel()].mean(axis=1)
    sim = unit.T @ anchor
    return np.clip(sim, 0.0, 1.0).reshape(feature_map.height, feature_map.width)


def project_mask(interaction: InteractionMask, stride: int,
                 layer_h: int, layer_w: int) -> np.ndarray:
    """Mark a layer cell selected if any covered image pixel is selected,
    so a single click survives down to stride 8."""
    sel = np.zeros((layer_h, layer_w), dtype=bool)
    rows, cols = np.nonzero(interaction.mask)
    sel[np.minimum(rows // stride, layer_h - 1),
        np.minimum(cols // stride, layer_w - 1)] = True
    return sel


def aggregate_similarity(pyramid: FeaturePyramid,
                         interaction: InteractionMask) -> SimilarityMap:
    """Per-layer similarity, upsampled to image resolution and averaged."""
    if (interaction.height, interaction.width) != (
        pyramid.image_height,
        pyramid.image_width,
    ):
        raise ValueError("interaction extents must match the pyramid's image")
    acc = np.zeros((pyramid.image_height, pyramid.image_width))
    for layer in pyramid.layers:
        cells = project_mask(interaction, layer.stride, layer.height, layer.width)
        sim = layer_similarity(layer, cells)
        acc += resample_bilinear(sim, pyramid.image_height, pyramid.image_width)
    return SimilarityMap(np.clip(acc / len(pyramid.layers), 0.0, 1.0))


def extract_features(image: Image, backend) -> FeaturePyramid:
    return backend.extract(image)

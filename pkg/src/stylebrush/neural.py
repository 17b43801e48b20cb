"""Neural feature backend: forward passes through pretrained weights.

Weights arrive in an ISTC tensor container with entries named

    enc.stage{k}.conv{j}.kernel   (out_ch, in_ch, kh, kw) float32
    enc.stage{k}.conv{j}.bias     (out_ch,) float32
    dec.stage{k}.conv{j}.kernel / .bias

Encoder stage k applies its convolutions (reflection padding, rectified)
and is tapped after the first rectification; 2x2 max pooling sits between
stages. The decoder mirrors the encoder: stages applied from the highest
index down, nearest-neighbor 2x upsampling between stages, no rectifier on
the very last convolution, output clamped to [0, 1].
"""

from __future__ import annotations

import re

import numpy as np

from .core import Image
from .errors import ConfigurationError
from .features import FeatureMap, FeaturePyramid, LAYER_STRIDES

_NAME_RE = re.compile(
    r"^(enc|dec)\.stage(\d+)\.conv(\d+)\.(kernel|bias)$"
)


def _conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Reflection-padded 2-D convolution, channels-first float64."""
    out_c, in_c, kh, kw = kernel.shape
    if x.shape[0] != in_c:
        raise ConfigurationError(
            f"input has {x.shape[0]} channels, kernel expects {in_c}"
        )
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    if ph or pw:
        x = np.pad(x, ((0, 0), (ph, ph), (pw, pw)), mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    out = np.einsum("oikl,ihwkl->ohw", kernel, windows, optimize=True)
    return out + bias[:, None, None]


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _max_pool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ConfigurationError(
            f"extents {(h, w)} must be even to pool; pad the input first"
        )
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def _upsample2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


class _ConvStack:
    """Ordered conv layers grouped into stages, validated for chaining."""

    def __init__(self, side: str, entries: dict):
        stages: dict[int, dict[int, dict[str, np.ndarray]]] = {}
        for (k, j, part), arr in entries.items():
            stages.setdefault(k, {}).setdefault(j, {})[part] = arr
        if not stages:
            raise ConfigurationError(f"no {side} weights in the container")
        if sorted(stages) != list(range(1, len(stages) + 1)):
            raise ConfigurationError(f"{side} stages must be 1..K contiguous")
        self.stages: list[list[tuple[np.ndarray, np.ndarray]]] = []
        for k in sorted(stages):
            convs = stages[k]
            if sorted(convs) != list(range(1, len(convs) + 1)):
                raise ConfigurationError(
                    f"{side}.stage{k} convolutions must be 1..J contiguous"
                )
            layer = []
            for j in sorted(convs):
                parts = convs[j]
                if "kernel" not in parts or "bias" not in parts:
                    raise ConfigurationError(
                        f"{side}.stage{k}.conv{j} needs both kernel and bias"
                    )
                kern = np.asarray(parts["kernel"], dtype=np.float64)
                bias = np.asarray(parts["bias"], dtype=np.float64)
                if kern.ndim != 4:
                    raise ConfigurationError(
                        f"{side}.stage{k}.conv{j}.kernel must be rank 4"
                    )
                if bias.shape != (kern.shape[0],):
                    raise ConfigurationError(
                        f"{side}.stage{k}.conv{j}.bias shape {bias.shape} "
                        f"does not match {kern.shape[0]} output channels"
                    )
                layer.append((kern, bias))
            self.stages.append(layer)
        # Channel chain: every conv's input must be the previous output.
        prev = None
        for k, layer in enumerate(self.stages, start=1):
            for j, (kern, _) in enumerate(layer, start=1):
                if prev is not None and kern.shape[1] != prev:
                    raise ConfigurationError(
                        f"{side}.stage{k}.conv{j} expects {kern.shape[1]} "
                        f"input channels but receives {prev}"
                    )
                prev = kern.shape[0]

    @property
    def input_channels(self) -> int:
        return self.stages[0][0][0].shape[1]

    @property
    def output_channels(self) -> int:
        return self.stages[-1][-1][0].shape[0]

    def first_conv_out(self, stage_index: int) -> int:
        return self.stages[stage_index][0][0].shape[0]


class NeuralBackend:
    """Encoder/decoder forward passes over container weights.

    The decoder is optional until decode() is used. Feature extraction taps
    the output after the first rectification of each encoder stage.
    """

    tag = "neural"
    transfer_stride = 8

    def __init__(self, weights: dict[str, np.ndarray]):
        enc_entries: dict = {}
        dec_entries: dict = {}
        for name, arr in weights.items():
            m = _NAME_RE.match(name)
            if m is None:
                raise ConfigurationError(f"unrecognized weight name {name!r}")
            side, k, j, part = m.groups()
            target = enc_entries if side == "enc" else dec_entries
            target[(int(k), int(j), part)] = arr
        self.encoder = _ConvStack("enc", enc_entries)
        self.decoder = _ConvStack("dec", dec_entries) if dec_entries else None
        if self.decoder is not None:
            tap = self.encoder.first_conv_out(len(self.encoder.stages) - 1)
            if self.decoder.input_channels != tap:
                raise ConfigurationError(
                    f"decoder expects {self.decoder.input_channels} input "
                    f"channels; the final encoder stage tap yields {tap}"
                )

    def encode(self, x: np.ndarray) -> list[np.ndarray]:
        """Stage taps for a channels-first tensor: for each stage, the
        activation after its first rectification. Pooling follows each
        stage except the last."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ConfigurationError("encode input must be (channels, H, W)")
        taps = []
        n_stages = len(self.encoder.stages)
        for k, layer in enumerate(self.encoder.stages, start=1):
            is_last_stage = k == n_stages
            for j, (kern, bias) in enumerate(layer, start=1):
                x = _relu(_conv2d(x, kern, bias))
                if j == 1:
                    taps.append(x)
                if is_last_stage and j == 1:
                    break  # nothing after the final tap is needed
            if not is_last_stage:
                x = _max_pool2(x)
        return taps

    def extract(self, image: Image) -> FeaturePyramid:
        if len(self.encoder.stages) != 4:
            raise ConfigurationError(
                f"feature extraction needs 4 encoder stages, "
                f"container has {len(self.encoder.stages)}"
            )
        if image.height % 8 or image.width % 8:
            raise ConfigurationError(
                "neural extraction needs extents divisible by 8; pad first"
            )
        x = np.ascontiguousarray(image.data.transpose(2, 0, 1))
        taps = self.encode(x)
        layers = tuple(
            FeatureMap(layer_index=i + 1, stride=LAYER_STRIDES[i], data=tap)
            for i, tap in enumerate(taps)
        )
        return FeaturePyramid(
            layers=layers,
            backend=self.tag,
            image_height=image.height,
            image_width=image.width,
        )

    def transfer_features(self, image: Image) -> np.ndarray:
        """The deepest tap (stride 8) carries the style statistics."""
        return self.extract(image).layers[3].data

    def decode(self, tensor: np.ndarray) -> np.ndarray:
        """Decode stage-tap features back to pixel space, clamped [0, 1].

        Stages run from the highest index down with 2x nearest upsampling
        between them; the final convolution has no rectifier.
        """
        if self.decoder is None:
            raise ConfigurationError("container provides no decoder weights")
        x = np.asarray(tensor, dtype=np.float64)
        if x.ndim != 3:
            raise ConfigurationError("decode input must be (channels, H, W)")
        n_stages = len(self.decoder.stages)
        for pos, layer in enumerate(reversed(self.decoder.stages)):
            is_last_stage = pos == n_stages - 1
            for j, (kern, bias) in enumerate(layer, start=1):
                x = _conv2d(x, kern, bias)
                if not (is_last_stage and j == len(layer)):
                    x = _relu(x)
            if not is_last_stage:
                x = _upsample2(x)
        return np.clip(x, 0.0, 1.0)

    def features_to_image(self, tensor: np.ndarray) -> Image:
        out = self.decode(tensor)
        if out.shape[0] != 3:
            raise ConfigurationError(
                f"decoded tensor has {out.shape[0]} channels, expected 3"
            )
        return Image(out.transpose(1, 2, 0))


def identity_weights(stages: int, channels: int = 1) -> dict[str, np.ndarray]:
    """Toy container content: 1x1 identity kernels and zero biases for both
    encoder and decoder, one convolution per stage. With these, encoding is
    the identity on non-negative inputs and decoding is a pure 2^(K-1)x
    nearest upsampling."""
    eye = np.eye(channels, dtype=np.float32).reshape(channels, channels, 1, 1)
    zero = np.zeros(channels, dtype=np.float32)
    weights: dict[str, np.ndarray] = {}
    for k in range(1, stages + 1):
        for side in ("enc", "dec"):
            weights[f"{side}.stage{k}.conv1.kernel"] = eye.copy()
            weights[f"{side}.stage{k}.conv1.bias"] = zero.copy()
    return weights

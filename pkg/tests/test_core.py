"""Image container, masks, parameters, and resampling primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylebrush.core import (
    CLICK,
    MAX_IMAGE_SIDE,
    SCRIBBLE,
    WHOLE_IMAGE,
    Image,
    InteractionMask,
    Params,
    PenetrationMap,
    SimilarityMap,
    check_image_limits,
    decode_png,
    downsample_area,
    encode_png,
    field_values,
    load_png,
    resample_bilinear,
    save_png,
)
from stylebrush.errors import ResourceLimitError

from conftest import random_image


class TestImage:
    def test_valid_construction(self):
        img = random_image(1, 8, 9)
        assert img.height == 8
        assert img.width == 9
        assert img.data.dtype == np.float64

    def test_array_is_readonly(self):
        img = random_image(1)
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 0.5

    def test_rejects_small_extents(self):
        with pytest.raises(ValueError):
            Image(np.zeros((7, 8, 3)))
        with pytest.raises(ValueError):
            Image(np.zeros((8, 7, 3)))

    def test_rejects_bad_shape_and_range(self):
        with pytest.raises(ValueError):
            Image(np.zeros((8, 8)))
        with pytest.raises(ValueError):
            Image(np.full((8, 8, 3), 1.5))
        with pytest.raises(ValueError):
            Image(np.full((8, 8, 3), np.nan))

    def test_from_array_clamps_when_asked(self):
        arr = np.linspace(-0.5, 1.5, 8 * 8 * 3).reshape(8, 8, 3)
        img = Image.from_array(arr, clamp=True)
        assert img.data.min() >= 0.0
        assert img.data.max() <= 1.0

    def test_limits(self):
        check_image_limits(random_image(0, 8, 8))
        big = Image(np.zeros((8, MAX_IMAGE_SIDE + 1, 3)))
        with pytest.raises(ResourceLimitError):
            check_image_limits(big)


class TestPng:
    def test_decode_encode_fixed_point(self):
        # 8-bit data survives the float round trip exactly.
        rng = np.random.default_rng(3)
        raw = rng.integers(0, 256, size=(9, 8, 3), dtype=np.uint8)
        img = decode_png(encode_png(Image(raw / 255.0)))
        assert np.array_equal(img.data, raw / 255.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_quantized_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        raw = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        once = decode_png(encode_png(Image(raw / 255.0)))
        twice = decode_png(encode_png(once))
        assert np.array_equal(once.data, twice.data)

    def test_file_round_trip(self, tmp_path):
        img = random_image(7, 8, 12)
        path = tmp_path / "x.png"
        save_png(img, path)
        back = load_png(path)
        # One quantization, at most half a code value per channel.
        assert np.abs(back.data - img.data).max() <= 0.5 / 255


class TestInteractionMask:
    def test_click(self):
        m = InteractionMask.click(8, 8, 2, 3)
        assert m.kind == CLICK
        assert m.pixels() == [(2, 3)]

    def test_scribble_and_kind_inference(self):
        m = InteractionMask.scribble(8, 8, [(1, 1), (1, 2), (2, 1)])
        assert m.kind == SCRIBBLE
        assert sorted(m.pixels()) == [(1, 1), (1, 2), (2, 1)]

    def test_whole_is_all_pixels(self):
        m = InteractionMask.whole(8, 9)
        assert m.kind == WHOLE_IMAGE
        assert m.to_field().sum() == 72

    def test_all_pixels_infers_whole(self):
        every = [(r, c) for r in range(8) for c in range(8)]
        m = InteractionMask.from_pixels(8, 8, every)
        assert m.kind == WHOLE_IMAGE

    def test_from_pixels_validation(self):
        with pytest.raises(ValueError):
            InteractionMask.from_pixels(8, 8, [])
        with pytest.raises(ValueError):
            InteractionMask.from_pixels(8, 8, [(8, 0)])
        with pytest.raises(ValueError):
            InteractionMask.from_pixels(8, 8, [(-1, 0)])

    def test_pad_to_zero_extends(self):
        m = InteractionMask.click(8, 8, 2, 3)
        p = m.pad_to(16, 16)
        assert p.height == 16 and p.width == 16
        assert p.pixels() == [(2, 3)]
        assert p.kind == CLICK

    def test_pad_whole_keeps_selection_not_kind(self):
        # Zero extension of an all-ones mask selects only the original
        # region, which is no longer every pixel of the padded grid.
        p = InteractionMask.whole(8, 8).pad_to(8, 16)
        assert p.kind == SCRIBBLE
        assert p.to_field().sum() == 64


class TestFieldWrappers:
    def test_similarity_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SimilarityMap(np.full((4, 4), 1.1))
        with pytest.raises(ValueError):
            PenetrationMap(np.full((4, 4), np.nan))

    def test_field_values_unwraps(self):
        arr = np.zeros((4, 4))
        assert field_values(SimilarityMap(arr)) is not None
        assert np.array_equal(field_values(arr), arr)


class TestParams:
    def test_defaults(self):
        p = Params()
        assert p.v == 1.0
        assert p.r == 10.0
        assert p.epsilon == 0.01
        assert p.alpha == 0.7
        assert p.dt == 1.0
        assert p.cg_tolerance == 1e-8
        assert p.cg_max_iters is None
        assert p.max_steps == 2000
        assert p.face_interp == "min"

    @pytest.mark.parametrize("kw", [
        {"v": 0.0}, {"v": -1.0}, {"r": -0.1}, {"epsilon": 0.0},
        {"alpha": 1.0}, {"alpha": -0.1}, {"dt": 0.0},
        {"cg_tolerance": 0.0}, {"cg_max_iters": 0}, {"max_steps": 0},
        {"face_interp": "cubic"},
    ])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(Exception):
            Params(**kw)


class TestResampleBilinear:
    def test_hand_1x2_to_1x4(self):
        # Endpoint-aligned linear interpolation of [0, 1].
        out = resample_bilinear(np.array([[0.0, 1.0]]), 1, 4)
        assert np.allclose(out, [[0.0, 1 / 3, 2 / 3, 1.0]], atol=1e-12)

    def test_endpoints_preserved(self):
        f = np.arange(12.0).reshape(3, 4)
        out = resample_bilinear(f, 9, 16)
        assert out[0, 0] == f[0, 0]
        assert out[-1, -1] == f[-1, -1]

    def test_constant_stays_constant(self):
        out = resample_bilinear(np.full((3, 3), 0.4), 7, 11)
        assert np.allclose(out, 0.4, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6),
           st.integers(1, 13), st.integers(1, 13))
    def test_output_within_input_hull(self, seed, h, w, th, tw):
        rng = np.random.default_rng(seed)
        f = rng.random((h, w))
        out = resample_bilinear(f, th, tw)
        assert out.shape == (th, tw)
        assert out.min() >= f.min() - 1e-12
        assert out.max() <= f.max() + 1e-12


class TestDownsampleArea:
    def test_divisible_is_block_mean(self):
        f = np.arange(16.0).reshape(4, 4)
        out = downsample_area(f, 2, 2)
        expect = np.array([
            [f[:2, :2].mean(), f[:2, 2:].mean()],
            [f[2:, :2].mean(), f[2:, 2:].mean()],
        ])
        assert np.allclose(out, expect, atol=1e-12)

    def test_hand_1x3_to_1x2(self):
        # Cell boundaries at 1.5: left gets [a, b/2], right gets [b/2, c],
        # each normalized by covered area 1.5.
        a, b, c = 2.0, 4.0, 8.0
        out = downsample_area(np.array([[a, b, c]]), 1, 2)
        assert np.allclose(out, [[(a + b / 2) / 1.5, (b / 2 + c) / 1.5]],
                           atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 9),
           st.integers(1, 9), st.integers(1, 9))
    def test_mean_preserved(self, seed, h, w, th, tw):
        # Area weighting is a partition of the source cells, so the
        # grand mean is exact regardless of divisibility.
        th = min(th, h)
        tw = min(tw, w)
        rng = np.random.default_rng(seed)
        f = rng.random((h, w))
        out = downsample_area(f, th, tw)
        assert out.shape == (th, tw)
        assert abs(out.mean() - f.mean()) <= 1e-12

"""Shared fixtures and image builders for the test suite."""

import numpy as np
import pytest

from stylebrush.core import Image


def random_image(seed: int, height: int = 64, width: int = 64) -> Image:
    """Uniform random RGB noise. Good for statistics, bad for similarity."""
    rng = np.random.default_rng(seed)
    return Image(rng.random((height, width, 3)))


def soft_image(seed: int, height: int = 64, width: int = 64) -> Image:
    """Mid-range random noise; statistics transfers between two of these
    stay inside the sRGB gamut, so no clipping disturbs channel stats."""
    rng = np.random.default_rng(seed)
    return Image(0.25 + 0.5 * rng.random((height, width, 3)))


def blocky_image(seed: int, height: int = 64, width: int = 64,
                 block: int = 8) -> Image:
    """Piecewise-constant random image; blocks survive pooling exactly."""
    rng = np.random.default_rng(seed)
    base = rng.random((height // block, width // block, 3))
    return Image(np.kron(base, np.ones((block, block, 1))))


def two_tone_image(height: int = 64, width: int = 64) -> Image:
    """Left half red, right half blue; the classic similarity probe."""
    arr = np.zeros((height, width, 3))
    arr[:, : width // 2, 0] = 0.9
    arr[:, width // 2:, 2] = 0.9
    return Image(arr)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)

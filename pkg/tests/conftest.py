"""Shared helpers for the test suite."""
import numpy as np
import pytest

from omra.frames import Frame, Sequence


def random_rgb(seed: int, h: int, w: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(
        0, 256, (h, w, 3), dtype=np.uint8)


def random_frame(seed: int, h: int, w: int) -> Frame:
    return Frame.from_rgb(random_rgb(seed, h, w))


def multiscale_rgb(seed: int, h: int, w: int) -> np.ndarray:
    """Random texture with energy at several spatial scales.

    Pure white noise decorrelates under box downsampling wherever the true
    displacement is fractional at a pyramid level, so coarse search levels
    see no SAD basin.  Adding smoothed octaves keeps every level matchable.
    """
    from scipy.ndimage import gaussian_filter
    rng = np.random.default_rng(seed)
    acc = np.zeros((h, w, 3))
    for sigma in (0, 2, 8):
        n = rng.normal(0.0, 1.0, (h, w, 3))
        if sigma:
            n = gaussian_filter(n, (sigma, sigma, 0), mode="wrap")
            n /= n.std()
        acc += n
    acc /= acc.std()
    return np.clip(np.floor(acc * 55 + 128.5), 0, 255).astype(np.uint8)


def constant_frame(value: int, h: int, w: int) -> Frame:
    return Frame.from_rgb(np.full((h, w, 3), value, np.uint8))


def noisy_static_sequence(seed: int, h: int, w: int, n: int,
                          sigma: float = 2.0) -> Sequence:
    """A fixed random texture with per-frame additive noise."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, (h, w, 3)).astype(np.float64)
    frames = []
    for t in range(n):
        img = base + rng.normal(0, sigma, base.shape)
        frames.append(Frame.from_rgb(
            np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)))
    return Sequence(frames)


@pytest.fixture(scope="session")
def warm_kernels():
    """Force numba compilation once so timed tests measure steady state."""
    from omra.flow import EstimatorConfig, estimate_flow
    f = random_frame(0, 64, 64)
    estimate_flow(f, f, EstimatorConfig())
    return True

"""Deterministic synthetic test sequences: seeded pseudorandom texture,
global pan with circular wrap and bilinear sub-pixel sampling, and optional
additive Gaussian noise.

Two texture spectra are available: ``white`` (independent uniform samples)
and ``layered`` (white noise plus a smoothed low-frequency layer).  The
layered texture keeps coarse-to-fine block matching well conditioned: pure
white noise decorrelates under box downsampling, so a pyramid search has no
SAD basin at coarse levels whenever the true displacement is fractional
there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataError
from .frames import Frame, Sequence

NOISE_STREAM_SALT = 7919
LAYERED_WHITE_VAR = 0.8   # variance fraction of the white component
LAYERED_SIGMA = 8.0       # blur of the low-frequency layer, in pixels
LAYERED_STD = 55.0        # overall texture standard deviation


@dataclass(frozen=True)
class SynthSpec:
    width: int
    height: int
    frame_count: int
    velocity: tuple[float, float] = (0.0, 0.0)
    texture_seed: int = 0
    noise_sigma: float = 0.0
    motion: str = "pan_wrap"
    texture: str = "white"


def _wrap_shift(base: np.ndarray, sx: float, sy: float) -> np.ndarray:
    """Circularly shift an (h, w, 3) image by a possibly fractional amount,
    sampling bilinearly with wraparound."""
    h, w = base.shape[:2]
    if sx == int(sx) and sy == int(sy):
        return np.roll(base, (int(sy), int(sx)), axis=(0, 1))
    ys = (np.arange(h) - sy) % h
    xs = (np.arange(w) - sx) % w
    y0 = ys.astype(np.int64) % h
    x0 = xs.astype(np.int64) % w
    y1 = (y0 + 1) % h
    x1 = (x0 + 1) % w
    fy = (ys - np.floor(ys))[:, None, None]
    fx = (xs - np.floor(xs))[None, :, None]
    b = base.astype(np.float64)
    top = b[y0][:, x0] * (1 - fx) + b[y0][:, x1] * fx
    bot = b[y1][:, x0] * (1 - fx) + b[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return np.floor(out + 0.5).astype(np.uint8)


def _base_texture(spec: SynthSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.texture_seed)
    if spec.texture == "white":
        return rng.integers(0, 256, (spec.height, spec.width, 3),
                            dtype=np.uint8)
    if spec.texture == "layered":
        shape = (spec.height, spec.width, 3)
        white = rng.normal(0.0, 1.0, shape)
        smooth = gaussian_filter(rng.normal(0.0, 1.0, shape),
                                 (LAYERED_SIGMA, LAYERED_SIGMA, 0),
                                 mode="wrap")
        smooth /= smooth.std()
        tex = (np.sqrt(LAYERED_WHITE_VAR) * white
               + np.sqrt(1.0 - LAYERED_WHITE_VAR) * smooth)
        return np.clip(np.floor(tex * LAYERED_STD + 128.5),
                       0, 255).astype(np.uint8)
    raise DataError(f"unknown texture kind {spec.texture}")


def synth(spec: SynthSpec) -> Sequence:
    """Generate the sequence described by the spec; bit-identical per spec."""
    if spec.motion not in ("pan_wrap", "static"):
        raise DataError(f"unknown motion kind {spec.motion}")
    base = _base_texture(spec)
    vx, vy = spec.velocity if spec.motion == "pan_wrap" else (0.0, 0.0)
    frames = []
    for t in range(spec.frame_count):
        if vx == 0 and vy == 0:
            img = base
        else:
            img = _wrap_shift(base, vx * t, vy * t)
        if spec.noise_sigma > 0:
            nrng = np.random.default_rng(
                [spec.texture_seed, NOISE_STREAM_SALT, t])
            noise = nrng.normal(0.0, spec.noise_sigma, img.shape)
            img = np.clip(np.floor(img + noise + 0.5), 0, 255).astype(np.uint8)
        frames.append(Frame.from_rgb(img))
    return Sequence(frames)

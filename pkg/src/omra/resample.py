"""Spatial resampling of frames and flow fields.

Downsampling is an iterated 2x box average; upsampling is bilinear with
half-sample phase alignment.  Flow upsampling additionally rescales every
displacement vector by the scale factor.
"""
from __future__ import annotations

import numpy as np

from .errors import DataError
from .flow import FlowField
from .frames import Frame

SCALE_FACTORS = (1, 2, 4, 8)


def check_scale(s: int) -> None:
    if s not in SCALE_FACTORS:
        raise DataError(f"invalid scale factor {s}, expected one of {SCALE_FACTORS}")


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def downsample_frame(frame: Frame, s: int) -> Frame:
    """Downsample by log2(s) successive 2x box-average passes."""
    check_scale(s)
    if s == 1:
        return frame
    if frame.padded_height % s or frame.padded_width % s:
        raise DataError(f"padded dims not divisible by {s}")
    p = frame.planes.astype(np.int32)
    t = s
    while t > 1:
        p = (p[:, 0::2, 0::2] + p[:, 0::2, 1::2]
             + p[:, 1::2, 0::2] + p[:, 1::2, 1::2] + 2) // 4
        t //= 2
    return Frame(width=-(-frame.width // s), height=-(-frame.height // s),
                 planes=p.astype(np.uint8))


def _phase_coords(n_out: int, s: int, n_in: int) -> np.ndarray:
    """Source sample positions with half-sample phase alignment, edge-clamped."""
    return np.clip((np.arange(n_out) + 0.5) / s - 0.5, 0, n_in - 1)


def _bilinear_up(a: np.ndarray, s: int) -> np.ndarray:
    """Upsample a 2-D float array by s with phase-aligned bilinear sampling."""
    h, w = a.shape
    ys = _phase_coords(h * s, s, h)
    xs = _phase_coords(w * s, s, w)
    y0 = ys.astype(np.int64)
    x0 = xs.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    row0 = a[y0][:, x0] * (1 - fx) + a[y0][:, x1] * fx
    row1 = a[y1][:, x0] * (1 - fx) + a[y1][:, x1] * fx
    return row0 * (1 - fy) + row1 * fy


def upsample_frame(frame: Frame, s: int, width: int, height: int) -> Frame:
    """Bilinear-upsample a frame by s; output true dims are given explicitly."""
    check_scale(s)
    if s == 1:
        return frame
    out = np.empty((3, frame.padded_height * s, frame.padded_width * s), np.uint8)
    for c in range(3):
        up = _bilinear_up(frame.planes[c].astype(np.float64), s)
        out[c] = np.floor(up + 0.5).astype(np.uint8)
    if out.shape[1] < height or out.shape[2] < width:
        raise DataError(
            f"upsample target {width}x{height} exceeds {out.shape[2]}x{out.shape[1]}"
        )
    return Frame(width=width, height=height, planes=out)


def upsample_flow(flow: FlowField, s: int) -> FlowField:
    """Bilinear-upsample a flow field by s and rescale vectors by s.

    A motion of d pixels at 1/s resolution is s*d pixels at full resolution;
    quarter-pel integer precision is preserved by rounding half away from zero.
    """
    check_scale(s)
    if s == 1:
        return flow
    dx = _round_half_away(_bilinear_up(flow.dx.astype(np.float64), s) * s)
    dy = _round_half_away(_bilinear_up(flow.dy.astype(np.float64), s) * s)
    return FlowField(dx.astype(np.int32), dy.astype(np.int32))

"""Conditional coding of flow field pairs given their predictors.

Flows are subsampled to one vector per grid block, predicted by the
collocated predictor vector and then by the left-neighbor residual, and the
doubly-differenced values are written with signed exp-Golomb codes.  Coding
is lossless at the block-lattice level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitReader, BitWriter
from .errors import BitstreamError, DataError
from .flow import FlowField, densify_lattice

PLANE_ORDER = ("past.dx", "past.dy", "future.dx", "future.dy")


@dataclass(frozen=True)
class MotionPayload:
    data: bytes
    bit_count: int


def _lattice(plane: np.ndarray, grid: int) -> np.ndarray:
    """Block-center sample of a dense component plane."""
    c = grid // 2
    return plane[c::grid, c::grid]


def _planes(m_past: FlowField, m_future: FlowField) -> list[np.ndarray]:
    return [m_past.dx, m_past.dy, m_future.dx, m_future.dy]


def _check(m_past, m_future, mp_past, mp_future, grid):
    shapes = {f.dx.shape for f in (m_past, m_future, mp_past, mp_future)}
    if len(shapes) != 1:
        raise DataError(f"flow dimension mismatch: {shapes}")
    h, w = m_past.dx.shape
    if h % grid or w % grid:
        raise DataError(f"flow dims {w}x{h} not divisible by grid {grid}")


def encode_flows(m_past: FlowField, m_future: FlowField,
                 mp_past: FlowField, mp_future: FlowField,
                 grid: int = 8) -> tuple[MotionPayload, FlowField, FlowField]:
    """Encode both flows against their predictors; returns the payload and
    the reconstructed (densified) flows the decoder will also produce."""
    _check(m_past, m_future, mp_past, mp_future, grid)
    h, w = m_past.dx.shape
    writer = BitWriter()
    lattices = []
    for m_plane, mp_plane in zip(_planes(m_past, m_future),
                                 _planes(mp_past, mp_future)):
        lat = _lattice(m_plane, grid).astype(np.int64)
        plat = _lattice(mp_plane, grid).astype(np.int64)
        res = lat - plat
        diff = res.copy()
        diff[:, 1:] -= res[:, :-1]
        writer.write_se_array(diff.ravel())
        lattices.append(lat)
    payload = MotionPayload(writer.getvalue(), writer.bit_count)
    dxp, dyp = densify_lattice(lattices[0], lattices[1], h, w, grid)
    dxf, dyf = densify_lattice(lattices[2], lattices[3], h, w, grid)
    return payload, FlowField(dxp, dyp), FlowField(dxf, dyf)


def decode_flows(payload: MotionPayload, mp_past: FlowField,
                 mp_future: FlowField, grid: int = 8,
                 cap_qpel: int | None = None) -> tuple[FlowField, FlowField]:
    """Exact inverse of encode_flows at the block-lattice level."""
    _check(mp_past, mp_future, mp_past, mp_future, grid)
    h, w = mp_past.dx.shape
    nby, nbx = h // grid, w // grid
    reader = BitReader(payload.data)
    lattices = []
    for mp_plane in _planes(mp_past, mp_future):
        plat = _lattice(mp_plane, grid).astype(np.int64)
        diff = reader.read_se_array(nby * nbx).reshape(nby, nbx)
        res = np.cumsum(diff, axis=1)
        lat = res + plat
        if cap_qpel is not None and np.abs(lat).max(initial=0) > cap_qpel:
            raise BitstreamError(
                f"decoded flow vector exceeds capability bound {cap_qpel}"
            )
        lattices.append(lat)
    dxp, dyp = densify_lattice(lattices[0], lattices[1], h, w, grid)
    dxf, dyf = densify_lattice(lattices[2], lattices[3], h, w, grid)
    return FlowField(dxp, dyp), FlowField(dxf, dyf)

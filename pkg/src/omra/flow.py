"""Capability-bounded pyramidal block-matching flow estimation, linear-motion
flow prediction, backward warping, and bidirectional predictor synthesis."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BitstreamError, DataError
from .frames import Frame


@dataclass(eq=False)
class FlowField:
    """Dense displacement field in quarter-pixel integer units.

    A stored component value q represents a displacement of q/4 pixels.
    """

    dx: np.ndarray  # int32 (h, w)
    dy: np.ndarray  # int32 (h, w)

    @property
    def width(self) -> int:
        return self.dx.shape[1]

    @property
    def height(self) -> int:
        return self.dx.shape[0]

    def to_bytes(self) -> bytes:
        """Serialize as (width u32, height u32, dx plane, dy plane) int16 LE."""
        head = struct.pack("<II", self.width, self.height)
        return head + self.dx.astype("<i2").tobytes() + self.dy.astype("<i2").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "FlowField":
        if len(data) < 8:
            raise BitstreamError("flow dump truncated")
        w, h = struct.unpack_from("<II", data)
        need = 8 + 2 * 2 * w * h
        if len(data) < need:
            raise BitstreamError("flow dump truncated")
        plane = w * h
        dx = np.frombuffer(data, "<i2", plane, offset=8).reshape(h, w)
        dy = np.frombuffer(data, "<i2", plane, offset=8 + 2 * plane).reshape(h, w)
        return cls(dx.astype(np.int32), dy.astype(np.int32))


@dataclass(frozen=True)
class EstimatorConfig:
    """Pyramid search parameters.

    The estimator cannot return displacements larger than
    ``search_radius * (2**pyramid_levels - 1)`` pixels per component; that
    bound is the deliberate capability limit of the estimator.
    """

    pyramid_levels: int = 3
    block: int = 8
    search_radius: int = 4

    @property
    def cap_pixels(self) -> int:
        return self.search_radius * (2 ** self.pyramid_levels - 1)


def _luma(frame: Frame) -> np.ndarray:
    """Integer luma proxy: rounded (R + 2G + B) / 4."""
    p = frame.planes.astype(np.int32)
    return (p[0] + 2 * p[1] + p[2] + 2) // 4


def _box_down2(a: np.ndarray) -> np.ndarray:
    """2x box average with rounding half away from zero (inputs nonnegative)."""
    return (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2] + 2) // 4


@njit(cache=True)
def _sad(cur, ref, y0, x0, vy, vx, block):  # pragma: no cover - numba
    h, w = ref.shape
    s = 0
    for r in range(block):
        yy = y0 + r + vy
        if yy < 0:
            yy = 0
        elif yy > h - 1:
            yy = h - 1
        for c in range(block):
            xx = x0 + c + vx
            if xx < 0:
                xx = 0
            elif xx > w - 1:
                xx = w - 1
            d = cur[y0 + r, x0 + c] - ref[yy, xx]
            s += d if d >= 0 else -d
    return s


@njit(cache=True)
def _search_level(cur, ref, base_vx, base_vy, radius, block):  # pragma: no cover
    """Full search of +-radius around per-block base vectors.

    Ties in SAD break toward the smaller vector magnitude, then smaller dy,
    then smaller dx, making the result independent of scan order.
    """
    h, w = cur.shape
    nby, nbx = h // block, w // block
    out_vx = np.zeros((nby, nbx), np.int32)
    out_vy = np.zeros((nby, nbx), np.int32)
    for by in range(nby):
        for bx in range(nbx):
            y0, x0 = by * block, bx * block
            bvx, bvy = base_vx[by, bx], base_vy[by, bx]
            best_sad = np.int64(1) << 60
            best_mag = np.int64(0)
            best_vx = np.int32(0)
            best_vy = np.int32(0)
            for oy in range(-radius, radius + 1):
                vy = bvy + oy
                for ox in range(-radius, radius + 1):
                    vx = bvx + ox
                    sad = np.int64(_sad(cur, ref, y0, x0, vy, vx, block))
                    mag = np.int64(vx) * vx + np.int64(vy) * vy
                    if (sad < best_sad
                            or (sad == best_sad
                                and (mag < best_mag
                                     or (mag == best_mag
                                         and (vy < best_vy
                                              or (vy == best_vy
                                                  and vx < best_vx)))))):
                        best_sad = sad
                        best_mag = mag
                        best_vx = vx
                        best_vy = vy
            out_vx[by, bx] = best_vx
            out_vy[by, bx] = best_vy
    return out_vx, out_vy


@njit(cache=True)
def _subpel_refine(cur, ref, vx, vy, block):  # pragma: no cover - numba
    """Quarter-pel offsets from a parabolic fit through SAD at {-1, 0, +1}.

    The fitted vertex is clamped to +-0.75 px and truncated toward zero when
    quantized to quarter-pel units.
    """
    nby, nbx = vx.shape
    qx = np.zeros((nby, nbx), np.int32)
    qy = np.zeros((nby, nbx), np.int32)
    for by in range(nby):
        for bx in range(nbx):
            y0, x0 = by * block, bx * block
            v_x, v_y = vx[by, bx], vy[by, bx]
            s0 = _sad(cur, ref, y0, x0, v_y, v_x, block)
            sxm = _sad(cur, ref, y0, x0, v_y, v_x - 1, block)
            sxp = _sad(cur, ref, y0, x0, v_y, v_x + 1, block)
            den = sxm + sxp - 2 * s0
            if den > 0:
                off = (sxm - sxp) / (2.0 * den)
                if off > 0.75:
                    off = 0.75
                elif off < -0.75:
                    off = -0.75
                qx[by, bx] = np.int32(off * 4.0)
            sym = _sad(cur, ref, y0, x0, v_y - 1, v_x, block)
            syp = _sad(cur, ref, y0, x0, v_y + 1, v_x, block)
            den = sym + syp - 2 * s0
            if den > 0:
                off = (sym - syp) / (2.0 * den)
                if off > 0.75:
                    off = 0.75
                elif off < -0.75:
                    off = -0.75
                qy[by, bx] = np.int32(off * 4.0)
    return qx, qy


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def densify_lattice(lat_dx: np.ndarray, lat_dy: np.ndarray, height: int,
                    width: int, block: int) -> tuple[np.ndarray, np.ndarray]:
    """Expand a per-block vector lattice to a dense per-pixel field by
    bilinear interpolation of the block-center vector grid."""
    def expand(lat: np.ndarray) -> np.ndarray:
        nby, nbx = lat.shape
        ys = np.clip((np.arange(height) - (block - 1) / 2.0) / block, 0, nby - 1)
        xs = np.clip((np.arange(width) - (block - 1) / 2.0) / block, 0, nbx - 1)
        y0 = np.minimum(ys.astype(np.int64), nby - 1)
        x0 = np.minimum(xs.astype(np.int64), nbx - 1)
        y1 = np.minimum(y0 + 1, nby - 1)
        x1 = np.minimum(x0 + 1, nbx - 1)
        fy = (ys - y0)[:, None]
        fx = (xs - x0)[None, :]
        lf = lat.astype(np.float64)
        row0 = lf[y0][:, x0] * (1 - fx) + lf[y0][:, x1] * fx
        row1 = lf[y1][:, x0] * (1 - fx) + lf[y1][:, x1] * fx
        return _round_half_away(row0 * (1 - fy) + row1 * fy).astype(np.int32)

    return expand(lat_dx), expand(lat_dy)


def _check_dims(cur: Frame, ref: Frame) -> None:
    if cur.planes.shape != ref.planes.shape:
        raise DataError(
            f"dimension mismatch: {cur.planes.shape} vs {ref.planes.shape}"
        )


def estimate_flow(cur: Frame, ref: Frame, cfg: EstimatorConfig) -> FlowField:
    """Backward flow mapping ``cur`` pixels into ``ref``.

    Coarse-to-fine full search over a luma pyramid, quarter-pel parabolic
    refinement at the finest level, then bilinear densification of the block
    lattice.  Components are clamped to the capability bound.
    """
    _check_dims(cur, ref)
    h, w = cur.padded_height, cur.padded_width
    div = cfg.block * (1 << (cfg.pyramid_levels - 1))
    if h % div or w % div:
        raise DataError(
            f"dimensions {w}x{h} not divisible by {div} "
            f"(block {cfg.block}, {cfg.pyramid_levels} pyramid levels)"
        )

    cur_pyr = [_luma(cur)]
    ref_pyr = [_luma(ref)]
    for _ in range(cfg.pyramid_levels - 1):
        cur_pyr.append(_box_down2(cur_pyr[-1]))
        ref_pyr.append(_box_down2(ref_pyr[-1]))

    vx = vy = None
    for level in range(cfg.pyramid_levels - 1, -1, -1):
        c, r = cur_pyr[level], ref_pyr[level]
        nby, nbx = c.shape[0] // cfg.block, c.shape[1] // cfg.block
        if vx is None:
            base_vx = np.zeros((nby, nbx), np.int32)
            base_vy = np.zeros((nby, nbx), np.int32)
        else:
            parent_y = np.minimum(np.arange(nby) // 2, vx.shape[0] - 1)
            parent_x = np.minimum(np.arange(nbx) // 2, vx.shape[1] - 1)
            base_vx = 2 * vx[parent_y][:, parent_x]
            base_vy = 2 * vy[parent_y][:, parent_x]
        vx, vy = _search_level(c, r, base_vx, base_vy,
                               cfg.search_radius, cfg.block)

    qx, qy = _subpel_refine(cur_pyr[0], ref_pyr[0], vx, vy, cfg.block)
    lat_dx = vx * 4 + qx
    lat_dy = vy * 4 + qy
    dx, dy = densify_lattice(lat_dx, lat_dy, h, w, cfg.block)
    cap_q = 4 * cfg.cap_pixels
    return FlowField(np.clip(dx, -cap_q, cap_q), np.clip(dy, -cap_q, cap_q))


def predict_flows(ref_past: Frame, ref_future: Frame,
                  cfg: EstimatorConfig) -> tuple[FlowField, FlowField]:
    """Decoder-derivable flow predictors under a linear-motion midpoint
    assumption: half the reference-to-reference flow, rounded toward zero."""
    _check_dims(ref_past, ref_future)
    g = estimate_flow(ref_future, ref_past, cfg)

    def halve(a: np.ndarray) -> np.ndarray:
        return np.where(a >= 0, a // 2, -((-a) // 2)).astype(np.int32)

    hx, hy = halve(g.dx), halve(g.dy)
    return FlowField(hx, hy), FlowField(-hx, -hy)


def warp(ref: Frame, flow: FlowField) -> tuple[Frame, np.ndarray]:
    """Backward-warp ``ref`` by ``flow`` with bilinear sampling.

    Returns the warped frame and a validity mask; samples that fall outside
    the frame are edge-clamped and marked invalid.
    """
    h, w = ref.padded_height, ref.padded_width
    if (flow.height, flow.width) != (h, w):
        raise DataError(
            f"flow dims {flow.width}x{flow.height} do not match frame {w}x{h}"
        )
    yy, xx = np.mgrid[0:h, 0:w]
    px = xx + flow.dx / 4.0
    py = yy + flow.dy / 4.0
    valid = (px >= 0) & (px <= w - 1) & (py >= 0) & (py <= h - 1)
    px = np.clip(px, 0, w - 1)
    py = np.clip(py, 0, h - 1)
    x0 = px.astype(np.int64)
    y0 = py.astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = px - x0
    fy = py - y0
    out = np.empty_like(ref.planes)
    for c in range(3):
        p = ref.planes[c].astype(np.float64)
        top = p[y0, x0] * (1 - fx) + p[y0, x1] * fx
        bot = p[y1, x0] * (1 - fx) + p[y1, x1] * fx
        out[c] = np.floor(top * (1 - fy) + bot * fy + 0.5).astype(np.uint8)
    return Frame(ref.width, ref.height, out), valid


def synthesize_predictor(ref_past: Frame, ref_future: Frame,
                         flow_past: FlowField, flow_future: FlowField) -> Frame:
    """Blend the two warped references into the temporal predictor.

    Both warps valid: rounded average; one valid: that sample; neither:
    rounded average of the edge-clamped samples.
    """
    wp, mp = warp(ref_past, flow_past)
    wf, mf = warp(ref_future, flow_future)
    avg = ((wp.planes.astype(np.int32) + wf.planes + 1) // 2).astype(np.uint8)
    only_p = mp & ~mf
    only_f = mf & ~mp
    out = avg.copy()
    out[:, only_p] = wp.planes[:, only_p]
    out[:, only_f] = wf.planes[:, only_f]
    return Frame(ref_past.width, ref_past.height, out)

"""PSNR, bits-per-pixel points, and Bjontegaard delta-rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .frames import Frame, mse

PEAK = 255.0


def psnr_from_mse(m: float) -> float:
    """PSNR in dB; zero MSE reports the lossless sentinel (inf)."""
    if m <= 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / m)


def psnr(a: Frame, b: Frame) -> float:
    return psnr_from_mse(mse(a, b))


@dataclass(frozen=True)
class RdPoint:
    bpp: float
    psnr: float


@dataclass(frozen=True)
class RdCurve:
    points: tuple[RdPoint, ...]

    def __post_init__(self):
        if len(self.points) < 4:
            raise DataError(f"RD curve needs >= 4 points, got {len(self.points)}")
        for p in self.points:
            if p.bpp <= 0 or not math.isfinite(p.psnr):
                raise DataError(f"invalid RD point {p}")
        for a, b in zip(self.points, self.points[1:]):
            if b.bpp <= a.bpp:
                raise DataError("RD curve bpp must be strictly increasing")
            if b.psnr < a.psnr:
                raise DataError("RD curve psnr must be non-decreasing")

    @classmethod
    def from_pairs(cls, pairs) -> "RdCurve":
        pts = sorted((RdPoint(bpp, ps) for ps, bpp in pairs),
                     key=lambda p: p.bpp)
        return cls(tuple(pts))


def curve_to_csv(curve: RdCurve) -> str:
    lines = ["psnr,bpp"]
    lines += [f"{p.psnr:.6f},{p.bpp:.8f}" for p in curve.points]
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str) -> RdCurve:
    pairs = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line or line.lower().startswith("psnr"):
            continue
        ps, bpp = line.split(",")
        pairs.append((float(ps), float(bpp)))
    return RdCurve.from_pairs(pairs)


def _fit(curve: RdCurve) -> tuple[np.ndarray, float, float]:
    ps = np.array([p.psnr for p in curve.points])
    lr = np.log10([p.bpp for p in curve.points])
    return np.polyfit(ps, lr, 3), float(ps.min()), float(ps.max())


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Bjontegaard delta-rate of test against anchor, in percent.

    Cubic fit of log10(bpp) as a function of PSNR for each curve, integrated
    over the common PSNR interval; negative values mean rate savings.
    """
    if len(anchor.points) != 4 or len(test.points) != 4:
        raise DataError("bd_rate expects exactly 4 points per curve")
    pa, lo_a, hi_a = _fit(anchor)
    pt, lo_t, hi_t = _fit(test)
    lo, hi = max(lo_a, lo_t), min(hi_a, hi_t)
    if hi <= lo:
        raise DataError("RD curves have no PSNR overlap")
    ia = np.polyint(pa)
    it = np.polyint(pt)
    avg = (np.polyval(it, hi) - np.polyval(it, lo)
           - np.polyval(ia, hi) + np.polyval(ia, lo)) / (hi - lo)
    return float((10.0 ** avg - 1.0) * 100.0)

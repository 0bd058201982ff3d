"""Residual and intra frame coding: 8x8 orthonormal DCT, uniform
quantization, and zigzag run-length entropy coding.

Per block the stream carries ue(number of nonzero levels), then for each
nonzero in zigzag order ue(preceding zero run) and se(level); no end-of-block
symbol is needed.  The quantization step grows with temporal level and for
non-reference frames, implementing frame-type-aware bit allocation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .bits import BitReader, BitWriter, se_code, ue_code
from .errors import BitstreamError, DataError
from .frames import Frame, _ceil_multiple
from .gop import FrameKind

BLOCK = 8
INTRA_PREDICTOR = 128
LEVEL_STEP_GROWTH = 1.2
NONREF_STEP_GROWTH = 1.2


def _zigzag_order() -> np.ndarray:
    order = sorted(
        ((r + c, -c if (r + c) % 2 else c, r * BLOCK + c)
         for r in range(BLOCK) for c in range(BLOCK))
    )
    return np.array([idx for _, _, idx in order], np.int64)


ZIGZAG = _zigzag_order()
DEZIGZAG = np.argsort(ZIGZAG)


@dataclass(frozen=True)
class QuantParams:
    q_base: float
    temporal_level: int = 0
    kind: FrameKind = FrameKind.REF_B

    @property
    def step(self) -> float:
        step = self.q_base * LEVEL_STEP_GROWTH ** self.temporal_level
        if self.kind == FrameKind.NONREF_B:
            step *= NONREF_STEP_GROWTH
        return max(1.0, step)


@dataclass(frozen=True)
class TexturePayload:
    data: bytes
    bit_count: int


def dct8_forward(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D type-II DCT of an 8x8 block."""
    return scipy.fft.dctn(np.asarray(block, np.float64), norm="ortho")


def dct8_inverse(coefs: np.ndarray) -> np.ndarray:
    return scipy.fft.idctn(np.asarray(coefs, np.float64), norm="ortho")


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return (plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK)
            .transpose(0, 2, 1, 3).reshape(-1, BLOCK, BLOCK))


def _from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return (blocks.reshape(h // BLOCK, w // BLOCK, BLOCK, BLOCK)
            .transpose(0, 2, 1, 3).reshape(h, w))


def _check_dims(x: Frame, predictor: Frame) -> None:
    if x.planes.shape != predictor.planes.shape:
        raise DataError(
            f"dimension mismatch: {x.planes.shape} vs {predictor.planes.shape}"
        )


def _reconstruct(levels: np.ndarray, predictor: Frame, step: float,
                 width: int, height: int) -> Frame:
    """Shared encoder/decoder reconstruction path (must stay bit-identical)."""
    ph, pw = predictor.padded_height, predictor.padded_width
    res = scipy.fft.idctn(levels * step, axes=(1, 2), norm="ortho")
    rec = np.empty((3, ph, pw), np.uint8)
    nb = levels.shape[0] // 3
    for c in range(3):
        plane = _from_blocks(res[c * nb:(c + 1) * nb], ph, pw)
        val = _round_half_away(predictor.planes[c].astype(np.float64) + plane)
        rec[c] = np.clip(val, 0, 255).astype(np.uint8)
    return Frame(width, height, rec)


def encode_residual(x: Frame, predictor: Frame,
                    qp: QuantParams) -> tuple[TexturePayload, Frame]:
    """Code x - predictor; returns the payload and the decoder-identical
    reconstruction."""
    _check_dims(x, predictor)
    step = qp.step
    residual = x.planes.astype(np.int64) - predictor.planes
    blocks = np.concatenate([_to_blocks(residual[c]) for c in range(3)])
    coefs = scipy.fft.dctn(blocks.astype(np.float64), axes=(1, 2), norm="ortho")
    levels = _round_half_away(coefs / step).astype(np.int64)

    z = levels.reshape(-1, BLOCK * BLOCK)[:, ZIGZAG]
    nz_counts = np.count_nonzero(z, axis=1)
    b_idx, pos = np.nonzero(z)
    lev = z[b_idx, pos]
    if b_idx.size:
        first = np.r_[True, b_idx[1:] != b_idx[:-1]]
        prev = np.where(first, -1, np.r_[-1, pos[:-1]])
        runs = pos - prev - 1
        starts = np.flatnonzero(first)
        counts = np.diff(np.r_[starts, b_idx.size])
        within = np.arange(b_idx.size) - np.repeat(starts, counts)
    else:
        runs = within = np.zeros(0, np.int64)

    # Interleave ue(nz) per block with per-coefficient (ue(run), se(level))
    # via a stable sort on (block, position-within-block) keys.
    key_span = 2 * BLOCK * BLOCK + 1
    nz_codes, nz_lens = ue_code(nz_counts)
    run_codes, run_lens = ue_code(runs)
    lev_codes, lev_lens = se_code(lev)
    keys = np.concatenate([
        np.arange(z.shape[0], dtype=np.int64) * key_span,
        b_idx * key_span + 1 + 2 * within,
        b_idx * key_span + 2 + 2 * within,
    ])
    codes = np.concatenate([nz_codes, run_codes, lev_codes])
    lens = np.concatenate([nz_lens, run_lens, lev_lens])
    order = np.argsort(keys, kind="stable")

    writer = BitWriter()
    writer.write_codes(codes[order], lens[order])
    payload = TexturePayload(writer.getvalue(), writer.bit_count)
    return payload, _reconstruct(levels, predictor, step, x.width, x.height)


def decode_residual(payload: TexturePayload, predictor: Frame,
                    qp: QuantParams) -> Frame:
    """Bit-exact inverse of encode_residual."""
    ph, pw = predictor.padded_height, predictor.padded_width
    nb = 3 * (ph // BLOCK) * (pw // BLOCK)
    reader = BitReader(payload.data)
    z = np.zeros((nb, BLOCK * BLOCK), np.int64)
    for b in range(nb):
        pos = -1
        for _ in range(reader.read_ue()):
            pos += reader.read_ue() + 1
            if pos >= BLOCK * BLOCK:
                raise BitstreamError(f"zigzag overrun in block {b}")
            z[b, pos] = reader.read_se()
    levels = z[:, DEZIGZAG].reshape(nb, BLOCK, BLOCK)
    return _reconstruct(levels, predictor, qp.step,
                        predictor.width, predictor.height)


def _constant_predictor(like: Frame) -> Frame:
    planes = np.full_like(like.planes, INTRA_PREDICTOR)
    return Frame(like.width, like.height, planes)


def encode_intra(x: Frame, qp: QuantParams) -> tuple[TexturePayload, Frame]:
    """Intra coding: the residual pipeline against a constant-128 predictor."""
    qp0 = QuantParams(qp.q_base, temporal_level=0, kind=FrameKind.INTRA)
    return encode_residual(x, _constant_predictor(x), qp0)


def decode_intra(payload: TexturePayload, width: int, height: int,
                 qp: QuantParams) -> Frame:
    ph = _ceil_multiple(height, 64)
    pw = _ceil_multiple(width, 64)
    shell = Frame(width, height, np.zeros((3, ph, pw), np.uint8))
    qp0 = QuantParams(qp.q_base, temporal_level=0, kind=FrameKind.INTRA)
    return decode_residual(payload, _constant_predictor(shell), qp0)

"""Sequence encoder/decoder with per-B-frame rate-distortion search over
motion downsampling factors, three pipeline variants, and the container
format.

The encoder is closed-loop: its stored reconstructions are exactly what the
decoder produces, so the RD search and the decoder agree bit for bit.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .bits import leb128_decode, leb128_encode
from .errors import BitstreamError, DataError
from .flow import EstimatorConfig, estimate_flow, predict_flows, synthesize_predictor
from .flow_codec import MotionPayload, decode_flows, encode_flows
from .frames import Frame, Sequence, crop, mse
from .gop import FrameKind, GopEntry, GopPlan, build_plan
from .metrics import psnr_from_mse
from .resample import downsample_frame, upsample_flow, upsample_frame
from .residual_codec import (QuantParams, TexturePayload, decode_intra,
                             decode_residual, encode_intra, encode_residual)

MAGIC = b"OMRA"
VERSION = 1
HEADER_FMT = "<4sBBBHHHBHI"
HEADER_SIZE = struct.calcsize(HEADER_FMT)

VARIANT_OMRA = 0
VARIANT_A = 1
VARIANT_B = 2
VARIANT_FIXED = 3
VARIANT_NAMES = {VARIANT_OMRA: "omra", VARIANT_A: "a",
                 VARIANT_B: "b", VARIANT_FIXED: "fixed"}

GRID_FULL = 8  # flow coding grid at full resolution, in pixels


@dataclass(frozen=True)
class EncoderConfig:
    q_base: float
    lam: float | None = None  # None -> classical coupling 0.85 * q_base**2
    intra_period: int = 32
    variant: int = VARIANT_OMRA
    fixed_s: int = 1
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    scale_set: tuple[int, ...] = (1, 2, 4, 8)

    def resolved(self) -> "ResolvedConfig":
        # Snap to header precision so encoder and decoder use identical values.
        q = round(self.q_base * 10) / 10.0
        lam = self.lam if self.lam is not None else 0.85 * q * q
        lam = round(lam * 100) / 100.0
        if lam <= 0:
            raise DataError(f"lambda must be positive, got {lam}")
        for s in self.scale_set:
            if s not in (1, 2, 4, 8):
                raise DataError(f"invalid scale factor {s} in scale set")
        if not self.scale_set:
            raise DataError("scale set must not be empty")
        if self.variant in (VARIANT_OMRA, VARIANT_A, VARIANT_B) \
                and 1 not in self.scale_set:
            raise DataError("scale set must contain 1 for adaptive variants")
        if self.variant == VARIANT_FIXED and self.fixed_s not in (1, 2, 4, 8):
            raise DataError(f"invalid fixed scale {self.fixed_s}")
        return ResolvedConfig(q, lam, self.intra_period, self.variant,
                              self.fixed_s, self.estimator,
                              tuple(sorted(self.scale_set)))


@dataclass(frozen=True)
class ResolvedConfig:
    q_base: float
    lam: float
    intra_period: int
    variant: int
    fixed_s: int
    estimator: EstimatorConfig
    scale_set: tuple[int, ...]


@dataclass(eq=False)
class RdCandidate:
    s: int
    reconstruction: Frame
    motion_payload: MotionPayload | None
    texture_payload: TexturePayload
    motion_bits: int
    texture_bits: int
    header_bits: int
    distortion: float
    cost: float

    @property
    def total_bits(self) -> int:
        return self.motion_bits + self.texture_bits + self.header_bits


@dataclass(eq=False)
class FrameReport:
    coding_order: int
    display_index: int
    temporal_level: int
    kind: FrameKind
    scale: int
    motion_bits: int
    texture_bits: int
    header_bits: int
    distortion: float
    psnr: float
    cost: float
    costs_by_scale: dict[int, float]
    reconstruction: Frame

    @property
    def total_bits(self) -> int:
        return self.motion_bits + self.texture_bits + self.header_bits


def _effective_estimator(est: EstimatorConfig, w: int, h: int) -> EstimatorConfig:
    """Shrink the pyramid until every level tiles into whole blocks."""
    levels = est.pyramid_levels
    while levels > 1 and (w % (est.block << (levels - 1))
                          or h % (est.block << (levels - 1))):
        levels -= 1
    if w % est.block or h % est.block:
        raise DataError(f"dimensions {w}x{h} not divisible by block {est.block}")
    if levels == est.pyramid_levels:
        return est
    return EstimatorConfig(levels, est.block, est.search_radius)


def _motion_stage(ref_past: Frame, ref_future: Frame, s: int, pipeline: int,
                  est: EstimatorConfig, x: Frame | None = None,
                  payload: MotionPayload | None = None
                  ) -> tuple[MotionPayload, Frame]:
    """Shared encoder/decoder motion path for one B frame at one scale.

    With ``x`` given, estimates and encodes the flows; with ``payload`` given,
    decodes them.  Everything downstream of the coded lattice is common code,
    which is what guarantees encoder/decoder agreement.
    """
    if pipeline == VARIANT_A:
        est_full = _effective_estimator(est, ref_past.padded_width,
                                        ref_past.padded_height)
        mp_p, mp_f = predict_flows(ref_past, ref_future, est_full)
        est_low = _effective_estimator(est, ref_past.padded_width // s,
                                       ref_past.padded_height // s)
        cap_q = 4 * est_low.cap_pixels * s
        if payload is None:
            rp, rf = downsample_frame(ref_past, s), downsample_frame(ref_future, s)
            xs = downsample_frame(x, s)
            m_p = upsample_flow(estimate_flow(xs, rp, est_low), s)
            m_f = upsample_flow(estimate_flow(xs, rf, est_low), s)
            payload, mh_p, mh_f = encode_flows(m_p, m_f, mp_p, mp_f, GRID_FULL)
        else:
            mh_p, mh_f = decode_flows(payload, mp_p, mp_f, GRID_FULL, cap_q)
        mc = synthesize_predictor(ref_past, ref_future, mh_p, mh_f)
        return payload, mc

    rp, rf = downsample_frame(ref_past, s), downsample_frame(ref_future, s)
    est_low = _effective_estimator(est, rp.padded_width, rp.padded_height)
    mp_p, mp_f = predict_flows(rp, rf, est_low)
    grid = max(1, GRID_FULL // s)
    cap_q = 4 * est_low.cap_pixels
    if payload is None:
        xs = downsample_frame(x, s)
        m_p = estimate_flow(xs, rp, est_low)
        m_f = estimate_flow(xs, rf, est_low)
        payload, mh_p, mh_f = encode_flows(m_p, m_f, mp_p, mp_f, grid)
    else:
        mh_p, mh_f = decode_flows(payload, mp_p, mp_f, grid, cap_q)
    if pipeline == VARIANT_B:
        mc_low = synthesize_predictor(rp, rf, mh_p, mh_f)
        mc = upsample_frame(mc_low, s, ref_past.width, ref_past.height)
    else:
        mc = synthesize_predictor(ref_past, ref_future,
                                  upsample_flow(mh_p, s), upsample_flow(mh_f, s))
    return payload, mc


def _pipeline_of(variant: int) -> int:
    return VARIANT_OMRA if variant == VARIANT_FIXED else variant


def encode_bframe_at_scale(x: Frame, ref_past: Frame, ref_future: Frame,
                           s: int, qp: QuantParams,
                           cfg: ResolvedConfig) -> RdCandidate:
    """Run the full pipeline at one scale and assemble an RD candidate."""
    mpayload, mc = _motion_stage(ref_past, ref_future, s,
                                 _pipeline_of(cfg.variant), cfg.estimator, x=x)
    tpayload, xhat = encode_residual(x, mc, qp)
    motion_bits = 8 * len(mpayload.data)
    texture_bits = 8 * len(tpayload.data)
    header_bits = 8 * (1 + len(leb128_encode(len(mpayload.data)))
                       + len(leb128_encode(len(tpayload.data))))
    distortion = mse(x, xhat)
    cost = cfg.lam * distortion + motion_bits + texture_bits + header_bits
    return RdCandidate(s, xhat, mpayload, tpayload, motion_bits,
                       texture_bits, header_bits, distortion, cost)


def select_scale(candidates: list[RdCandidate]) -> RdCandidate:
    """Minimum-cost candidate; ties break toward the smaller scale."""
    if not candidates:
        raise DataError("no candidates to select from")
    return min(candidates, key=lambda c: (c.cost, c.s))


def _pack_header(cfg: ResolvedConfig, width: int, height: int,
                 frame_count: int) -> bytes:
    log2_fixed = cfg.fixed_s.bit_length() - 1 if cfg.variant == VARIANT_FIXED else 0
    return struct.pack(HEADER_FMT, MAGIC, VERSION, cfg.variant, log2_fixed,
                       width, height, frame_count, cfg.intra_period,
                       round(cfg.q_base * 10), round(cfg.lam * 100))


def encode_sequence(seq: Sequence, config: EncoderConfig
                    ) -> tuple[bytes, list[FrameReport]]:
    """Encode a sequence; returns the serialized stream and per-frame report."""
    cfg = config.resolved()
    if len(seq) < 1:
        raise DataError("empty sequence")
    plan = build_plan(len(seq), cfg.intra_period)
    stream = bytearray(_pack_header(cfg, seq.width, seq.height, len(seq)))
    recon: dict[int, Frame] = {}
    reports: list[FrameReport] = []

    for order, entry in enumerate(plan.entries):
        x = seq.frames[entry.display_index]
        if entry.kind == FrameKind.INTRA:
            qp = QuantParams(cfg.q_base, 0, FrameKind.INTRA)
            tpayload, xhat = encode_intra(x, qp)
            mdata = b""
            cand = None
            costs: dict[int, float] = {}
            s = 1
            tdata = tpayload.data
        else:
            qp = QuantParams(cfg.q_base, entry.temporal_level, entry.kind)
            scales = ((cfg.fixed_s,) if cfg.variant == VARIANT_FIXED
                      else cfg.scale_set)
            cands = [encode_bframe_at_scale(x, recon[entry.ref_past],
                                            recon[entry.ref_future],
                                            sc, qp, cfg)
                     for sc in scales]
            cand = select_scale(cands)
            costs = {c.s: c.cost for c in cands}
            s = cand.s
            xhat = cand.reconstruction
            mdata = cand.motion_payload.data
            tdata = cand.texture_payload.data

        hdr = (int(entry.kind) << 6) | ((s.bit_length() - 1) << 4)
        chunk = (bytes([hdr]) + leb128_encode(len(mdata)) + mdata
                 + leb128_encode(len(tdata)) + tdata)
        stream += chunk
        header_bits = 8 * (len(chunk) - len(mdata) - len(tdata))
        d = mse(x, xhat)
        motion_bits = 8 * len(mdata)
        texture_bits = 8 * len(tdata)
        cost = (cand.cost if cand is not None
                else cfg.lam * d + motion_bits + texture_bits + header_bits)
        recon[entry.display_index] = xhat
        reports.append(FrameReport(order, entry.display_index,
                                   entry.temporal_level, entry.kind, s,
                                   motion_bits, texture_bits, header_bits,
                                   d, psnr_from_mse(d), cost, costs, xhat))
    return bytes(stream), reports


@dataclass(frozen=True)
class StreamInfo:
    variant: int
    fixed_s: int
    width: int
    height: int
    frame_count: int
    intra_period: int
    q_base: float
    lam: float


@dataclass(frozen=True)
class StreamFrame:
    entry: GopEntry
    scale: int
    motion_data: bytes
    texture_data: bytes


def parse_stream(data: bytes) -> tuple[StreamInfo, GopPlan, list[StreamFrame]]:
    """Walk the container without decoding payloads."""
    if len(data) < HEADER_SIZE:
        raise BitstreamError("stream shorter than header")
    magic, version, variant, log2_fixed, w, h, n, period, q10, l100 = \
        struct.unpack_from(HEADER_FMT, data)
    if magic != MAGIC:
        raise BitstreamError(f"bad magic {magic!r}")
    if version != VERSION:
        raise BitstreamError(f"unsupported version {version}")
    if variant not in VARIANT_NAMES:
        raise BitstreamError(f"unknown variant code {variant}")
    info = StreamInfo(variant, 1 << log2_fixed, w, h, n, period,
                      q10 / 10.0, l100 / 100.0)
    try:
        plan = build_plan(n, period)
    except DataError as e:
        raise BitstreamError(f"inconsistent header: {e}") from e

    frames = []
    offset = HEADER_SIZE
    for entry in plan.entries:
        if offset >= len(data):
            raise BitstreamError(
                f"stream truncated at frame {entry.display_index}")
        hdr = data[offset]
        offset += 1
        kind = hdr >> 6
        if kind != int(entry.kind):
            raise BitstreamError(
                f"frame {entry.display_index}: signaled kind {kind} "
                f"does not match plan kind {int(entry.kind)}")
        s = 1 << ((hdr >> 4) & 3)
        mlen, offset = leb128_decode(data, offset)
        if offset + mlen > len(data):
            raise BitstreamError(
                f"stream truncated in frame {entry.display_index} motion payload")
        mdata = data[offset:offset + mlen]
        offset += mlen
        tlen, offset = leb128_decode(data, offset)
        if offset + tlen > len(data):
            raise BitstreamError(
                f"stream truncated in frame {entry.display_index} texture payload")
        tdata = data[offset:offset + tlen]
        offset += tlen
        frames.append(StreamFrame(entry, s, mdata, tdata))
    return info, plan, frames


def decode_sequence(data: bytes,
                    estimator: EstimatorConfig | None = None) -> Sequence:
    """Decode a stream back to a display-order sequence at true dimensions.

    The flow estimator configuration is not carried in the stream; pass the
    encoder's configuration when it differed from the default.
    """
    est = estimator if estimator is not None else EstimatorConfig()
    info, plan, frames = parse_stream(data)
    recon: dict[int, Frame] = {}
    for sf in frames:
        entry = sf.entry
        tpayload = TexturePayload(sf.texture_data, 8 * len(sf.texture_data))
        if entry.kind == FrameKind.INTRA:
            qp = QuantParams(info.q_base, 0, FrameKind.INTRA)
            xhat = decode_intra(tpayload, info.width, info.height, qp)
        else:
            qp = QuantParams(info.q_base, entry.temporal_level, entry.kind)
            mpayload = MotionPayload(sf.motion_data, 8 * len(sf.motion_data))
            _, mc = _motion_stage(recon[entry.ref_past], recon[entry.ref_future],
                                  sf.scale, _pipeline_of(info.variant), est,
                                  payload=mpayload)
            xhat = decode_residual(tpayload, mc, qp)
        recon[entry.display_index] = xhat
    return Sequence([crop(recon[i]) for i in range(info.frame_count)])

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The expensive 97-frame four-point sweeps are computed once per session and
shared by the rate-distortion, variant-ordering, temporal-trend, and
complexity criteria.
"""
import time

import numpy as np
import pytest

from conftest import multiscale_rgb, noisy_static_sequence, random_frame
from omra.engine import (EncoderConfig, VARIANT_A, VARIANT_B, VARIANT_FIXED,
                         VARIANT_OMRA, decode_sequence, encode_sequence)
from omra.flow import EstimatorConfig, estimate_flow
from omra.frames import Frame, Sequence
from omra.gop import FrameKind, build_plan
from omra.metrics import RdCurve, bd_rate, psnr_from_mse
from omra.residual_codec import dct8_forward, dct8_inverse
from omra.synth import SynthSpec, synth

Q_SWEEP = (8.0, 12.0, 18.0, 27.0)

# Criterion-3 sequence: 256x256 pan at 3 px/frame over 97 frames with a
# 32-frame intra period (reference displacement 48 px at temporal level 1,
# beyond the 28 px capability bound).  The layered texture keeps full-
# resolution matching well conditioned within the capability bound, and
# light per-frame noise keeps the operating points in a realistic range.
PAN_SPEC = SynthSpec(256, 256, 97, velocity=(3.0, 0.0), texture_seed=0,
                     noise_sigma=4.0, texture="layered")
STATIC_SPEC = SynthSpec(256, 256, 33, velocity=(0.0, 0.0), texture_seed=0,
                        noise_sigma=2.0)


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def sweep(seq, variant, fixed_s=1):
    """Four-point RD curve plus per-frame reports and total wall time."""
    npx = seq.width * seq.height * len(seq)
    pairs, all_reports, wall = [], [], 0.0
    for q in Q_SWEEP:
        cfg = EncoderConfig(q_base=q, variant=variant, fixed_s=fixed_s)
        t0 = time.perf_counter()
        stream, reports = encode_sequence(seq, cfg)
        wall += time.perf_counter() - t0
        m = sum(r.distortion for r in reports) / len(reports)
        pairs.append((psnr_from_mse(m), 8 * len(stream) / npx))
        all_reports.append(reports)
    return RdCurve.from_pairs(pairs), all_reports, wall


@pytest.fixture(scope="session")
def pan_sequence(warm_kernels):
    return synth(PAN_SPEC)


@pytest.fixture(scope="session")
def pan_omra(pan_sequence):
    return sweep(pan_sequence, VARIANT_OMRA)


@pytest.fixture(scope="session")
def pan_fixed1(pan_sequence):
    return sweep(pan_sequence, VARIANT_FIXED, fixed_s=1)


@pytest.fixture(scope="session")
def pan_variant_a(pan_sequence):
    return sweep(pan_sequence, VARIANT_A)


@pytest.fixture(scope="session")
def pan_variant_b(pan_sequence):
    return sweep(pan_sequence, VARIANT_B)


def test_criterion_1_closed_loop_bit_exact(warm_kernels):
    cases = []
    dims = [(64, 64), (48, 32), (100, 50), (80, 56), (64, 96), (72, 40)]
    for i, (w, h) in enumerate(dims):
        cases.append((noisy_static_sequence(i, h, w, 3, sigma=3.0),
                      EncoderConfig(q_base=8.0 + 2 * i, intra_period=2)))
    for i, (w, h) in enumerate(dims):
        seq = synth(SynthSpec(w, h, 5, velocity=(2.0, 1.0), texture_seed=i,
                              noise_sigma=1.0))
        variant = (VARIANT_OMRA, VARIANT_A, VARIANT_B, VARIANT_FIXED,
                   VARIANT_FIXED, VARIANT_OMRA)[i]
        fixed_s = (1, 1, 1, 1, 2, 1)[i]
        cases.append((seq, EncoderConfig(q_base=10.0, intra_period=4,
                                         variant=variant, fixed_s=fixed_s)))
    rng = np.random.default_rng(99)
    for i in range(8):
        w, h = int(rng.integers(3, 13)) * 8, int(rng.integers(3, 13)) * 8
        frames = [random_frame(1000 + 10 * i + t, h, w) for t in range(3)]
        cases.append((Sequence(frames),
                      EncoderConfig(q_base=float(rng.integers(4, 30)),
                                    intra_period=2)))
    assert len(cases) >= 20

    t0 = time.perf_counter()
    failures = 0
    for seq, cfg in cases:
        stream, reports = encode_sequence(seq, cfg)
        dec = decode_sequence(stream, estimator=cfg.estimator)
        by_idx = {r.display_index: r.reconstruction for r in reports}
        for i, f in enumerate(dec.frames):
            if not np.array_equal(f.to_rgb(), by_idx[i].to_rgb()):
                failures += 1
                break
    elapsed = time.perf_counter() - t0
    report(1, failures == 0 and elapsed < 120,
           f"{len(cases)} sequences, {failures} mismatches, "
           f"{elapsed:.1f}s (< 120s)")


def test_criterion_2_rd_dominance(pan_omra):
    _, all_reports, _ = pan_omra
    checked = violations = 0
    for reports in all_reports:
        for r in reports:
            if r.kind == FrameKind.INTRA:
                continue
            checked += 1
            if r.cost > r.costs_by_scale[1]:
                violations += 1
    report(2, checked > 0 and violations == 0,
           f"{checked} B frames, {violations} violations of "
           f"cost(chosen) <= cost(s=1)")


def test_criterion_3_fast_motion_gain(pan_omra, pan_fixed1):
    curve_omra, _, wall_omra = pan_omra
    curve_fixed, _, wall_fixed = pan_fixed1
    bd = bd_rate(curve_fixed, curve_omra)
    elapsed = wall_omra + wall_fixed
    report(3, bd <= -10.0 and elapsed < 600,
           f"bd_rate(FixedS(1) -> OMRA) = {bd:.2f}% (<= -10%), "
           f"encode time {elapsed:.0f}s (< 600s)")


def test_criterion_4_slow_motion_neutrality(warm_kernels):
    seq = synth(STATIC_SPEC)
    t0 = time.perf_counter()
    curve_omra, all_reports, _ = sweep(seq, VARIANT_OMRA)
    curve_fixed, _, _ = sweep(seq, VARIANT_FIXED, fixed_s=1)
    elapsed = time.perf_counter() - t0
    scales = [r.scale for reports in all_reports for r in reports
              if r.kind != FrameKind.INTRA]
    freq_s1 = scales.count(1) / len(scales)
    bd = bd_rate(curve_fixed, curve_omra)
    report(4, freq_s1 >= 0.9 and abs(bd) <= 1.0 and elapsed < 600,
           f"s=1 frequency {freq_s1:.3f} (>= 0.9), |bd_rate| = "
           f"{abs(bd):.3f}% (<= 1%), {elapsed:.0f}s (< 600s)")


def test_criterion_5_temporal_level_trend(pan_omra):
    _, all_reports, _ = pan_omra
    by_level: dict[int, list[int]] = {}
    for reports in all_reports:
        for r in reports:
            if r.kind != FrameKind.INTRA:
                by_level.setdefault(r.temporal_level, []).append(r.scale)
    deepest = max(by_level)
    mean_l1 = float(np.mean(by_level[1]))
    mean_deep = float(np.mean(by_level[deepest]))
    report(5, mean_l1 >= mean_deep,
           f"mean s at level 1 = {mean_l1:.2f} >= mean s at level "
           f"{deepest} = {mean_deep:.2f}")


def test_criterion_6_variant_ordering(pan_omra, pan_fixed1, pan_variant_a,
                                      pan_variant_b):
    curve_fixed = pan_fixed1[0]
    bd_omra = bd_rate(curve_fixed, pan_omra[0])
    bd_a = bd_rate(curve_fixed, pan_variant_a[0])
    bd_b = bd_rate(curve_fixed, pan_variant_b[0])
    ok = bd_omra <= bd_a <= bd_b + 1.0 and abs(bd_b) <= 2.0
    report(6, ok,
           f"OMRA {bd_omra:.2f}% <= VariantA {bd_a:.2f}% <= VariantB "
           f"{bd_b:.2f}% + 1, |VariantB| <= 2%")


def test_criterion_7_metric_correctness():
    pairs = [(30.0, 0.10), (33.0, 0.18), (36.0, 0.34), (39.0, 0.70)]
    curve = RdCurve.from_pairs(pairs)
    ok_identity = bd_rate(curve, curve) == 0.0

    offset = RdCurve.from_pairs([(p, 1.1 * b) for p, b in pairs])
    bd_offset = bd_rate(curve, offset)
    ok_offset = abs(bd_offset - 10.0) <= 0.01

    rng = np.random.default_rng(7)
    ok_oracle = True
    for _ in range(10):
        # Endpoints pinned so the two curves always share a PSNR interval.
        pa_psnr = np.sort(np.r_[30.0, 40.0, 31 + 8 * rng.random(2)])
        pt_psnr = np.sort(np.r_[30.5, 39.5, 31 + 8 * rng.random(2)])
        pa_bpp = np.sort(0.05 + rng.random(4))
        pt_bpp = np.sort(0.05 + rng.random(4))
        anchor = RdCurve.from_pairs(list(zip(pa_psnr, pa_bpp)))
        test = RdCurve.from_pairs(list(zip(pt_psnr, pt_bpp)))
        fa = np.polyfit(pa_psnr, np.log10(pa_bpp), 3)
        ft = np.polyfit(pt_psnr, np.log10(pt_bpp), 3)
        lo = max(pa_psnr.min(), pt_psnr.min())
        hi = min(pa_psnr.max(), pt_psnr.max())
        xs = np.linspace(lo, hi, 10 ** 4)
        avg = np.trapezoid(np.polyval(ft, xs) - np.polyval(fa, xs),
                           xs) / (hi - lo)
        oracle = (10.0 ** avg - 1.0) * 100.0
        if abs(bd_rate(anchor, test) - oracle) > 0.1:
            ok_oracle = False

    ok_psnr = (abs(psnr_from_mse(1.0) - 48.1308) <= 1e-3
               and abs(psnr_from_mse(255.0 ** 2) - 0.0) <= 1e-3
               and abs(psnr_from_mse(100.0) - 28.1308) <= 1e-3)
    report(7, ok_identity and ok_offset and ok_oracle and ok_psnr,
           f"identity {0.0}, offset {bd_offset:.4f}% (10 +- 0.01), "
           f"trapezoid oracle ok={ok_oracle}, psnr cases ok={ok_psnr}")


def test_criterion_8_unit_invariants(warm_kernels):
    t0 = time.perf_counter()
    from omra.bits import BitReader, BitWriter
    from omra.flow import FlowField
    from omra.resample import downsample_frame, upsample_flow, upsample_frame

    # Resample identities and the vector-scaling law.
    f = random_frame(0, 64, 64)
    ok = downsample_frame(f, 1) is f and upsample_frame(f, 1, 64, 64) is f
    fl = FlowField(np.full((8, 8), 12, np.int32), np.full((8, 8), -8, np.int32))
    up = upsample_flow(fl, 2)
    ok &= bool(np.all(up.dx == 24) and np.all(up.dy == -16))

    # estimate_flow: zero on identity, CAP clamp, translation recovery.
    cfg = EstimatorConfig()
    zf = estimate_flow(f, f, cfg)
    ok &= not zf.dx.any() and not zf.dy.any()

    tex = multiscale_rgb(1, 256, 256)
    ref = Frame.from_rgb(tex)
    big = estimate_flow(Frame.from_rgb(np.roll(tex, 40, axis=1)), ref, cfg)
    ok &= int(np.abs(big.dx).max()) <= 4 * cfg.cap_pixels
    ok &= int(np.abs(big.dy).max()) <= 4 * cfg.cap_pixels

    # Recovery across the whole displacement range up to CAP = 28 px: the
    # default pyramid for moderate shifts, and a single-level exhaustive
    # search with the same 28 px bound for shifts near the cap.
    flat = EstimatorConfig(pyramid_levels=1, block=8, search_radius=28)
    assert flat.cap_pixels == cfg.cap_pixels == 28
    m = 72
    for shift, ecfg in ((3, cfg), (9, cfg), (16, cfg),
                        (21, flat), (28, flat)):
        cur = Frame.from_rgb(np.roll(tex, shift, axis=1))
        got = estimate_flow(cur, ref, ecfg)
        err_x = np.abs(got.dx[m:-m, m:-m] / 4.0 + shift).max()
        err_y = np.abs(got.dy[m:-m, m:-m] / 4.0).max()
        ok &= bool(err_x <= 0.25 and err_y <= 0.25)

    # DCT orthonormality.
    x = np.random.default_rng(2).normal(0, 50, (8, 8))
    ok &= bool(np.abs(dct8_inverse(dct8_forward(x)) - x).max() < 1e-6)

    # Exp-Golomb exhaustive round-trip on [-5000, 5000].
    values = np.arange(-5000, 5001)
    w = BitWriter()
    w.write_se_array(values)
    ok &= bool(np.array_equal(BitReader(w.getvalue())
                              .read_se_array(values.size), values))

    # GOP prefix closure and the 5-frame structure.
    plan = build_plan(5, 4)
    ok &= [e.display_index for e in plan.entries] == [0, 4, 2, 1, 3]
    seen = set()
    for e in build_plan(33, 32).entries:
        if e.kind != FrameKind.INTRA:
            ok &= e.ref_past in seen and e.ref_future in seen
        seen.add(e.display_index)

    elapsed = time.perf_counter() - t0
    report(8, bool(ok) and elapsed < 60,
           f"all invariants hold, {elapsed:.1f}s (< 60s)")


def test_criterion_9_complexity_accounting(pan_omra, pan_fixed1):
    _, _, wall_omra = pan_omra
    _, _, wall_fixed = pan_fixed1
    ratio = wall_omra / wall_fixed
    report(9, wall_omra >= wall_fixed,
           f"OMRA encode {wall_omra:.1f}s >= FixedS(1) {wall_fixed:.1f}s, "
           f"ratio {ratio:.2f}")

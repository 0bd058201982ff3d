"""Command-line surface: encoding, decoding, RD sweeps, BD-rate, synthetic
sequence generation, and per-frame / scale-usage reports."""
from __future__ import annotations

import argparse
import sys
import time

from .engine import (EncoderConfig, VARIANT_A, VARIANT_B, VARIANT_FIXED,
                     VARIANT_OMRA, decode_sequence, encode_sequence,
                     parse_stream)
from .errors import BitstreamError, DataError, OmraError
from .frames import load_sequence, save_sequence
from .gop import FrameKind
from .metrics import (RdCurve, bd_rate, curve_from_csv, curve_to_csv,
                      psnr_from_mse)
from .synth import SynthSpec, synth

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BITSTREAM = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_variant(text: str) -> tuple[int, int]:
    if text == "omra":
        return VARIANT_OMRA, 1
    if text == "a":
        return VARIANT_A, 1
    if text == "b":
        return VARIANT_B, 1
    if text.startswith("fixed:"):
        return VARIANT_FIXED, int(text.split(":", 1)[1])
    raise DataError(f"unknown variant {text!r}")


def _parse_scales(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(","))


def _add_input_args(p: _Parser) -> None:
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("png_dir", "raw_rgb24"),
                   default="raw_rgb24")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--frames", type=int, required=True)


def _add_encode_args(p: _Parser) -> None:
    p.add_argument("--intra-period", type=int, default=32)
    p.add_argument("--variant", default="omra")
    p.add_argument("--scales", default="1,2,4,8")
    p.add_argument("--lambda", dest="lam", type=float, default=None)


def _config(args, q_base: float) -> EncoderConfig:
    variant, fixed_s = _parse_variant(args.variant)
    return EncoderConfig(q_base=q_base, lam=args.lam,
                         intra_period=args.intra_period, variant=variant,
                         fixed_s=fixed_s, scale_set=_parse_scales(args.scales))


def _report_csv(reports) -> str:
    lines = ["coding_order,display_index,temporal_level,kind,scale,"
             "motion_bits,texture_bits,header_bits,total_bits,psnr,cost"]
    for r in reports:
        lines.append(
            f"{r.coding_order},{r.display_index},{r.temporal_level},"
            f"{r.kind.name},{r.scale},{r.motion_bits},{r.texture_bits},"
            f"{r.header_bits},{r.total_bits},{r.psnr:.4f},{r.cost:.2f}")
    return "\n".join(lines) + "\n"


def _stream_csv(data: bytes) -> str:
    _, _, frames = parse_stream(data)
    lines = ["coding_order,display_index,temporal_level,kind,scale,"
             "motion_bits,texture_bits,header_bits,total_bits"]
    from .bits import leb128_encode
    for order, sf in enumerate(frames):
        mb = 8 * len(sf.motion_data)
        tb = 8 * len(sf.texture_data)
        hb = 8 * (1 + len(leb128_encode(len(sf.motion_data)))
                  + len(leb128_encode(len(sf.texture_data))))
        lines.append(
            f"{order},{sf.entry.display_index},{sf.entry.temporal_level},"
            f"{sf.entry.kind.name},{sf.scale},{mb},{tb},{hb},{mb + tb + hb}")
    return "\n".join(lines) + "\n"


def _cmd_synth(args) -> int:
    vx, vy = (float(t) for t in args.velocity.split(","))
    spec = SynthSpec(args.width, args.height, args.frames, (vx, vy),
                     args.seed, args.noise, args.motion, args.texture)
    save_sequence(synth(spec), args.out, args.format)
    return 0


def _cmd_encode(args) -> int:
    seq = load_sequence(args.input, args.format, args.width, args.height,
                        args.frames)
    stream, reports = encode_sequence(seq, _config(args, args.q_base))
    with open(args.out, "wb") as fh:
        fh.write(stream)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(_report_csv(reports))
    total_bits = 8 * len(stream)
    bpp = total_bits / (args.width * args.height * args.frames)
    print(f"encoded {args.frames} frames: {total_bits} bits, {bpp:.6f} bpp")
    return 0


def _cmd_decode(args) -> int:
    data = open(args.infile, "rb").read()
    seq = decode_sequence(data)
    save_sequence(seq, args.out, args.format)
    print(f"decoded {len(seq)} frames to {args.out}")
    return 0


def _sweep_curve(seq, args, q_list):
    pairs = []
    w, h, n = seq.width, seq.height, len(seq)
    for q in q_list:
        stream, reports = encode_sequence(seq, _config(args, q))
        total_mse = sum(r.distortion for r in reports) / len(reports)
        bpp = 8 * len(stream) / (w * h * n)
        pairs.append((psnr_from_mse(total_mse), bpp))
    return RdCurve.from_pairs(pairs)


def _cmd_rd_sweep(args) -> int:
    seq = load_sequence(args.input, args.format, args.width, args.height,
                        args.frames)
    q_list = [float(t) for t in args.q_base_list.split(",")]
    curve = _sweep_curve(seq, args, q_list)
    with open(args.out, "w") as fh:
        fh.write(curve_to_csv(curve))
    print(f"wrote {len(curve.points)}-point RD curve to {args.out}")
    return 0


def _cmd_bd_rate(args) -> int:
    anchor = curve_from_csv(open(args.anchor).read())
    test = curve_from_csv(open(args.test).read())
    print(f"{bd_rate(anchor, test):.4f}")
    return 0


def _cmd_profile(args) -> int:
    if args.from_stream:
        csv = _stream_csv(open(args.from_stream, "rb").read())
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(csv)
        else:
            sys.stdout.write(csv)
        return 0
    seq = load_sequence(args.input, args.format, args.width, args.height,
                        args.frames)
    t0 = time.perf_counter()
    _, reports = encode_sequence(seq, _config(args, args.q_base))
    adaptive_secs = time.perf_counter() - t0
    fixed_args = argparse.Namespace(**{**vars(args), "variant": "fixed:1"})
    t0 = time.perf_counter()
    encode_sequence(seq, _config(fixed_args, args.q_base))
    fixed_secs = time.perf_counter() - t0
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(_report_csv(reports))
    print(f"encode_wall_seconds,{args.variant},{adaptive_secs:.3f}")
    print(f"encode_wall_seconds,fixed:1,{fixed_secs:.3f}")
    print(f"encode_wall_ratio,{adaptive_secs / fixed_secs:.3f}")
    return 0


def _cmd_scale_hist(args) -> int:
    info, _, frames = parse_stream(open(args.infile, "rb").read())
    counts: dict[int, dict[int, int]] = {}
    for sf in frames:
        if sf.entry.kind == FrameKind.INTRA:
            continue
        pos = sf.entry.display_index % info.intra_period
        counts.setdefault(pos, {1: 0, 2: 0, 4: 0, 8: 0})[sf.scale] += 1
    lines = ["gop_position,freq_s1,freq_s2,freq_s4,freq_s8"]
    for pos in sorted(counts):
        total = sum(counts[pos].values())
        freqs = [counts[pos][s] / total for s in (1, 2, 4, 8)]
        lines.append(f"{pos}," + ",".join(f"{f:.6f}" for f in freqs))
    out = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="omra")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("synth")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("png_dir", "raw_rgb24"),
                   default="raw_rgb24")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--velocity", default="0,0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--motion", choices=("pan_wrap", "static"),
                   default="pan_wrap")
    p.add_argument("--texture", choices=("white", "layered"),
                   default="white")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("encode")
    _add_input_args(p)
    _add_encode_args(p)
    p.add_argument("--q-base", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("png_dir", "raw_rgb24"),
                   default="raw_rgb24")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("rd-sweep")
    _add_input_args(p)
    _add_encode_args(p)
    p.add_argument("--q-base-list", default="8,12,18,27")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rd_sweep)

    p = sub.add_parser("bd-rate")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=_cmd_bd_rate)

    p = sub.add_parser("profile")
    p.add_argument("--from-stream", default=None)
    p.add_argument("--input")
    p.add_argument("--format", choices=("png_dir", "raw_rgb24"),
                   default="raw_rgb24")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--q-base", type=float, default=12.0)
    _add_encode_args(p)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("scale-hist")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_scale_hist)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except BitstreamError as e:
        print(f"bitstream error: {e}", file=sys.stderr)
        return EXIT_BITSTREAM
    except (DataError, OmraError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()

"""Command line entry point: ``vcmlc {sweep,threshold,throughput,selftest}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import sim

log = logging.getLogger("vcmlc")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with [sweep], [code], [outer], [mcf] sections")
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme", choices=sim.SCHEMES)
    p.add_argument("--channel", choices=sim.CHANNELS)
    p.add_argument("--out", help="CSV output path; a .dat gnuplot file is written next to it")
    p.add_argument("--grid", help='"10 11 12" or "start:stop:step"')
    p.add_argument("--workers", type=int)
    p.add_argument("--min-errors", type=int, dest="min_bit_errors")
    p.add_argument("--max-bits", type=int, dest="max_bits")


def _config(args) -> sim.SweepConfig:
    return sim.load_config(
        args.config, seed=args.seed, scheme=args.scheme, channel=args.channel, out=args.out,
        grid=sim.parse_grid(args.grid) if args.grid else None, workers=args.workers,
        min_bit_errors=args.min_bit_errors, max_bits=args.max_bits)


def _print_result(res: sim.SweepResult) -> None:
    unit = "dB" if res.config.channel == "awgn" else "dBm"
    print(f"# {res.config.scheme} over {res.config.channel}, config_hash={res.config.hash()}")
    print(f"{'grid/' + unit:>10} {'pre_ber':>10} {'post_ber':>10} {'errors':>8} {'bits':>10} {'eff_snr':>8}")
    for p in res.points:
        flag = " (max_bits)" if p.max_bits_hit else ""
        print(f"{p.grid:10.3f} {p.pre_ber:10.3e} {p.post_ber:10.3e} {p.errors:8d} {p.bits:10d} "
              f"{p.eff_snr:8.2f}{flag}")


def cmd_sweep(args) -> int:
    cfg = _config(args)
    res = sim.run_sweep(cfg)
    _print_result(res)
    if cfg.out:
        for path in sim.emit(res, cfg.out, "both"):
            log.info("wrote %s", path)
    return 0


def cmd_threshold(args) -> int:
    if args.csv:
        meta, rows = sim.read_csv(args.csv)
        grid = [r["grid"] for r in rows]
        ber = [r["post_ber"] for r in rows]
        bits = [r["bits"] for r in rows]
    else:
        res = sim.run_sweep(_config(args))
        grid, ber, bits = res.grid, res.post_ber, res.bits
    thr = args.threshold
    c = sim.threshold_crossing(grid, ber, thr, bits)
    print(f"threshold {thr:g}: crossings {', '.join(f'{x:.3f}' for x in c.crossings) or 'none'}")
    if c.interval is None:
        print("operating interval: empty")
    else:
        lo, hi = c.interval
        print(f"operating interval: [{lo:.3f}, {hi:.3f}] (width {hi - lo:.3f})")
    return 0


def cmd_throughput(args) -> int:
    schemes = [args.scheme] if args.scheme else list(sim.SCHEMES)
    for s in schemes:
        r = sim.scheme_rates(s, args.outer_rate)
        net = sim.throughput(r, args.baud, args.pols, args.cores, args.outer_rate)
        print(f"{s}: {r.inner_info_per_2d:.4f} bit/2D after inner code, "
              f"{r.net_per_2d:.4f} bit/2D net, {net:.1f} Gb/s")
    return 0


def cmd_selftest(args) -> int:
    from . import fec, pipeline
    from .lattice import coset_count
    from .vc import all_labels, decode_points, encode_bits, vc_default_16d, vc_toy

    failures = 0

    def check(name, ok):
        nonlocal failures
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}")

    vc_rate = sim.scheme_rates("mlc-vc")
    qam_rate = sim.scheme_rates("bicm-qam")
    check("rates 3.5 / 3.56 bit/2D", round(vc_rate.inner_info_per_2d, 2) == 3.5
          and round(qam_rate.inner_info_per_2d, 2) == 3.56)
    for name in ("z2_4z2", "z4_4d4"):
        spec = vc_toy(name)
        lrb, mrb = all_labels(spec)
        pts, _ = encode_bits(spec, lrb, mrb)
        l2, m2 = decode_points(spec, pts)
        check(f"{name} exhaustive round trip", np.array_equal(l2, lrb) and np.array_equal(m2, mrb))
    spec = vc_default_16d()
    check("default 16D coset count 2^36", coset_count(spec.lat_c, spec.lat_s) == 2 ** 36)
    rng = np.random.default_rng(args.seed or 0)
    toy = pipeline.make_mlc(vc_toy("z2_4z2"), fec.hamming_8_4())
    info = rng.integers(0, 2, (20, toy.info_len), dtype=np.uint8)
    fr = pipeline.mlc_encode(toy, info)
    bits, _ = pipeline.mlc_decode(toy, fr.points, 1e-6)
    check("toy MLC zero-noise loopback", np.array_equal(bits, info))
    bicm = pipeline.make_bicm(fec.hamming_8_4())
    info = rng.integers(0, 2, (20, bicm.info_len), dtype=np.uint8)
    fr = pipeline.bicm_encode(bicm, info)
    bits, _ = pipeline.bicm_demap_decode(bicm, fr.points, 1e-6)
    check("toy BICM zero-noise loopback", np.array_equal(bits, info))
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vcmlc", description="16D Voronoi constellation MLC vs 16QAM BICM")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep", help="run an SNR or launch-power sweep")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("threshold", help="locate outer-threshold crossings")
    _add_common(p)
    p.add_argument("--csv", help="read an existing sweep CSV instead of running one")
    p.add_argument("--threshold", type=float, default=4.7e-3)
    p.set_defaults(func=cmd_threshold)
    p = sub.add_parser("throughput", help="net information rates")
    p.add_argument("--scheme", choices=sim.SCHEMES)
    p.add_argument("--baud", type=float, default=20.0, help="GBd")
    p.add_argument("--pols", type=int, default=2)
    p.add_argument("--cores", type=int, default=4)
    p.add_argument("--outer-rate", type=float, default=0.9373)
    p.set_defaults(func=cmd_throughput)
    p = sub.add_parser("selftest", help="quick consistency checks")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

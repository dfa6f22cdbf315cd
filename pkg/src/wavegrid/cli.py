"""Command-line entry point: ``wavegrid <command> ...``.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import codec as codecs
from .config import SimConfig
from .patchgrid import ConsistencyError, read_wgrd, write_wgrd
from .pipeline import ConservationError, demo_discontinuous, parse_splits, read_sweep_config, run, sweep
from .solver import DomainError, RiemannError
from .threshold import MODES, ThresholdSpec, apply_threshold
from .wavelet import CoefficientSet, WaveletPlan, dwt_nd, idwt_nd

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("wavegrid")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavegrid", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transform", help="compress a WGRD grid into a WGC1 container")
    t.add_argument("--input", required=True, type=Path)
    t.add_argument("--levels", required=True, type=int)
    t.add_argument("--mode", choices=MODES, default="capped")
    t.add_argument("--threshold", type=float, default=0.0)
    t.add_argument("--codec", choices=("csr", "lz"), default="csr")
    t.add_argument("--chunk-size", type=int, default=64 * 1024)
    t.add_argument("--single-precision", action="store_true", help="store values as float32 (lossy)")
    t.add_argument("--output", required=True, type=Path)

    r = sub.add_parser("restore", help="decompress a WGC1 container into a WGRD grid")
    r.add_argument("--input", required=True, type=Path)
    r.add_argument("--output", required=True, type=Path)

    s = sub.add_parser("simulate", help="run a simulation with per-step compression")
    s.add_argument("scheme", choices=("transport", "swe"))
    s.add_argument("--nx", type=int, default=129)
    s.add_argument("--splits", type=parse_splits, default=(2, 2))
    s.add_argument("--cfl", type=float, default=0.45)
    s.add_argument("--t-end", type=float, required=True)
    s.add_argument("--alpha", type=float, default=0.9)
    s.add_argument("--beta", type=float, default=0.9)
    s.add_argument("--length", type=float, default=1.0, help="domain side length")
    s.add_argument("--levels", type=int, default=4)
    s.add_argument("--mode", choices=MODES, default="capped")
    s.add_argument("--threshold", type=float, default=0.01)
    s.add_argument("--codec", choices=("csr", "lz"), default="csr")
    s.add_argument("--chunk-size", type=int, default=64 * 1024)
    s.add_argument("--metrics", required=True, type=Path)
    s.add_argument("--snapshot-at", type=_floats, default=())
    s.add_argument("--no-compression", action="store_true")
    s.add_argument("--strict", action="store_true")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--csv-snapshots", action="store_true")
    s.add_argument("--ratio-window", type=float, default=None, help="average the ratio over t <= this")
    s.add_argument("--no-figures", action="store_true")

    w = sub.add_parser("sweep", help="cartesian sweep over thresholds, levels and codecs")
    w.add_argument("--config", required=True, type=Path)
    w.add_argument("--out-dir", required=True, type=Path)

    d = sub.add_parser("demo", help="built-in demonstrations")
    d.add_argument("name", choices=("discontinuous",))
    d.add_argument("--out-dir", required=True, type=Path)
    return p


def cmd_transform(args) -> int:
    grid = read_wgrd(args.input)
    plan = WaveletPlan(grid.shape[1:], args.levels)
    spec = ThresholdSpec(args.threshold, args.mode)
    coeffs = [dwt_nd(c, plan) for c in grid]
    zeroed = sum(apply_threshold(c, spec) for c in coeffs)
    stacked = np.stack([c.values for c in coeffs])
    patch = codecs.encode_patch(
        stacked, args.levels, args.codec, args.chunk_size, 4 if args.single_precision else 8
    )
    codecs.write_container(args.output, patch)
    print(f"dense_bytes={patch.dense_bytes}")
    print(f"compressed_bytes={patch.compressed_bytes}")
    print(f"ratio={patch.dense_bytes / patch.compressed_bytes:.6g}")
    print(f"nnz={int(np.count_nonzero(stacked))}")
    print(f"zeroed={zeroed}")
    return 0


def cmd_restore(args) -> int:
    patch = codecs.read_container(args.input)
    values = codecs.decode_patch(patch)
    plan = WaveletPlan(patch.dims, patch.levels)
    out = np.stack([idwt_nd(CoefficientSet(plan, v)) for v in values])
    write_wgrd(args.output, out)
    return 0


def cmd_simulate(args) -> int:
    cfg = SimConfig(
        scheme=args.scheme,
        nx=args.nx,
        splits=args.splits,
        cfl=args.cfl,
        t_end=args.t_end,
        alpha=args.alpha,
        beta=args.beta,
        length=args.length,
        levels=args.levels,
        mode=args.mode,
        threshold=args.threshold,
        codec=args.codec,
        chunk_size=args.chunk_size,
        compression=not args.no_compression,
        strict=args.strict,
        threads=args.threads,
        snapshot_at=args.snapshot_at,
        ratio_window=args.ratio_window,
    )
    out_dir = args.metrics.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    res = run(cfg, out_dir=out_dir if cfg.snapshot_at else None, csv_snapshots=args.csv_snapshots)
    res.write_metrics(args.metrics)
    for k, v in res.summary().items():
        print(f"{k}={v}")
    if not args.no_figures:
        from .report import plot_ratio_series, plot_side_by_side

        stem = args.metrics.with_suffix("")
        plot_ratio_series({f"level {cfg.levels}": res.rows}, f"{stem}_ratio.png")
        if res.snapshots:
            plot_side_by_side({"simulated": res.snapshots}, f"{stem}_snapshots.png")
    return 0


def cmd_sweep(args) -> int:
    base, thresholds, levels, codec_specs = read_sweep_config(args.config)
    table = sweep(base, thresholds, levels, codec_specs, args.out_dir)
    from .report import plot_l2, plot_sweep

    plot_sweep(table, args.out_dir / "ratio_vs_threshold.png")
    plot_l2(table, args.out_dir / "l2_vs_threshold.png")
    for row in table:
        print(
            f"{row['codec']:>3} chunk={row['chunk_size'] or '-':>7} level={row['levels']} "
            f"c={row['threshold']:<8g} ratio={row['average_ratio']:.3f} l2={row['final_l2_error']}"
        )
    return 0


def cmd_demo(args) -> int:
    rep = demo_discontinuous(args.out_dir)
    for k, v in rep.items():
        if not isinstance(v, np.ndarray):
            print(f"{k}={v}")
    return 0


COMMANDS = {
    "transform": cmd_transform,
    "restore": cmd_restore,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RiemannError, DomainError, ConsistencyError, ConservationError) as exc:
        # DomainError is a ValueError, so this clause must come first
        print(f"wavegrid: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"wavegrid: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

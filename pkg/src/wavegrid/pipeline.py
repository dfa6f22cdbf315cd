"""Simulation loop with a compress/decompress cycle after every time step."""

from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import codec as codecs
from .config import ConfigError, SimConfig
from .patchgrid import assemble, decompose, global_mass, scatter, sync_ghosts, write_wgrd
from .solver import cfl_dt, exact_transport, fv_step, initial_field, l2_error, make_flux
from .threshold import ThresholdSpec, apply_threshold
from .wavelet import CoefficientSet, WaveletPlan, dwt_nd, idwt_nd, trapezoid_mass

log = logging.getLogger(__name__)

METRICS_FIELDS = (
    "step",
    "time",
    "dense_bytes",
    "compressed_bytes",
    "ratio",
    "nnz",
    "zeroed",
    "global_mass",
    "l2_error",
)
PHASES = ("sync", "step", "dwt", "threshold", "codec", "idwt")
MASS_RTOL = 1e-12


class ConservationError(RuntimeError):
    """Mass changed across a compression cycle (raised under ``strict``)."""


@dataclass
class RunResult:
    config: SimConfig
    rows: list = field(default_factory=list)
    phase_time: dict = field(default_factory=lambda: dict.fromkeys(PHASES, 0.0))
    wall_time: float = 0.0
    snapshots: dict = field(default_factory=dict)  # time -> (components, *dims)
    final: np.ndarray | None = None
    min_value: float = math.inf
    max_value: float = -math.inf
    min_depth: float = math.inf
    max_cycle_mass_error: float = 0.0
    max_mass_drift: float = 0.0
    max_step_overshoot: float = 0.0
    nnz_mismatches: int = 0  # steps where the CSR count differs from a direct count

    def average_ratio(self, t_max: float | None = None) -> float:
        ratios = [r["ratio"] for r in self.rows if t_max is None or r["time"] <= t_max + 1e-12]
        return float(np.mean(ratios)) if ratios else float("nan")

    @property
    def final_l2_error(self) -> float | None:
        return self.rows[-1]["l2_error"] if self.rows else None

    @property
    def overhead(self) -> float:
        step = self.phase_time["step"]
        return (self.wall_time - step) / step if step > 0 else float("nan")

    def write_metrics(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_FIELDS)
            for r in self.rows:
                w.writerow(_fmt(r[k]) for k in METRICS_FIELDS)

    def summary(self) -> dict:
        out = {
            "steps": self.rows[-1]["step"] if self.rows else 0,
            "final_time": self.rows[-1]["time"] if self.rows else 0.0,
            "average_ratio": self.average_ratio(self.config.ratio_window),
            "final_l2_error": self.final_l2_error,
            "max_cycle_mass_error": self.max_cycle_mass_error,
            "max_mass_drift": self.max_mass_drift,
            "wall_time": self.wall_time,
            "overhead": self.overhead,
        }
        for k, v in self.phase_time.items():
            out[f"time_{k}"] = v
        return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _compress_cycle(grid, config: SimConfig, pool, timers):
    """Transform, threshold, encode, decode and invert every patch in place.

    Returns ``(dense_bytes, compressed_bytes, nnz, zeroed, direct_nnz)``
    where ``direct_nnz`` counts nonzero values without the codec.  Each stage
    is a barrier over all patches so stage wall times add up.
    """
    patches = list(grid)
    plan = WaveletPlan(patches[0].logical_dims, config.levels)
    spec = ThresholdSpec(config.threshold, config.mode)

    def run_stage(name, fn, items):
        t0 = time.perf_counter()
        out = list(pool.map(fn, items)) if pool else [fn(i) for i in items]
        timers[name] += time.perf_counter() - t0
        return out

    coeffs = run_stage(
        "dwt", lambda p: [dwt_nd(c, plan) for c in p.logical_view()], patches
    )
    zeroed = run_stage("threshold", lambda cs: sum(apply_threshold(c, spec) for c in cs), coeffs)

    def roundtrip(cs):
        stacked = np.stack([c.values for c in cs])
        enc = codecs.encode_patch(stacked, config.levels, config.codec, config.chunk_size, config.value_width)
        direct = int(np.count_nonzero(stacked))
        nnz = enc.nnz if config.codec == "csr" else direct
        return enc.dense_bytes, enc.compressed_bytes, nnz, codecs.decode_patch(enc), direct

    encoded = run_stage("codec", roundtrip, coeffs)

    def restore(item):
        patch, (_, _, _, decoded, _) = item
        view = patch.logical_view()
        for c in range(decoded.shape[0]):
            view[c] = idwt_nd(CoefficientSet(plan, decoded[c]))

    run_stage("idwt", restore, list(zip(patches, encoded)))
    dense = sum(e[0] for e in encoded)
    comp = sum(e[1] for e in encoded)
    nnz = sum(e[2] for e in encoded)
    direct = sum(e[4] for e in encoded)
    return dense, comp, nnz, sum(zeroed), direct


def _rel(a, b) -> float:
    # normalized by the largest component so zero-sum momenta stay meaningful
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-300))


def run(config: SimConfig, out_dir=None, csv_snapshots: bool = False, progress=None) -> RunResult:
    """Run one simulation, compressing every patch after each time step."""
    t_start = time.perf_counter()
    grid = decompose((config.nx,) * config.ndim, config.splits, config.components, periodic=True)
    scatter(grid, initial_field(config))
    flux = make_flux(config)
    result = RunResult(config)
    timers = result.phase_time
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    pending = sorted(set(float(t) for t in config.snapshot_at))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    mass0 = global_mass(grid)

    def cycle():
        if not config.compression:
            n = sum(int(np.prod(p.logical_dims)) for p in grid) * config.components
            nnz = sum(int(np.count_nonzero(p.logical_view())) for p in grid)
            return 8 * n, 8 * n, nnz, 0, nnz
        before = global_mass(grid)
        sizes = _compress_cycle(grid, config, pool, timers)
        after = global_mass(grid)
        err = _rel(after, before)
        result.max_cycle_mass_error = max(result.max_cycle_mass_error, err)
        if config.strict and err > MASS_RTOL:
            raise ConservationError(f"compression cycle changed mass by {err:.3e} (relative)")
        return sizes

    def record(step, t, sizes):
        dense, comp, nnz, zeroed, direct = sizes
        if nnz != direct:
            result.nnz_mismatches += 1
        mass = global_mass(grid)
        drift = _rel(mass, mass0)
        result.max_mass_drift = max(result.max_mass_drift, drift)
        field_ = assemble(grid, check=config.strict)
        if config.strict and not np.all(np.isfinite(field_)):
            raise ConservationError("non-finite values in the solution")
        if config.scheme == "transport":
            result.min_value = min(result.min_value, float(field_.min()))
            result.max_value = max(result.max_value, float(field_.max()))
            cells = (slice(None),) + (slice(0, -1),) * config.ndim
            exact = exact_transport(t, config)
            l2 = l2_error(field_[cells][0], exact[cells][0], (config.length,) * config.ndim)
        else:
            result.min_depth = min(result.min_depth, float(field_[0].min()))
            l2 = None
        result.rows.append(
            {
                "step": step,
                "time": t,
                "dense_bytes": dense,
                "compressed_bytes": comp,
                "ratio": dense / comp,
                "nnz": nnz,
                "zeroed": zeroed,
                "global_mass": float(mass[0]),
                "l2_error": l2,
            }
        )
        while pending and t >= pending[0] - 1e-9:
            ts = pending.pop(0)
            result.snapshots[ts] = field_.copy()
            if out_dir is not None:
                stem = f"snapshot_t{ts:g}"
                write_wgrd(out_dir / f"{stem}.wgrd", field_)
                if csv_snapshots:
                    for c in range(field_.shape[0]):
                        np.savetxt(out_dir / f"{stem}_c{c}.csv", field_[c].reshape(field_.shape[1], -1), delimiter=",")

    try:
        t = 0.0
        step = 0
        record(step, t, cycle())
        while t < config.t_end * (1 - 1e-12):
            t0 = time.perf_counter()
            sync_ghosts(grid)
            timers["sync"] += time.perf_counter() - t0
            dt = min(cfl_dt((p.logical_view() for p in grid), config), config.t_end - t)
            t0 = time.perf_counter()
            patches = list(grid)

            def advance(p):
                return fv_step(p.values, flux, dt, config.dx)

            new = list(pool.map(advance, patches)) if pool else [advance(p) for p in patches]
            if config.scheme == "transport":
                lo = min(float(p.values.min()) for p in patches)
                hi = max(float(p.values.max()) for p in patches)
                for v in new:
                    inner = v[(slice(None),) + (slice(1, -1),) * config.ndim]
                    over = max(float(inner.max()) - hi, lo - float(inner.min()), 0.0)
                    result.max_step_overshoot = max(result.max_step_overshoot, over)
            for p, v in zip(patches, new):
                p.values = v
            timers["step"] += time.perf_counter() - t0
            t += dt
            step += 1
            record(step, t, cycle())
            if progress:
                progress(step, t)
        result.final = assemble(grid, check=config.strict)
    finally:
        if pool:
            pool.shutdown()
    result.wall_time = time.perf_counter() - t_start
    return result


# --- sweeps -------------------------------------------------------------------


def parse_codec(spec: str) -> tuple:
    """``"csr"`` or ``"lz"`` / ``"lz:<chunk bytes>"``."""
    name, _, size = spec.partition(":")
    if name not in ("csr", "lz"):
        raise ConfigError(f"unknown codec {spec!r}")
    return name, int(size) if size else 64 * 1024


SUMMARY_FIELDS = (
    "codec",
    "chunk_size",
    "levels",
    "threshold",
    "steps",
    "average_ratio",
    "final_l2_error",
    "max_cycle_mass_error",
    "max_mass_drift",
    "wall_time",
    "overhead",
)


def sweep(base: SimConfig, thresholds, levels, codec_specs, out_dir=None) -> list:
    """Cartesian product of runs; one metrics CSV each plus ``summary.csv``."""
    table = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    for spec, lev, thr in itertools.product(codec_specs, levels, thresholds):
        name, chunk = parse_codec(spec) if isinstance(spec, str) else spec
        cfg = base.with_(codec=name, chunk_size=chunk, levels=int(lev), threshold=float(thr), snapshot_at=())
        res = run(cfg)
        s = res.summary()
        row = {"codec": name, "chunk_size": chunk if name == "lz" else "", "levels": int(lev), "threshold": float(thr)}
        row.update({k: s[k] for k in SUMMARY_FIELDS if k in s})
        row["result"] = res
        table.append(row)
        log.info("codec=%s chunk=%s level=%d c=%g ratio=%.2f", name, chunk, lev, thr, s["average_ratio"])
        if out_dir is not None:
            tag = f"{name}{chunk if name == 'lz' else ''}_L{lev}_c{thr:g}"
            res.write_metrics(out_dir / f"metrics_{tag}.csv")
    if out_dir is not None:
        with open(out_dir / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_FIELDS)
            for row in table:
                w.writerow(_fmt(row.get(k)) for k in SUMMARY_FIELDS)
    return table


def read_sweep_config(path) -> tuple:
    """Parse a ``key = value`` file into ``(base SimConfig, thresholds, levels, codecs)``.

    List keys (``thresholds``, ``levels``, ``codecs``) take comma-separated
    values; ``#`` starts a comment.
    """
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            raw[key.strip().replace("-", "_")] = value.strip().strip('"')
    thresholds = [float(x) for x in raw.pop("thresholds", "0").split(",")]
    levels = [int(x) for x in raw.pop("levels", "4").split(",")]
    codec_specs = [x.strip() for x in raw.pop("codecs", "csr").split(",")]
    # validate the base against the shallowest level of the sweep
    kw = {"levels": min(levels)}
    converters = {
        "scheme": str,
        "nx": int,
        "cfl": float,
        "t_end": float,
        "alpha": float,
        "beta": float,
        "g": float,
        "length": float,
        "mode": str,
        "value_width": int,
        "threads": int,
        "ratio_window": float,
        "seed": int,
    }
    for key, value in raw.items():
        if key == "splits":
            kw["splits"] = parse_splits(value)
        elif key in converters:
            try:
                kw[key] = converters[key](value)
            except ValueError:
                raise ConfigError(f"{path}: bad value for {key}: {value!r}") from None
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")
    return SimConfig(**kw), thresholds, levels, codec_specs


def parse_splits(text: str) -> tuple:
    try:
        return tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"bad splits {text!r}, expected e.g. 2x2") from None


# --- discontinuous demo -------------------------------------------------------


def discontinuous_field(n: int = 129, h: float | None = None) -> np.ndarray:
    """``exp(x - y) sin(2 pi (x + y)) * step(y - x**2)`` on ``x = i * h``.

    ``step`` is 1 for non-negative arguments and 2 otherwise.  ``h``
    defaults to ``1 / n``.
    """
    h = 1.0 / n if h is None else h
    x = np.arange(n) * h
    xx, yy = np.meshgrid(x, x, indexing="ij")
    step = np.where(yy - xx**2 >= 0, 1.0, 2.0)
    return np.exp(xx - yy) * np.sin(2 * np.pi * (xx + yy)) * step


def demo_discontinuous(out_dir=None, n: int = 129, levels: int = 6, threshold: float = 0.2, h: float | None = None) -> dict:
    f = discontinuous_field(n, h)
    plan = WaveletPlan(f.shape, levels)
    coeffs = dwt_nd(f, plan)
    zeroed = apply_threshold(coeffs, ThresholdSpec(threshold, "constant"))
    nnz = int(np.count_nonzero(coeffs.values))
    enc = codecs.encode_patch(coeffs.values[None], levels, "csr")
    rec = idwt_nd(coeffs)
    m0, m1 = trapezoid_mass(f), trapezoid_mass(rec)
    report = {
        "grid": f"{n}x{n}",
        "levels": levels,
        "threshold": threshold,
        "total_coefficients": f.size,
        "nonzero_coefficients": nnz,
        "zeroed_details": zeroed,
        "coefficient_ratio": f.size / nnz,
        "csr_bytes": enc.compressed_bytes,
        "dense_bytes": enc.dense_bytes,
        "csr_ratio": enc.dense_bytes / enc.compressed_bytes,
        "mass_before": m0,
        "mass_after": m1,
        "mass_relative_change": abs(m1 - m0) / abs(m0),
        "max_abs_error": float(np.max(np.abs(rec - f))),
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_wgrd(out_dir / "original.wgrd", f[None])
        write_wgrd(out_dir / "reconstructed.wgrd", rec[None])
        with open(out_dir / "demo_report.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("key", "value"))
            for k, v in report.items():
                w.writerow((k, _fmt(v)))
        from .report import plot_demo

        plot_demo(f, coeffs.values, rec, out_dir / "demo_discontinuous.png")
    report["original"] = f
    report["reconstructed"] = rec
    return report

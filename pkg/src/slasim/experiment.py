"""Replicated runs, parameter sweeps and their CSV outputs.

Layout of an experiment directory::

    meta.json            schema version, rng algorithm, master seed
    config.ini           the configuration that was run
    runs.csv             one row per replication (totals and counts; in-flight
                         sessions are priced at their partial mean wait)
    run_000.csv ...      periodic revenue samples of each replication
    aggregate.csv        mean and 95% CI, recomputable by ``verify``

A sweep directory holds ``sweep.csv`` plus one experiment directory per
(policy, value) point under ``points/``.
"""
from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Optional, Sequence

from . import rng as rngmod
from .config import ConfigError, ExperimentConfig, format_config
from .metrics import (
    delay_cdf,
    inflight_projected_revenue,
    rejection_and_violation_rates,
    revenue_rate_series,
    student_t_ci,
)
from .sim import RunResult, run_simulation

SCHEMA_VERSION = 1

SAMPLE_COLUMNS = ["sample", "t_start", "t_end", "revenue", "revenue_rate", "rejection_frac", "violation_frac"]
RUN_COLUMNS = [
    "run", "seed", "duration", "revenue", "revenue_rate", "arrivals", "rejected",
    "completed", "violated", "inflight", "inflight_revenue", "events",
]
AGG_COLUMNS = ["runs", "ci_samples", "revenue_mean", "ci_low", "ci_high", "reject_frac", "violation_frac"]


class MissingColumns(ValueError):
    pass


def money(x: float) -> str:
    """Two implied decimal places, half-even rounding of the shortest float repr."""
    d = Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)
    return str(d.copy_abs() if d == 0 else d)


def rate(x: float) -> str:
    d = Decimal(repr(float(x))).quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN)
    return str(d.copy_abs() if d == 0 else d)


def class_columns(m: int) -> list[str]:
    return [f"a_{i + 1}" for i in range(m)]


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- single experiment ----------------------------------------------------------

def _run_one(args) -> RunResult:
    cfg, seed = args
    return run_simulation(cfg, seed)


def run_replications(cfg: ExperimentConfig, workers: int = 1) -> list[RunResult]:
    seeds = [rngmod.replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    jobs = [(cfg, s) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def write_run_files(out: Path, results: Sequence[RunResult]):
    out.mkdir(parents=True, exist_ok=True)
    cfg = results[0].config
    m = cfg.m
    run_rows = []
    for r, res in enumerate(results):
        samples = revenue_rate_series(res, cfg.sample_period)
        rows = [
            [
                s.index, rate(s.t_start), rate(s.t_end), money(s.revenue), rate(s.revenue_rate),
                rate(s.rejection_fraction), rate(s.violation_fraction),
                *(rate(a) for a in s.accepted_rates),
            ]
            for s in samples
        ]
        _write_csv(out / f"run_{r:03d}.csv", SAMPLE_COLUMNS + class_columns(m), rows)
        _, agg = rejection_and_violation_rates(res)
        done = [0] * m
        for s in res.completed:
            done[s.cls] += 1
        duration = res.duration
        run_rows.append([
            r, res.seed, rate(duration), money(res.total_revenue),
            rate(res.total_revenue / duration if duration > 0 else 0.0),
            agg.arrivals, agg.rejected, agg.completed, agg.violated, len(res.inflight),
            money(inflight_projected_revenue(res)), res.events,
            *(rate(d / duration if duration > 0 else 0.0) for d in done),
        ])
    _write_csv(out / "runs.csv", RUN_COLUMNS + class_columns(m), run_rows)


def aggregate(out: Path) -> list[str]:
    """Aggregate row recomputed from the per-run files in ``out``."""
    runs = _read_csv(out / "runs.csv")
    if not runs:
        raise MissingColumns("runs.csv is empty")
    acols = [c for c in runs[0] if c.startswith("a_")]
    if len(runs) == 1:
        samples = [float(row["revenue_rate"]) for row in _read_csv(out / "run_000.csv")]
    else:
        samples = [float(row["revenue_rate"]) for row in runs]
    if len(samples) >= 2:
        mean, half = student_t_ci(samples)
    else:
        mean = float(runs[0]["revenue_rate"])
        half = math.nan
    arrivals = sum(int(r["arrivals"]) for r in runs)
    rejected = sum(int(r["rejected"]) for r in runs)
    completed = sum(int(r["completed"]) for r in runs)
    violated = sum(int(r["violated"]) for r in runs)
    row = [
        str(len(runs)),
        str(len(samples)),
        rate(mean),
        rate(mean - half) if not math.isnan(half) else "",
        rate(mean + half) if not math.isnan(half) else "",
        rate(rejected / arrivals if arrivals else 0.0),
        rate(violated / completed if completed else 0.0),
    ]
    row += [rate(sum(float(r[c]) for r in runs) / len(runs)) for c in acols]
    return row


def _agg_header(out: Path) -> list[str]:
    with open(out / "runs.csv", newline="") as fh:
        header = next(csv.reader(fh))
    return AGG_COLUMNS + [c for c in header if c.startswith("a_")]


def write_meta(out: Path, cfg: ExperimentConfig, kind: str, **extra):
    meta = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "rng_algorithm": rngmod.ALGORITHM,
        "master_seed": cfg.seed,
        "replications": cfg.replications,
        "notes": cfg.notes,
        **extra,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, out: Path | str, workers: int = 1) -> list[RunResult]:
    """Run ``cfg.replications`` seeded replications and write per-run and aggregate CSVs."""
    out = Path(out)
    cfg.validate()
    out.mkdir(parents=True, exist_ok=True)
    results = run_replications(cfg, workers)
    (out / "config.ini").write_text(format_config(cfg))
    write_meta(out, cfg, "experiment")
    write_run_files(out, results)
    _write_csv(out / "aggregate.csv", _agg_header(out), [aggregate(out)])
    return results


# -- sweeps -------------------------------------------------------------------------

_PARAM = re.compile(r"^classes\[(\d+)\]\.(\w+)$")
_CLASS_FIELDS = ("b", "gamma", "k", "q", "alpha")


def apply_param(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    """Return a copy of ``cfg`` with ``param`` (e.g. ``classes[4].delta``) set."""
    mt = _PARAM.match(param)
    if mt:
        pos = int(mt.group(1)) - 1
        name = mt.group(2)
        if not 0 <= pos < cfg.m:
            raise ConfigError(f"{param}: no such class")
        if name == "delta":
            return cfg.with_delta(pos, value)
        if name in _CLASS_FIELDS:
            classes = list(cfg.classes)
            v = int(value) if name == "k" else value
            classes[pos] = replace(classes[pos], **{name: v})
            return replace(cfg, classes=classes, notes=list(cfg.notes)).validate()
        raise ConfigError(f"{param}: unsupported class field {name!r}")
    if param in ("N", "cluster.N"):
        return replace(cfg, servers=int(value), notes=list(cfg.notes)).validate()
    if param in ("duration", "run.duration"):
        return replace(cfg, duration=value, notes=list(cfg.notes)).validate()
    raise ConfigError(f"unsupported sweep parameter {param!r}")


def param_column(param: str) -> str:
    mt = _PARAM.match(param)
    if mt:
        return f"{mt.group(2)}{mt.group(1)}"
    return re.sub(r"\W+", "_", param).strip("_")


def _fmt_value(v: float) -> str:
    return f"{v:g}"


def run_sweep(
    cfg: ExperimentConfig,
    param: str,
    values: Sequence[float],
    policies: Sequence[str],
    out: Path | str,
    workers: int = 1,
) -> Path:
    """One aggregate row per (policy, value), rows ordered by policy name then value."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    if not policies:
        raise ConfigError("sweep needs at least one policy")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    col = param_column(param)
    points = []
    for policy in sorted(policies):
        for v in sorted(values):
            point_cfg = apply_param(cfg.with_policy(policy), param, v)
            points.append((policy, v, point_cfg))

    header = None
    rows = []
    for policy, v, point_cfg in points:
        pdir = out / "points" / f"{policy}_{_fmt_value(v)}"
        run_experiment(point_cfg, pdir, workers)
        agg = aggregate(pdir)
        if header is None:
            header = ["policy", col, "rho_total"] + _agg_header(pdir)
        rows.append([policy, _fmt_value(v), rate(sum(point_cfg.offered_loads()))] + agg)
    _write_csv(out / "sweep.csv", header, rows)
    write_meta(out, cfg, "sweep", param=param, values=list(values), policies=sorted(policies))
    (out / "config.ini").write_text(format_config(cfg))
    return out / "sweep.csv"


def read_sweep(path: Path | str) -> list[dict[str, str]]:
    return _read_csv(Path(path))


# -- verification ------------------------------------------------------------------

def verify(out: Path | str) -> list[str]:
    """Recompute aggregates from per-run files; returns a list of mismatches."""
    out = Path(out)
    problems = []
    if (out / "aggregate.csv").exists():
        with open(out / "aggregate.csv", newline="") as fh:
            stored = list(csv.reader(fh))
        if stored[1:] != [aggregate(out)]:
            problems.append(f"{out / 'aggregate.csv'}: stored row differs from recomputation")
    if (out / "sweep.csv").exists():
        for row in read_sweep(out / "sweep.csv"):
            pdir = out / "points" / f"{row['policy']}_{_fmt_value(float(list(row.values())[1]))}"
            problems += verify(pdir)
            expected = aggregate(pdir)
            got = list(row.values())[3:]
            if got != expected:
                problems.append(f"{out / 'sweep.csv'}: row {row['policy']} differs from {pdir}")
    if not (out / "aggregate.csv").exists() and not (out / "sweep.csv").exists():
        problems.append(f"{out}: neither aggregate.csv nor sweep.csv present")
    return problems


# -- plot data -----------------------------------------------------------------------

REVENUE_FIGURES = ("fig6a", "fig6c", "fig7a", "fig7b", "fig8a", "fig9a", "fig9b")
SLA_FIGURES = ("fig6b",)


def emit_plot_data(sweep_csv: Path | str, figure: str, out: Path | str) -> Path:
    """Write a whitespace-separated x/y/err column file for one figure."""
    rows = read_sweep(sweep_csv)
    if not rows:
        raise MissingColumns(f"{sweep_csv} has no rows")
    xcol = list(rows[0].keys())[1]
    needed = {"policy", "revenue_mean", "ci_low", "ci_high", "violation_frac"}
    missing = needed - set(rows[0])
    if missing:
        raise MissingColumns(f"{sweep_csv} lacks {sorted(missing)}")
    policies = sorted({r["policy"] for r in rows})
    xs = sorted({float(r[xcol]) for r in rows})
    table = {(r["policy"], float(r[xcol])): r for r in rows}
    header = ["x"]
    for p in policies:
        header += [f"{p}_y", f"{p}_err"]
    lines = ["# " + " ".join(header)]
    for x in xs:
        cells = [f"{x:g}"]
        for p in policies:
            r = table.get((p, x))
            if r is None:
                cells += ["nan", "nan"]
            elif figure in SLA_FIGURES:
                cells += [rate(1.0 - float(r["violation_frac"])), "0"]
            else:
                mean = float(r["revenue_mean"])
                err = (float(r["ci_high"]) - float(r["ci_low"])) / 2 if r["ci_high"] else math.nan
                cells += [rate(mean), rate(err) if not math.isnan(err) else "nan"]
        lines.append(" ".join(cells))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{figure}.dat"
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_delay_cdf(results: dict[str, RunResult], cls: int, out: Path | str, figure: str = "fig8b",
                   grid: Optional[Sequence[float]] = None) -> Path:
    """CDF of per-session mean waits of one class, one column per policy."""
    cdfs = {p: delay_cdf(r, cls, include_inflight=True) for p, r in sorted(results.items())}
    if grid is None:
        top = max(c.values[-1] for c in cdfs.values())
        steps = 200
        grid = [top * i / steps for i in range(steps + 1)]
    lines = ["# x " + " ".join(cdfs)]
    for x in grid:
        lines.append(f"{x:.6g} " + " ".join(rate(c(x)) for c in cdfs.values()))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{figure}.dat"
    path.write_text("\n".join(lines) + "\n")
    return path


# -- presets -------------------------------------------------------------------------

LONG_FACTOR = 10
CDF_DELTA4 = 0.2
CDF_CLASS = 3  # zero-based position of the class whose delays fig8b shows


def run_preset(
    preset,
    out: Path | str,
    replications: int = 1,
    duration: Optional[float] = None,
    long: bool = False,
    seed: Optional[int] = None,
    workers: int = 1,
) -> list[Path]:
    """Sweep a preset over its delta4 grid for each of its policies and emit its figures."""
    out = Path(out)
    cfg = preset.config()
    dur = duration if duration is not None else cfg.duration
    if long:
        dur *= LONG_FACTOR
    cfg = replace(cfg, duration=dur, replications=replications, notes=list(cfg.notes))
    if seed is not None:
        cfg = replace(cfg, seed=seed, notes=list(cfg.notes))
    sweep_csv = run_sweep(cfg, "classes[4].delta", preset.grid, preset.policies, out, workers)
    written = [sweep_csv]
    for fig in preset.figures:
        if fig == "fig8b":
            results = {
                p: run_simulation(
                    apply_param(cfg.with_policy(p), "classes[4].delta", CDF_DELTA4),
                    rngmod.replication_seed(cfg.seed, 0),
                )
                for p in preset.policies
            }
            written.append(emit_delay_cdf(results, CDF_CLASS, out, fig))
        else:
            written.append(emit_plot_data(sweep_csv, fig, out))
    return written

"""Revenue accounting, periodic samples, confidence intervals and delay CDFs.

Revenue is booked when a session's last job completes.  Sessions still in
flight at the end of a run are reported separately.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from statistics import NormalDist, fmean, stdev
from typing import Sequence

from ._ttable import T_TABLE
from .model import ServiceClass, SessionRecord, session_net_revenue


class InsufficientSamples(ValueError):
    pass


class NoData(ValueError):
    pass


@dataclass(frozen=True)
class MetricsSample:
    index: int
    t_start: float
    t_end: float
    revenue: float
    revenue_rate: float
    accepted_rates: tuple[float, ...]
    rejection_fraction: float
    violation_fraction: float


def finalize_session(record: SessionRecord, cls: ServiceClass, now: float = math.nan) -> float:
    """Close a session that has completed all ``k`` jobs and book its net revenue."""
    if record.jobs_completed != cls.k:
        raise ValueError(f"session {record.session_id} has {record.jobs_completed}/{cls.k} jobs done")
    record.state = "completed"
    record.completion_time = now
    record.net_revenue = session_net_revenue(cls.reward, record.cumulative_wait / cls.k, cls.q)
    return record.net_revenue


def revenue_rate_series(result, period: float = 600.0) -> list[MetricsSample]:
    """Consecutive full sample periods of a run; a trailing partial period is dropped."""
    if period <= 0:
        raise ValueError("period must be positive")
    m = result.config.m
    n = int(math.floor(result.duration / period + 1e-9))
    revenue = [0.0] * n
    completed = [[0] * m for _ in range(n)]
    violated = [0] * n
    arrivals = [0] * n
    rejected = [0] * n
    for s in result.completed:
        k = int(s.completion_time // period)
        if k < n:
            revenue[k] += s.net_revenue
            completed[k][s.cls] += 1
            if s.cumulative_wait / s.k > result.config.classes[s.cls].q:
                violated[k] += 1
    for t, _ in result.accepted:
        k = int(t // period)
        if k < n:
            arrivals[k] += 1
    for t, _ in result.rejected:
        k = int(t // period)
        if k < n:
            arrivals[k] += 1
            rejected[k] += 1
    out = []
    for k in range(n):
        done = sum(completed[k])
        out.append(MetricsSample(
            index=k,
            t_start=k * period,
            t_end=(k + 1) * period,
            revenue=revenue[k],
            revenue_rate=revenue[k] / period,
            accepted_rates=tuple(c / period for c in completed[k]),
            rejection_fraction=rejected[k] / arrivals[k] if arrivals[k] else 0.0,
            violation_fraction=violated[k] / done if done else 0.0,
        ))
    return out


def t_quantile(df: int, confidence: float = 0.95) -> float:
    if df < 1:
        raise ValueError("df must be >= 1")
    table = T_TABLE.get(round(confidence, 4))
    if table is None:
        raise ValueError(f"no t table for confidence {confidence}")
    if df <= len(table):
        return table[df - 1]
    return NormalDist().inv_cdf(0.5 + confidence / 2)


def student_t_ci(samples: Sequence[float], confidence: float = 0.95) -> tuple[float, float]:
    """(mean, half-width) of a Student-t confidence interval."""
    n = len(samples)
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    mean = fmean(samples)
    return mean, t_quantile(n - 1, confidence) * stdev(samples, mean) / math.sqrt(n)


@dataclass(frozen=True)
class Rates:
    arrivals: int
    accepted: int
    rejected: int
    completed: int
    violated: int

    @property
    def rejection(self) -> float:
        return self.rejected / self.arrivals if self.arrivals else 0.0

    @property
    def acceptance(self) -> float:
        return self.accepted / self.arrivals if self.arrivals else 0.0

    @property
    def violation(self) -> float:
        return self.violated / self.completed if self.completed else 0.0


def rejection_and_violation_rates(result) -> tuple[list[Rates], Rates]:
    """Per-class and aggregate rejection / SLA-violation fractions."""
    m = result.config.m
    acc = [0] * m
    rej = [0] * m
    done = [0] * m
    bad = [0] * m
    for _, i in result.accepted:
        acc[i] += 1
    for _, i in result.rejected:
        rej[i] += 1
    for s in result.completed:
        done[s.cls] += 1
        if s.cumulative_wait / s.k > result.config.classes[s.cls].q:
            bad[s.cls] += 1
    per = [Rates(acc[i] + rej[i], acc[i], rej[i], done[i], bad[i]) for i in range(m)]
    agg = Rates(sum(acc) + sum(rej), sum(acc), sum(rej), sum(done), sum(bad))
    return per, agg


@dataclass(frozen=True)
class DelayCdf:
    values: tuple[float, ...]

    def __call__(self, x: float) -> float:
        return bisect.bisect_right(self.values, x) / len(self.values)

    def quantile(self, p: float) -> float:
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        idx = min(len(self.values) - 1, max(0, math.ceil(p * len(self.values)) - 1))
        return self.values[idx]


def delay_cdf(result, cls: int, include_inflight: bool = False) -> DelayCdf:
    """Empirical CDF of per-session mean waits for class position ``cls``."""
    values = [s.cumulative_wait / s.k for s in result.completed if s.cls == cls]
    if include_inflight:
        values += [s.cumulative_wait / s.jobs_completed for s in result.inflight if s.cls == cls and s.jobs_completed]
    if not values:
        raise NoData(f"no sessions of class {cls + 1} to build a CDF from")
    return DelayCdf(tuple(sorted(values)))


def inflight_projected_revenue(result) -> float:
    """Net revenue the in-flight sessions would earn at their current partial mean wait."""
    total = 0.0
    for s in result.inflight:
        cls = result.config.classes[s.cls]
        w = s.cumulative_wait / s.jobs_completed if s.jobs_completed else 0.0
        total += session_net_revenue(cls.reward, w, cls.q)
    return total


def revenue_rate(result) -> float:
    return result.total_revenue / result.duration if result.duration > 0 else 0.0

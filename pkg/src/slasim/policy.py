"""Allocation and admission heuristics.

``offered_loads_allocation`` splits the cluster in proportion to weighted
offered loads.  Admission is either threshold based (a per-class cap on
active sessions, chosen by a one-dimensional revenue search) or state based
(``current_state_decide``, which compares predicted revenue with and without
the incoming session at every arrival).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import (
    BoundedProportional,
    Flat,
    Proportional,
    ServiceClass,
    SessionRecord,
    session_net_revenue,
)
from .queueing import (
    TrafficEstimate,
    Unstable,
    erlang_c,
    erlang_loss_distribution,
    ggn_expected_wait,
    mmn_wait_tail,
)

UNBOUNDED = math.inf

ADMIT_ALL = "admit_all"
THRESHOLD = "threshold"
CURRENT_STATE = "current_state"
ORACLE_THRESHOLD = "oracle_threshold"
ADMISSION_POLICIES = (ADMIT_ALL, THRESHOLD, CURRENT_STATE, ORACLE_THRESHOLD)


@dataclass
class ThresholdVector:
    limits: list[float]
    epsilon: float = 0.01

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        for m in self.limits:
            if m != UNBOUNDED and (m < 0 or int(m) != m):
                raise ValueError(f"invalid threshold {m!r}")

    @classmethod
    def unbounded(cls, m: int, epsilon: float = 0.01) -> "ThresholdVector":
        return cls([UNBOUNDED] * m, epsilon)


@dataclass(frozen=True)
class ClassView:
    """Read-only snapshot of one pool: its active sessions and server count."""
    sessions: tuple[SessionRecord, ...]
    queue_length: int
    servers: int

    @property
    def active(self) -> int:
        return len(self.sessions)


QueueStateView = Sequence[ClassView]


@dataclass(frozen=True)
class Decision:
    accept: bool
    donor: Optional[int] = None

    def __bool__(self) -> bool:
        return self.accept


ACCEPT = Decision(True)
REJECT = Decision(False)


# -- allocation ---------------------------------------------------------------

def offered_loads_allocation(
    estimates: Sequence[TrafficEstimate],
    alphas: Sequence[float],
    total: int,
) -> tuple[int, ...]:
    """Split ``total`` servers in proportion to alpha-weighted offered loads."""
    if total < 1:
        raise ValueError("need at least one server")
    m = len(estimates)
    weights = [a * e.offered_load for a, e in zip(alphas, estimates)]
    wsum = sum(weights)
    if wsum <= 0:
        base, extra = divmod(total, m)
        return tuple(base + (1 if i < extra else 0) for i in range(m))

    quotas = [total * w / wsum for w in weights]
    alloc = [int(math.floor(x)) for x in quotas]
    leftover = total - sum(alloc)
    # largest fractional remainder first, lower index on ties
    order = sorted(range(m), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[:leftover]:
        alloc[i] += 1

    for i in range(m):
        if weights[i] > 0 and alloc[i] == 0:
            donor = max(range(m), key=lambda j: (alloc[j], -j))
            if alloc[donor] < 2:
                break
            alloc[donor] -= 1
            alloc[i] = 1
    return tuple(alloc)


# -- threshold admission --------------------------------------------------------

def _state_terms(cls: ServiceClass, est: TrafficEstimate, n: int, j: int) -> tuple[float, float]:
    """(per-job wait tail at q, mean wait) with ``j`` sessions active on ``n`` servers."""
    lam = j * cls.gamma
    b = est.b_hat
    if lam * b >= n:
        return 1.0, math.inf
    tail = mmn_wait_tail(lam, 1.0 / b, n, cls.q)
    wait = ggn_expected_wait(lam, b, est.ca2_hat, est.cs2_hat, n)
    return tail, wait


def _session_load(cls: ServiceClass, est: TrafficEstimate) -> float:
    return est.delta_hat * cls.k / cls.gamma


def estimate_threshold_revenue(
    cls: ServiceClass, est: TrafficEstimate, n: int, limit: float
) -> float:
    """Predicted revenue rate of one pool when at most ``limit`` sessions may be active."""
    if n < 1:
        raise ValueError("need at least one server")
    if limit == 0 or est.delta_hat <= 0:
        return 0.0
    a = _session_load(cls, est)
    if limit == UNBOUNDED:
        limit = default_threshold_cap(a)
    limit = int(limit)
    pi = erlang_loss_distribution(a, limit).probs
    accepted = est.delta_hat * (1.0 - pi[-1])
    j = np.arange(limit + 1)
    session_weight = j * pi
    u = session_weight / session_weight.sum()
    terms = [_state_terms(cls, est, n, jj) for jj in range(1, limit + 1)]
    model = cls.reward
    if isinstance(model, Flat):
        p_violate = sum(u[jj] * terms[jj - 1][0] for jj in range(1, limit + 1))
        return accepted * (model.c - model.r * p_violate)
    if any(u[jj] > 0 and math.isinf(terms[jj - 1][1]) for jj in range(1, limit + 1)):
        mean_wait = math.inf
    else:
        mean_wait = sum(u[jj] * terms[jj - 1][1] for jj in range(1, limit + 1))
    return accepted * session_net_revenue(model, mean_wait, cls.q)


def default_threshold_cap(session_load: float) -> int:
    return int(math.ceil(10 * session_load)) + 50


def threshold_revenue_curve(
    cls: ServiceClass, est: TrafficEstimate, n: int, cap: int
) -> np.ndarray:
    """R(M) for M = 0..cap, using running sums over the unnormalised occupancy terms."""
    out = np.zeros(cap + 1)
    if est.delta_hat <= 0 or cap == 0:
        return out
    a = _session_load(cls, est)
    # unnormalised truncated-Poisson terms; normalisation cancels in every ratio
    terms = erlang_loss_distribution(a, cap).probs
    model = cls.reward
    s0 = terms[0]
    s1 = 0.0
    s_tail = 0.0
    s_wait = 0.0
    unstable_seen = False
    for m in range(1, cap + 1):
        t = terms[m]
        tail, wait = _state_terms(cls, est, n, m)
        s0 += t
        s1 += m * t
        if isinstance(model, Flat):
            s_tail += m * t * tail
        elif math.isinf(wait):
            unstable_seen = unstable_seen or t > 0
        else:
            s_wait += m * t * wait
        accepted = est.delta_hat * (1.0 - t / s0)
        if isinstance(model, Flat):
            out[m] = accepted * (model.c - model.r * s_tail / s1)
        else:
            mean_wait = math.inf if unstable_seen else s_wait / s1
            out[m] = accepted * session_net_revenue(model, mean_wait, cls.q)
    return out


def threshold_search(
    cls: ServiceClass,
    est: TrafficEstimate,
    n: int,
    epsilon: float = 0.01,
    cap: Optional[int] = None,
) -> float:
    """Smallest revenue-maximising threshold, or UNBOUNDED.

    Scans M = 0, 1, 2, ... and stops at the first decrease (returning the M
    before it) or when the gain drops below ``epsilon`` (returning UNBOUNDED).
    """
    if n < 1 or epsilon <= 0:
        raise ValueError("need n >= 1 and epsilon > 0")
    if cap is None:
        cap = default_threshold_cap(_session_load(cls, est))
    curve = threshold_revenue_curve(cls, est, n, cap)
    for m in range(cap):
        gain = curve[m + 1] - curve[m]
        if curve[m + 1] < curve[m]:
            return m
        if not gain >= epsilon:
            return UNBOUNDED
    return UNBOUNDED


def threshold_decide(active_count: int, limit: float) -> Decision:
    return ACCEPT if limit == UNBOUNDED or active_count < limit else REJECT


# -- current-state admission ----------------------------------------------------

def predict_session_final_wait(record: SessionRecord, k: int, w_future: float) -> float:
    remaining = k - record.jobs_completed
    if remaining == 0:
        return record.cumulative_wait / k
    return (record.cumulative_wait + remaining * w_future) / k


def _pool_value(
    cls: ServiceClass,
    est: TrafficEstimate,
    sessions: Sequence[SessionRecord],
    extra_new: int,
    n: int,
) -> float:
    """Predicted net revenue of ``sessions`` plus ``extra_new`` fresh ones on ``n`` servers."""
    count = len(sessions) + extra_new
    if count == 0:
        return 0.0
    if n < 1:
        return -math.inf if _unbounded_loss(cls.reward) else count * _worst_case(cls.reward)
    lam = count * cls.gamma
    b = est.b_hat
    model = cls.reward
    stable = lam * b < n
    if isinstance(model, Flat):
        if not stable:
            return count * (model.c - model.r)
        # probability that the remaining jobs overrun the session's leftover wait budget
        mu = 1.0 / b
        p_wait = erlang_c(n, lam * b)
        decay = n * mu - lam
        total = 0.0
        for s in list(sessions) + [None] * extra_new:
            if s is None:
                budget = cls.q
            else:
                remaining = cls.k - s.jobs_completed
                if remaining == 0:
                    total += session_net_revenue(model, s.cumulative_wait / cls.k, cls.q)
                    continue
                budget = (cls.k * cls.q - s.cumulative_wait) / remaining
            tail = 1.0 if budget < 0 else p_wait * math.exp(-decay * budget)
            total += model.c - model.r * tail
        return total
    w = ggn_expected_wait(lam, b, est.ca2_hat, est.cs2_hat, n) if stable else math.inf
    total = 0.0
    for s in sessions:
        total += session_net_revenue(model, predict_session_final_wait(s, cls.k, w), cls.q)
    if extra_new:
        total += extra_new * session_net_revenue(model, w, cls.q)
    return total


def _unbounded_loss(model) -> bool:
    return isinstance(model, Proportional) and model.r > 0


def _worst_case(model) -> float:
    if isinstance(model, Flat):
        return model.c - model.r
    if isinstance(model, BoundedProportional):
        return model.c - model.r_dprime
    return -math.inf


def _gain(new: float, old: float) -> float:
    if new == -math.inf:
        return -math.inf
    if old == -math.inf:
        return math.inf
    return new - old


def current_state_decide(
    state: QueueStateView,
    incoming: int,
    estimates: Sequence[TrafficEstimate],
    classes: Sequence[ServiceClass],
) -> Decision:
    """Accept the arriving session (optionally pulling one server from a donor
    pool) only when predicted total session revenue strictly increases."""
    i = incoming
    ci, ei, vi = classes[i], estimates[i], state[i]
    base_i = _pool_value(ci, ei, vi.sessions, 0, vi.servers)

    best = _gain(_pool_value(ci, ei, vi.sessions, 1, vi.servers), base_i)
    donor = None
    with_server = None
    for j, vj in enumerate(state):
        if j == i or vj.servers < 2:
            continue
        if with_server is None:
            with_server = _gain(_pool_value(ci, ei, vi.sessions, 1, vi.servers + 1), base_i)
        if with_server == -math.inf:
            break
        cj, ej = classes[j], estimates[j]
        loss_j = _gain(
            _pool_value(cj, ej, vj.sessions, 0, vj.servers - 1),
            _pool_value(cj, ej, vj.sessions, 0, vj.servers),
        )
        if loss_j == -math.inf:
            continue
        gain = with_server + loss_j
        if gain > best:
            best, donor = gain, j
    if best > 0:
        return Decision(True, donor)
    return REJECT


# -- window controller ------------------------------------------------------------

@dataclass
class PolicyConfig:
    admission: str = ADMIT_ALL
    window_events: int = 50
    epsilon: float = 0.01
    ewma_beta: float = 0.5
    threshold_cap: Optional[int] = None

    def __post_init__(self):
        if self.admission not in ADMISSION_POLICIES:
            raise ValueError(f"unknown admission policy {self.admission!r}")
        if self.window_events < 1:
            raise ValueError("window_events must be >= 1")
        if not 0 < self.ewma_beta <= 1:
            raise ValueError("ewma_beta must lie in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class Controller:
    """Holds the live allocation and thresholds; recomputed at configuration epochs."""
    classes: Sequence[ServiceClass]
    servers: int
    config: PolicyConfig
    allocation: tuple[int, ...] = ()
    thresholds: ThresholdVector = field(default=None)
    estimates: list[TrafficEstimate] = field(default_factory=list)

    def __post_init__(self):
        if self.thresholds is None:
            self.thresholds = ThresholdVector.unbounded(len(self.classes), self.config.epsilon)

    @property
    def uses_thresholds(self) -> bool:
        return self.config.admission in (THRESHOLD, ORACLE_THRESHOLD)

    def reconfigure(self, estimates: Sequence[TrafficEstimate]):
        """Refresh the allocation and, for threshold policies, the admission caps."""
        self.estimates = list(estimates)
        alphas = [c.alpha for c in self.classes]
        self.allocation = offered_loads_allocation(self.estimates, alphas, self.servers)
        if self.uses_thresholds:
            limits = []
            for cls, est, n in zip(self.classes, self.estimates, self.allocation):
                if n < 1:
                    limits.append(0)
                    continue
                limits.append(threshold_search(cls, est, n, self.config.epsilon, self.config.threshold_cap))
            self.thresholds = ThresholdVector(limits, self.config.epsilon)
        return self.allocation, self.thresholds


def window_boundary_reconfigure(controller: Controller, estimates: Sequence[TrafficEstimate]):
    return controller.reconfigure(estimates)

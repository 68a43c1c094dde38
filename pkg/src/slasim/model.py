"""Service classes, SLA reward models, sessions and jobs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union


class InvalidParameter(ValueError):
    """A class or reward parameter violates its invariant."""

    def __init__(self, name: str, message: str = ""):
        self.field = name
        super().__init__(f"{name}: {message}" if message else name)


@dataclass(frozen=True)
class Flat:
    """Charge c per session; penalty r whenever the mean wait exceeds q."""
    c: float
    r: float


@dataclass(frozen=True)
class Proportional:
    """Penalty r per second of mean wait above q (unbounded)."""
    c: float
    r: float


@dataclass(frozen=True)
class BoundedProportional:
    """Proportional penalty r_prime up to delay bound t, fixed r_dprime beyond."""
    c: float
    r_prime: float
    t: float
    r_dprime: float


RewardModel = Union[Flat, Proportional, BoundedProportional]


@dataclass(frozen=True)
class ServiceClass:
    index: int
    b: float
    gamma: float
    k: int
    q: float
    reward: RewardModel
    alpha: float = 1.0

    @property
    def charge(self) -> float:
        return self.reward.c


def validate_class(cls: ServiceClass) -> ServiceClass:
    """Return ``cls`` unchanged, or raise InvalidParameter naming the bad field."""
    checks = [
        ("b", cls.b > 0),
        ("gamma", cls.gamma > 0),
        ("k", isinstance(cls.k, int) and cls.k >= 1),
        ("q", cls.q >= 0),
        ("alpha", cls.alpha > 0),
    ]
    for name, ok in checks:
        if not ok:
            raise InvalidParameter(name, f"invalid value {getattr(cls, name)!r}")
    rw = cls.reward
    if rw.c < 0:
        raise InvalidParameter("c", "charge must be >= 0")
    if isinstance(rw, (Flat, Proportional)):
        if rw.r < 0:
            raise InvalidParameter("r", "penalty must be >= 0")
    elif isinstance(rw, BoundedProportional):
        if rw.r_prime < 0:
            raise InvalidParameter("r_prime", "penalty rate must be >= 0")
        if rw.r_dprime < 0:
            raise InvalidParameter("r_dprime", "penalty must be >= 0")
        if not rw.t > cls.q:
            raise InvalidParameter("t", f"delay bound {rw.t} must exceed q={cls.q}")
    else:
        raise InvalidParameter("reward", f"unknown reward model {type(rw).__name__}")
    return cls


def session_net_revenue(model: RewardModel, mean_wait: float, q: float) -> float:
    """Net revenue of one session whose realised mean wait is ``mean_wait``.

    The obligation is violated only when ``mean_wait > q``; the result may be
    negative when penalties exceed the charge.
    """
    if mean_wait <= q:
        return model.c
    if isinstance(model, Flat):
        return model.c - model.r
    if isinstance(model, Proportional):
        if math.isinf(mean_wait):
            return -math.inf if model.r > 0 else model.c
        return model.c - model.r * (mean_wait - q)
    if mean_wait <= model.t:
        return model.c - model.r_prime * (mean_wait - q)
    return model.c - model.r_dprime


def session_duration(cls: ServiceClass) -> float:
    """Nominal time a session needs to submit all of its jobs."""
    return cls.k / cls.gamma


@dataclass(slots=True)
class SessionRecord:
    session_id: int
    cls: int
    arrival_time: float
    k: int
    jobs_emitted: int = 0
    jobs_completed: int = 0
    cumulative_wait: float = 0.0
    state: str = "active"
    completion_time: float = math.nan
    net_revenue: float = math.nan
    last_job_arrival: float = math.nan
    # pre-drawn job gaps and service demands, consumed by the simulator
    gaps: list = field(default=None, repr=False, compare=False)
    services: list = field(default=None, repr=False, compare=False)

    @property
    def mean_wait(self) -> float:
        if self.jobs_completed == 0:
            raise ValueError("mean wait undefined before the first job completes")
        return self.cumulative_wait / self.jobs_completed


@dataclass(slots=True)
class Job:
    session: SessionRecord
    arrival_time: float
    service_demand: float
    wait: float = field(default=0.0)

    @property
    def cls(self) -> int:
        return self.session.cls

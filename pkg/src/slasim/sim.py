"""Discrete-event simulation of a cluster of per-service server pools.

Sessions arrive per class as Poisson streams; each admitted session emits
``k`` jobs separated by draws from its class's job inter-arrival process.
Every pool serves its jobs FIFO, non-preemptively and without idling.  Pools
are resized by moving whole servers; a busy server finishes its job before
leaving.  Policy windows close after a fixed number of session events.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import rng as rngmod
from .config import ConfigError, ExperimentConfig
from .metrics import finalize_session
from .model import ServiceClass, SessionRecord
from .policy import (
    ADMIT_ALL,
    CURRENT_STATE,
    ORACLE_THRESHOLD,
    THRESHOLD,
    ClassView,
    Controller,
    current_state_decide,
    threshold_decide,
)
from .queueing import TrafficEstimate

SESSION_ARRIVAL = 0
JOB_ARRIVAL = 1
JOB_COMPLETION = 2
LOAD_SWAP = 3
SERVER_JOIN = 4
WINDOW_BOUNDARY = 5

EVENT_NAMES = {
    SESSION_ARRIVAL: "SessionArrival",
    JOB_ARRIVAL: "JobArrival",
    JOB_COMPLETION: "JobCompletion",
    LOAD_SWAP: "LoadSwap",
    SERVER_JOIN: "ServerJoin",
    WINDOW_BOUNDARY: "WindowBoundary",
}


_heappush = heapq.heappush


class InvariantViolation(AssertionError):
    pass


def draw_interarrival(gamma: float, kind: str, rng: np.random.Generator) -> float:
    """One job inter-arrival gap for a session submitting at rate ``gamma``."""
    return float(rngmod.draw_interarrival_block(rng, gamma, kind, 1)[0])


# -- profiler -----------------------------------------------------------------

class WindowStats:
    """Per-class counters for the observation window in progress."""

    def __init__(self, m: int, start: float):
        self.start = start
        self.job_arrivals = [0] * m
        self.session_arrivals = [0] * m
        self.gap_n = [0] * m
        self.gap_sum = [0.0] * m
        self.gap_sumsq = [0.0] * m
        self.svc_n = [0] * m
        self.svc_sum = [0.0] * m
        self.svc_sumsq = [0.0] * m


def _scv(n: int, total: float, sumsq: float) -> Optional[float]:
    if n < 2 or total <= 0:
        return None
    mean = total / n
    var = (sumsq - n * mean * mean) / (n - 1)
    return max(var, 0.0) / (mean * mean)


def profiler_close_window(
    stats: WindowStats,
    end: float,
    previous: Sequence[TrafficEstimate],
    classes: Sequence[ServiceClass],
    beta: float = 0.5,
) -> list[TrafficEstimate]:
    """Smooth this window's raw measurements into the published estimates."""
    length = end - stats.start
    out = []
    for i, prev in enumerate(previous):
        if length <= 0:
            out.append(prev)
            continue
        lam = stats.job_arrivals[i] / length
        delta = stats.session_arrivals[i] / length
        b = stats.svc_sum[i] / stats.svc_n[i] if stats.svc_n[i] else None
        ca2 = _scv(stats.gap_n[i], stats.gap_sum[i], stats.gap_sumsq[i])
        cs2 = _scv(stats.svc_n[i], stats.svc_sum[i], stats.svc_sumsq[i])

        def smooth(raw, old):
            return old if raw is None else beta * raw + (1 - beta) * old

        delta_s = smooth(delta, prev.delta_hat)
        out.append(TrafficEstimate(
            cls=prev.cls,
            lambda_hat=smooth(lam, prev.lambda_hat),
            b_hat=smooth(b, prev.b_hat),
            ca2_hat=smooth(ca2, prev.ca2_hat),
            cs2_hat=smooth(cs2, prev.cs2_hat),
            delta_hat=delta_s,
            offered_lambda_hat=delta_s * classes[i].k,
        ))
    return out


def nominal_estimates(cfg: ExperimentConfig, deltas: Optional[Sequence[float]] = None) -> list[TrafficEstimate]:
    """Estimates implied by the configured (true) traffic parameters."""
    if deltas is None:
        deltas = [t.delta for t in cfg.traffic]
    out = []
    for i, (cls, tr) in enumerate(zip(cfg.classes, cfg.traffic)):
        ca2 = rngmod_bursty_scv() if tr.arrivals == "bursty" else 1.0
        out.append(TrafficEstimate(
            cls=i,
            lambda_hat=deltas[i] * cls.k,
            b_hat=cls.b + cfg.job_overhead,
            ca2_hat=ca2,
            cs2_hat=(cls.b / (cls.b + cfg.job_overhead)) ** 2,
            delta_hat=deltas[i],
            offered_lambda_hat=deltas[i] * cls.k,
        ))
    return out


def rngmod_bursty_scv() -> float:
    p, f, s = rngmod.BURST_PROB, rngmod.BURST_FAST_MEAN, rngmod.BURST_SLOW_MEAN
    mean = p * f + (1 - p) * s
    second = 2 * (p * f * f + (1 - p) * s * s)
    return second / (mean * mean) - 1.0


# -- simulation state -----------------------------------------------------------

class Pool:
    __slots__ = ("queue", "idle", "busy", "leaving", "destinations", "target", "last_started_seq")

    def __init__(self, servers: int):
        self.queue: deque = deque()
        self.idle = servers
        self.busy = 0
        self.leaving = 0
        self.destinations: deque = deque()
        self.target = servers
        self.last_started_seq = -1


@dataclass
class RunResult:
    config: ExperimentConfig
    seed: int
    duration: float
    completed: list[SessionRecord] = field(default_factory=list)
    inflight: list[SessionRecord] = field(default_factory=list)
    rejected: list[tuple[float, int]] = field(default_factory=list)
    accepted: list[tuple[float, int]] = field(default_factory=list)
    windows: list[tuple[float, list[TrafficEstimate], tuple[int, ...], list[float]]] = field(default_factory=list)
    job_arrivals: list[int] = field(default_factory=list)
    jobs_completed: list[int] = field(default_factory=list)
    session_arrivals: list[int] = field(default_factory=list)
    reallocations: int = 0
    events: int = 0
    trace: Optional[list[tuple]] = None
    rng_algorithm: str = rngmod.ALGORITHM

    @property
    def total_revenue(self) -> float:
        return sum(s.net_revenue for s in self.completed)


class Simulation:
    """One replication.  Construct, then call :meth:`run`."""

    def __init__(self, cfg: ExperimentConfig, seed: int, check: bool = False, trace: bool = False):
        try:
            cfg.validate()
        except ConfigError:
            raise
        self.cfg = cfg
        self.seed = seed
        self.check = check
        self.m = m = cfg.m
        self.classes = cfg.classes
        self.deltas = [t.delta for t in cfg.traffic]
        self.session_rng = [rngmod.UnitStream(rngmod.stream(seed, i, rngmod.SESSION_ARRIVALS)) for i in range(m)]
        self.gap_rng = [
            rngmod.UnitStream(rngmod.stream(seed, i, rngmod.JOB_GAPS), cfg.traffic[i].arrivals) for i in range(m)
        ]
        self.service_rng = [rngmod.UnitStream(rngmod.stream(seed, i, rngmod.SERVICE)) for i in range(m)]
        self.heap: list = []
        self.seq = 0
        self.now = 0.0
        self.arrival_version = [0] * m
        self.controller = Controller(cfg.classes, cfg.servers, cfg.policy)
        self.estimates = nominal_estimates(cfg)
        alloc, _ = self.controller.reconfigure(self.estimates)
        self.pools = [Pool(n) for n in alloc]
        self.active: list[dict[int, SessionRecord]] = [dict() for _ in range(m)]
        self.next_session_id = 0
        self.job_seq = [0] * m
        self.window = WindowStats(m, 0.0)
        self.window_events = 0
        self.in_transit = 0
        self.result = RunResult(
            config=cfg,
            seed=seed,
            duration=cfg.duration,
            job_arrivals=[0] * m,
            jobs_completed=[0] * m,
            session_arrivals=[0] * m,
            trace=[] if trace else None,
        )
        self.tracing = trace
        self.overhead = cfg.job_overhead
        self.job_arrivals = self.result.job_arrivals
        self.jobs_completed = self.result.jobs_completed
        self.result.windows.append((0.0, list(self.estimates), tuple(alloc), list(self.controller.thresholds.limits)))

    # -- scheduling helpers --
    def _push(self, t: float, kind: int, a=None, b=None):
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, kind, a, b))

    def _schedule_session_arrival(self, i: int):
        d = self.deltas[i]
        if d <= 0:
            return
        self._push(self.now + self.session_rng[i].next() / d, SESSION_ARRIVAL, i, self.arrival_version[i])

    def _trace(self, kind: int, cls: int, sid):
        if self.tracing:
            p = self.pools[cls] if cls is not None and cls >= 0 else None
            self.result.trace.append((
                self.now,
                EVENT_NAMES[kind],
                -1 if cls is None else cls,
                -1 if sid is None else sid,
                len(p.queue) if p else 0,
                p.busy if p else 0,
            ))

    # -- pool operations --
    def _start(self, i: int, pool: Pool, job: tuple):
        # queued jobs are (arrival, service, seq, session) tuples
        now = self.now
        arrival, service, seq, s = job
        if self.check:
            if seq <= pool.last_started_seq:
                raise InvariantViolation(f"FIFO violated in pool {i}")
            pool.last_started_seq = seq
        self.seq += 1
        _heappush(self.heap, (now + service, self.seq, JOB_COMPLETION, i, (s, now - arrival, service)))

    def _dispatch(self, i: int):
        pool = self.pools[i]
        while pool.idle > 0 and pool.queue:
            pool.idle -= 1
            pool.busy += 1
            self._start(i, pool, pool.queue.popleft())

    def _send_server(self, dest: int):
        if self.cfg.switch_delay > 0:
            self.in_transit += 1
            self._push(self.now + self.cfg.switch_delay, SERVER_JOIN, dest)
        else:
            self.pools[dest].idle += 1
            self._dispatch(dest)

    def move_server(self, src: int, dest: int):
        ps = self.pools[src]
        ps.target -= 1
        self.pools[dest].target += 1
        self.result.reallocations += 1
        if ps.idle > 0:
            ps.idle -= 1
            self._send_server(dest)
        else:
            ps.leaving += 1
            ps.destinations.append(dest)

    def apply_allocation(self, alloc: Sequence[int]):
        surplus = []
        deficit = []
        for i, n in enumerate(alloc):
            diff = self.pools[i].target - n
            if diff > 0:
                surplus.extend([i] * diff)
            elif diff < 0:
                deficit.extend([i] * -diff)
        for src, dest in zip(surplus, deficit):
            self.move_server(src, dest)

    # -- policy plumbing --
    def _view(self) -> list[ClassView]:
        return [
            ClassView(tuple(self.active[i].values()), len(self.pools[i].queue), self.pools[i].target)
            for i in range(self.m)
        ]

    def _admit(self, i: int) -> bool:
        adm = self.cfg.policy.admission
        if adm == ADMIT_ALL:
            return True
        if adm in (THRESHOLD, ORACLE_THRESHOLD):
            return threshold_decide(len(self.active[i]), self.controller.thresholds.limits[i]).accept
        decision = current_state_decide(self._view(), i, self.estimates, self.classes)
        if decision.accept and decision.donor is not None:
            self.move_server(decision.donor, i)
        return decision.accept

    def _session_event(self):
        self.window_events += 1
        if self.window_events >= self.cfg.policy.window_events:
            self._close_window()

    def _close_window(self):
        beta = self.cfg.policy.ewma_beta
        if self.now > self.window.start:
            self.estimates = profiler_close_window(self.window, self.now, self.estimates, self.classes, beta)
        self.window = WindowStats(self.m, self.now)
        self.window_events = 0
        if self.cfg.policy.admission == ORACLE_THRESHOLD:
            return
        self._reconfigure(self.estimates)

    def _reconfigure(self, estimates):
        alloc, thresholds = self.controller.reconfigure(estimates)
        self.apply_allocation(alloc)
        self._trace(WINDOW_BOUNDARY, None, None)
        self.result.windows.append((self.now, list(estimates), tuple(alloc), list(thresholds.limits)))

    # -- event handlers --
    def on_session_arrival(self, i: int):
        self._schedule_session_arrival(i)
        self.result.session_arrivals[i] += 1
        self.window.session_arrivals[i] += 1
        if self._admit(i):
            sid = self.next_session_id
            self.next_session_id += 1
            s = SessionRecord(sid, i, self.now, self.classes[i].k)
            s.last_job_arrival = self.now
            self.active[i][sid] = s
            self.result.accepted.append((self.now, i))
            cls = self.classes[i]
            s.gaps = [g / cls.gamma for g in self.gap_rng[i].take(cls.k)]
            s.services = [x * cls.b + self.overhead for x in self.service_rng[i].take(cls.k)]
            self._push(self.now + s.gaps[0], JOB_ARRIVAL, s)
            self._trace(SESSION_ARRIVAL, i, sid)
        else:
            self.result.rejected.append((self.now, i))
            self._trace(SESSION_ARRIVAL, i, None)
        self._session_event()

    def on_job_arrival(self, s: SessionRecord):
        now = self.now
        i = s.cls
        w = self.window
        gap = now - s.last_job_arrival
        w.gap_n[i] += 1
        w.gap_sum[i] += gap
        w.gap_sumsq[i] += gap * gap
        w.job_arrivals[i] += 1
        self.job_arrivals[i] += 1
        s.last_job_arrival = now
        n = s.jobs_emitted
        s.jobs_emitted = n + 1
        if n + 1 < s.k:
            self.seq += 1
            _heappush(self.heap, (now + s.gaps[n + 1], self.seq, JOB_ARRIVAL, s, None))
        job = (now, s.services[n], self.job_seq[i], s)
        self.job_seq[i] += 1
        pool = self.pools[i]
        if pool.idle > 0:
            pool.idle -= 1
            pool.busy += 1
            self._start(i, pool, job)
        else:
            pool.queue.append(job)
        if self.tracing:
            self._trace(JOB_ARRIVAL, i, s.session_id)

    def on_job_completion(self, i: int, done: tuple):
        s, wait, service = done
        w = self.window
        w.svc_n[i] += 1
        w.svc_sum[i] += service
        w.svc_sumsq[i] += service * service
        self.jobs_completed[i] += 1
        s.cumulative_wait += wait
        s.jobs_completed += 1

        pool = self.pools[i]
        if pool.leaving > 0:
            pool.leaving -= 1
            pool.busy -= 1
            self._send_server(pool.destinations.popleft())
        elif pool.queue:
            self._start(i, pool, pool.queue.popleft())
        else:
            pool.busy -= 1
            pool.idle += 1
        if self.tracing:
            self._trace(JOB_COMPLETION, i, s.session_id)

        if s.jobs_completed == s.k:
            self._finish_session(i, s)

    def _finish_session(self, i: int, s: SessionRecord):
        cls = self.classes[i]
        if self.check and s.jobs_emitted != s.k:
            raise InvariantViolation(f"session {s.session_id} completed {s.jobs_completed} of {s.jobs_emitted} emitted")
        finalize_session(s, cls, self.now)
        del self.active[i][s.session_id]
        self.result.completed.append(s)
        self._session_event()

    def on_load_swap(self):
        a, b = self.cfg.swap.pair
        self.deltas[a], self.deltas[b] = self.deltas[b], self.deltas[a]
        for i in (a, b):
            self.arrival_version[i] += 1
            self._schedule_session_arrival(i)
        self._push(self.now + self.cfg.swap.period, LOAD_SWAP)
        self._trace(LOAD_SWAP, None, None)
        if self.cfg.policy.admission == ORACLE_THRESHOLD:
            self._reconfigure(nominal_estimates(self.cfg, self.deltas))

    def on_server_join(self, dest: int):
        self.in_transit -= 1
        self.pools[dest].idle += 1
        self._dispatch(dest)
        self._trace(SERVER_JOIN, dest, None)

    # -- invariants --
    def check_invariants(self):
        total = self.in_transit
        for i, p in enumerate(self.pools):
            if p.idle > 0 and p.queue:
                raise InvariantViolation(f"pool {i} idles with {len(p.queue)} queued jobs")
            if p.idle < 0 or p.busy < 0 or p.leaving > p.busy:
                raise InvariantViolation(f"pool {i} has inconsistent counters")
            total += p.idle + p.busy
            in_service = p.busy
            emitted = self.job_arrivals[i]
            if emitted != self.jobs_completed[i] + len(p.queue) + in_service:
                raise InvariantViolation(f"job conservation broken in class {i}")
        if total != self.cfg.servers:
            raise InvariantViolation(f"{total} servers accounted for, expected {self.cfg.servers}")
        if sum(p.target for p in self.pools) != self.cfg.servers:
            raise InvariantViolation("allocation does not sum to N")
        for i, p in enumerate(self.pools):
            if p.target < 0:
                raise InvariantViolation(f"negative allocation for class {i}")

    # -- main loop --
    def run(self) -> RunResult:
        cfg = self.cfg
        end = cfg.duration
        if end <= 0:
            return self.result
        for i in range(self.m):
            self._schedule_session_arrival(i)
        if cfg.swap is not None:
            self._push(cfg.swap.period, LOAD_SWAP)
        heap = self.heap
        pop = heapq.heappop
        version = self.arrival_version
        check = self.check
        events = 0
        on_completion = self.on_job_completion
        on_arrival = self.on_job_arrival
        while heap:
            t, _, kind, a, b = pop(heap)
            if t > end:
                break
            self.now = t
            events += 1
            if kind == JOB_COMPLETION:
                on_completion(a, b)
            elif kind == JOB_ARRIVAL:
                on_arrival(a)
            elif kind == SESSION_ARRIVAL:
                if b != version[a]:
                    continue
                self.on_session_arrival(a)
            elif kind == LOAD_SWAP:
                self.on_load_swap()
            elif kind == SERVER_JOIN:
                self.on_server_join(a)
            if check:
                self.check_invariants()
        self.now = end
        self.result.events = events
        for i in range(self.m):
            self.result.inflight.extend(self.active[i].values())
        return self.result


def run_simulation(cfg: ExperimentConfig, seed: int, check: bool = False, trace: bool = False) -> RunResult:
    return Simulation(cfg, seed, check=check, trace=trace).run()


def format_trace(result: RunResult) -> str:
    lines = ["time\tkind\tclass\tsession_id\tqueue_length\tbusy_servers"]
    for t, kind, cls, sid, ql, busy in result.trace or []:
        lines.append(f"{t:.6f}\t{kind}\t{cls + 1 if cls >= 0 else '-'}\t{sid if sid >= 0 else '-'}\t{ql}\t{busy}")
    return "\n".join(lines) + "\n"

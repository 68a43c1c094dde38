"""Analytic queueing formulas used by the admission and allocation policies.

Markovian results (Erlang B/C, M/M/n waiting time and its tail) plus the
Allen-Cunneen correction for general arrival and service variability, and the
truncated-Poisson session-occupancy distribution of an Erlang loss system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class Unstable(ArithmeticError):
    """Offered load reaches or exceeds the number of servers."""


@dataclass(frozen=True)
class TrafficEstimate:
    """Per-class traffic statistics published at the end of a window.

    ``lambda_hat`` is the measured (carried) job arrival rate, while
    ``offered_lambda_hat`` counts every arriving session as ``k`` jobs,
    whether admitted or not.
    """
    cls: int
    lambda_hat: float
    b_hat: float
    ca2_hat: float
    cs2_hat: float
    delta_hat: float
    offered_lambda_hat: float = math.nan

    @property
    def offered_load(self) -> float:
        lam = self.lambda_hat if math.isnan(self.offered_lambda_hat) else self.offered_lambda_hat
        return lam * self.b_hat


@dataclass(frozen=True)
class LossDistribution:
    probs: np.ndarray

    @property
    def blocking(self) -> float:
        return float(self.probs[-1])

    def __len__(self) -> int:
        return len(self.probs)


def erlang_b(n: int, a: float) -> float:
    if n < 0 or a < 0:
        raise ValueError("erlang_b needs n >= 0 and a >= 0")
    b = 1.0
    for i in range(1, n + 1):
        b = a * b / (i + a * b)
    return b


def erlang_c(n: int, a: float) -> float:
    """Probability that an arriving job has to wait in an M/M/n queue."""
    if n < 1:
        raise ValueError("erlang_c needs at least one server")
    if a >= n:
        raise Unstable(f"offered load {a} >= {n} servers")
    if a <= 0:
        return 0.0
    bn = erlang_b(n, a)
    return n * bn / (n - a * (1.0 - bn))


def mmn_expected_wait(lam: float, mu: float, n: int) -> float:
    if lam >= n * mu:
        raise Unstable(f"arrival rate {lam} >= capacity {n * mu}")
    if lam <= 0:
        return 0.0
    return erlang_c(n, lam / mu) / (n * mu - lam)


def mmn_wait_tail(lam: float, mu: float, n: int, q: float) -> float:
    """P(W > q) for a FIFO M/M/n queue."""
    if lam >= n * mu:
        raise Unstable(f"arrival rate {lam} >= capacity {n * mu}")
    if lam <= 0:
        return 0.0
    return erlang_c(n, lam / mu) * math.exp(-(n * mu - lam) * q)


def ggn_expected_wait(lam: float, b: float, ca2: float, cs2: float, n: int) -> float:
    """Allen-Cunneen approximation of the mean wait in a G/G/n queue."""
    if lam * b >= n:
        raise Unstable(f"offered load {lam * b} >= {n} servers")
    return 0.5 * (ca2 + cs2) * mmn_expected_wait(lam, 1.0 / b, n)


def erlang_loss_distribution(a: float, m: int) -> LossDistribution:
    """Occupancy distribution of an Erlang loss system with ``m`` places.

    Terms are built outward from the mode with ratio recurrences, so neither
    factorials nor powers of ``a`` are ever formed.
    """
    if a < 0 or m < 0:
        raise ValueError("need a >= 0 and m >= 0")
    terms = np.zeros(m + 1)
    if a == 0:
        terms[0] = 1.0
        return LossDistribution(terms)
    mode = min(int(a), m)
    terms[mode] = 1.0
    for j in range(mode + 1, m + 1):
        terms[j] = terms[j - 1] * a / j
    for j in range(mode, 0, -1):
        terms[j - 1] = terms[j] * j / a
    return LossDistribution(terms / terms.sum())

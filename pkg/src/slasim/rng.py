"""Seeded, splittable random streams.

Every (class, purpose) pair gets its own PCG64 generator derived from
``SeedSequence(seed, spawn_key=(class, purpose))``, so changing one class's
traffic never perturbs another class's draws.  Draws are produced in blocks
and handed out one at a time.
"""
from __future__ import annotations

import numpy as np

ALGORITHM = "numpy.PCG64/SeedSequence(seed, spawn_key=(class, purpose))"

SESSION_ARRIVALS = 0
JOB_GAPS = 1
SERVICE = 2

BURST_PROB = 0.8
BURST_FAST_MEAN = 0.2  # in units of 1/gamma
BURST_SLOW_MEAN = 4.2

_BLOCK = 2048


def stream(seed: int, cls: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(cls, purpose))))


def replication_seed(master: int, run_index: int) -> int:
    ss = np.random.SeedSequence(master, spawn_key=(run_index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def bursty_unit(rng: np.random.Generator, size) -> np.ndarray:
    """Unit-mean two-phase hyperexponential draws (squared CV 6.12)."""
    fast = rng.random(size) < BURST_PROB
    scale = np.where(fast, BURST_FAST_MEAN, BURST_SLOW_MEAN)
    return rng.standard_exponential(size) * scale


def draw_interarrival_block(rng: np.random.Generator, gamma: float, kind: str, size: int) -> np.ndarray:
    if kind == "bursty":
        return bursty_unit(rng, size) / gamma
    return rng.standard_exponential(size) / gamma


class UnitStream:
    """Buffered unit-mean draws (exponential or bursty) from one generator."""

    __slots__ = ("_rng", "_kind", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, kind: str = "exponential"):
        self._rng = rng
        self._kind = kind
        self._buf: list[float] = []
        self._pos = 0

    def _refill(self):
        if self._kind == "bursty":
            self._buf = bursty_unit(self._rng, _BLOCK).tolist()
        else:
            self._buf = self._rng.standard_exponential(_BLOCK).tolist()
        self._pos = 0

    def take(self, n: int) -> list[float]:
        out = self._buf[self._pos:self._pos + n]
        self._pos += len(out)
        while len(out) < n:
            self._refill()
            extra = self._buf[:n - len(out)]
            self._pos = len(extra)
            out.extend(extra)
        return out

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._refill()
        x = self._buf[self._pos]
        self._pos += 1
        return x

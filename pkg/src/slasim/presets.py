"""Built-in experiment catalog: the four-class testbed and its figure variants."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

from .config import ClassTraffic, ExperimentConfig, SwapSpec, saturation_notes
from .model import BoundedProportional, Flat, Proportional, ServiceClass
from .policy import ADMIT_ALL, CURRENT_STATE, ORACLE_THRESHOLD, THRESHOLD, PolicyConfig

N_SERVERS = 20
JOBS_PER_SESSION = 50
SERVICE_TIME = 1.0
GAMMAS = (2.0, 2.0, 2.0, 1.0)
BASE_DELTAS = (0.10, 0.04, 0.08, 0.02)
DELTA4_GRID = tuple(round(0.02 * i, 2) for i in range(1, 11))
TIERED_CHARGES = (10.0, 20.0, 30.0, 40.0)
DEFAULT_DURATION = 7200.0


def testbed(
    rewards,
    delta4: float = BASE_DELTAS[3],
    arrivals: str = "exponential",
    admission: str = ADMIT_ALL,
    duration: float = DEFAULT_DURATION,
    swap: SwapSpec | None = None,
) -> ExperimentConfig:
    """Four classes, 20 servers, k = 50, b = 1 s, q = b."""
    deltas = BASE_DELTAS[:3] + (delta4,)
    classes = [
        ServiceClass(index=i + 1, b=SERVICE_TIME, gamma=g, k=JOBS_PER_SESSION, q=SERVICE_TIME, reward=rw)
        for i, (g, rw) in enumerate(zip(GAMMAS, rewards))
    ]
    traffic = [ClassTraffic(delta=d, arrivals=arrivals) for d in deltas]
    cfg = ExperimentConfig(
        servers=N_SERVERS,
        classes=classes,
        traffic=traffic,
        policy=PolicyConfig(admission=admission),
        duration=duration,
        swap=swap,
    )
    cfg.validate()
    cfg.notes = saturation_notes(cfg)
    return cfg


def flat_equal(c: float = 10.0):
    return [Flat(c, c)] * 4


def flat_tiered():
    return [Flat(c, 2 * c) for c in TIERED_CHARGES]


def proportional_tiered():
    return [Proportional(c, c / 2) for c in TIERED_CHARGES]


def bounded_tiered(factor: float):
    """Base penalty r = c/2; proportional rate r/2 up to t = factor*q, then factor*r."""
    out = []
    for c in TIERED_CHARGES:
        r = c / 2
        out.append(BoundedProportional(c=c, r_prime=r / 2, t=factor * SERVICE_TIME, r_dprime=factor * r))
    return out


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    build: Callable[..., ExperimentConfig]
    policies: tuple[str, ...] = (ADMIT_ALL, THRESHOLD, CURRENT_STATE)
    figures: tuple[str, ...] = ()
    grid: tuple[float, ...] = DELTA4_GRID
    extras: dict = field(default_factory=dict)

    def config(self, delta4: float | None = None, admission: str | None = None, duration: float | None = None):
        cfg = self.build(delta4 if delta4 is not None else self.grid[0])
        if admission is not None:
            cfg = cfg.with_policy(admission)
        if duration is not None:
            cfg = replace(cfg, duration=duration, notes=list(cfg.notes))
        return cfg


SWAP_300 = SwapSpec(period=300.0, pair=(0, 1))

PRESETS: dict[str, Preset] = {
    p.name: p
    for p in [
        Preset(
            "table1",
            "Four-class testbed, flat c = r = 10, admit-all",
            lambda d4: testbed(flat_equal(), d4),
            policies=(ADMIT_ALL,),
            grid=(BASE_DELTAS[3],),
        ),
        Preset(
            "fig6a",
            "Markovian traffic, flat penalties, c = r = 10",
            lambda d4: testbed(flat_equal(), d4),
            figures=("fig6a", "fig6b"),
        ),
        Preset(
            "fig6c",
            "Markovian traffic, flat penalties, c = (10,20,30,40), r = 2c",
            lambda d4: testbed(flat_tiered(), d4),
            figures=("fig6c",),
        ),
        Preset(
            "fig7a",
            "Bursty job arrivals (squared CV 6.12), flat penalties, r = 2c",
            lambda d4: testbed(flat_tiered(), d4, arrivals="bursty"),
            figures=("fig7a",),
        ),
        Preset(
            "fig7b",
            "Session rates of classes 1 and 2 swapped every 300 s, c = r = 10",
            lambda d4: testbed(flat_equal(), d4, swap=SWAP_300),
            policies=(ADMIT_ALL, THRESHOLD, CURRENT_STATE, ORACLE_THRESHOLD),
            figures=("fig7b",),
        ),
        Preset(
            "fig8a",
            "Penalties proportional to delay, c = (10,20,30,40), r = c/2",
            lambda d4: testbed(proportional_tiered(), d4),
            figures=("fig8a", "fig8b"),
        ),
        Preset(
            "fig9a",
            "Bounded proportional penalties, t = 2q, r'' = 2r, r' = r/2",
            lambda d4: testbed(bounded_tiered(2.0), d4),
            figures=("fig9a",),
        ),
        Preset(
            "fig9b",
            "Bounded proportional penalties, t = 5q, r'' = 5r, r' = r/2",
            lambda d4: testbed(bounded_tiered(5.0), d4),
            figures=("fig9b",),
        ),
    ]
}


def list_presets() -> dict[str, Preset]:
    return dict(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None

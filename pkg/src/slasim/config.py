"""Experiment configuration and its plain-text (INI style) representation.

Grammar: sections ``[cluster]``, ``[policy]``, ``[run]``, an optional
``[swap]`` and one ``[class <index>]`` per service class (indices 1..m, in
order).  Each line inside a section is ``key = value``; ``#`` and ``;`` start
comments.  See README.md for the full key list.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .model import (
    BoundedProportional,
    Flat,
    InvalidParameter,
    Proportional,
    ServiceClass,
    validate_class,
)
from .policy import PolicyConfig

ARRIVAL_PROCESSES = ("exponential", "bursty")
SERVICE_PROCESSES = ("exponential",)


class ParseError(ValueError):
    def __init__(self, field_name: str, message: str, line: Optional[int] = None):
        self.field = field_name
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field_name}: {message}{where}")


class ConfigError(ValueError):
    """A configuration is structurally valid text but semantically unusable."""


@dataclass(frozen=True)
class ClassTraffic:
    delta: float
    arrivals: str = "exponential"
    service: str = "exponential"

    def __post_init__(self):
        if self.delta < 0:
            raise ConfigError("delta must be >= 0")
        if self.arrivals not in ARRIVAL_PROCESSES:
            raise ConfigError(f"unknown arrival process {self.arrivals!r}")
        if self.service not in SERVICE_PROCESSES:
            raise ConfigError(f"unknown service distribution {self.service!r}")


@dataclass(frozen=True)
class SwapSpec:
    period: float
    pair: tuple[int, int]  # zero-based class positions

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigError("swap period must be positive")
        if self.pair[0] == self.pair[1]:
            raise ConfigError("swap needs two distinct classes")


@dataclass
class ExperimentConfig:
    servers: int
    classes: list[ServiceClass]
    traffic: list[ClassTraffic]
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    duration: float = 7200.0
    seed: int = 1
    sample_period: float = 600.0
    replications: int = 1
    switch_delay: float = 0.0
    job_overhead: float = 0.0
    swap: Optional[SwapSpec] = None
    notes: list[str] = field(default_factory=list, compare=False)

    @property
    def m(self) -> int:
        return len(self.classes)

    def offered_loads(self) -> list[float]:
        return [t.delta * c.k * c.b for c, t in zip(self.classes, self.traffic)]

    def validate(self) -> "ExperimentConfig":
        if self.servers < 1:
            raise ConfigError("cluster.N must be >= 1")
        if not self.classes:
            raise ConfigError("at least one service class is required")
        if len(self.traffic) != len(self.classes):
            raise ConfigError("one traffic spec per class is required")
        if self.duration < 0:
            raise ConfigError("run.duration must be >= 0")
        if self.sample_period <= 0:
            raise ConfigError("run.sample_period must be positive")
        if self.replications < 1:
            raise ConfigError("run.replications must be >= 1")
        if self.switch_delay < 0 or self.job_overhead < 0:
            raise ConfigError("switch_delay and job_overhead must be >= 0")
        for cls in self.classes:
            validate_class(cls)
        if self.swap is not None and max(self.swap.pair) >= self.m:
            raise ConfigError("swap refers to a missing class")
        return self

    def with_policy(self, admission: str) -> "ExperimentConfig":
        return replace(self, policy=replace(self.policy, admission=admission), notes=list(self.notes))

    def with_delta(self, position: int, delta: float) -> "ExperimentConfig":
        traffic = list(self.traffic)
        traffic[position] = replace(traffic[position], delta=delta)
        return replace(self, traffic=traffic, notes=list(self.notes))


def saturation_notes(cfg: ExperimentConfig) -> list[str]:
    total = sum(cfg.offered_loads())
    if total > cfg.servers:
        return [f"over-saturated: total offered load {total:g} exceeds {cfg.servers} servers"]
    return []


# -- text format -------------------------------------------------------------

def _reward_from(section, name: str):
    kind = section.get("reward", "flat").strip().lower()
    if kind == "flat":
        return Flat(c=_num(section, name, "c"), r=_num(section, name, "r"))
    if kind == "proportional":
        return Proportional(c=_num(section, name, "c"), r=_num(section, name, "r"))
    if kind == "bounded":
        return BoundedProportional(
            c=_num(section, name, "c"),
            r_prime=_num(section, name, "r_prime"),
            t=_num(section, name, "t"),
            r_dprime=_num(section, name, "r_dprime"),
        )
    raise ParseError(f"{name}.reward", f"unknown reward model {kind!r}")


def _num(section, sname: str, key: str, default=None, kind=float):
    if key not in section:
        if default is None:
            raise ParseError(f"{sname}.{key}", "missing required key")
        return default
    raw = section[key].strip()
    try:
        value = kind(raw)
    except ValueError:
        raise ParseError(f"{sname}.{key}", f"cannot parse {raw!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"{sname}.{key}", "must be finite")
    return value


def _section(parser, name: str):
    if not parser.has_section(name):
        raise ParseError(name, "missing section")
    return parser[name]


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        message = str(exc).splitlines()[0]
        errors = getattr(exc, "errors", None)
        if errors:
            line, bad = errors[0]
            message = f"cannot parse {bad.strip()!r}"
        raise ParseError("syntax", message, line) from None

    cluster = _section(parser, "cluster")
    servers = _num(cluster, "cluster", "N", kind=int)
    switch_delay = _num(cluster, "cluster", "switch_delay", 0.0)

    pol = parser["policy"] if parser.has_section("policy") else {}
    cap = pol.get("threshold_cap", "").strip() if pol else ""
    try:
        policy = PolicyConfig(
            admission=pol.get("admission", "admit_all").strip() if pol else "admit_all",
            window_events=_num(pol, "policy", "window_events", 50, int),
            epsilon=_num(pol, "policy", "epsilon", 0.01),
            ewma_beta=_num(pol, "policy", "ewma_beta", 0.5),
            threshold_cap=int(cap) if cap else None,
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError("policy", str(exc)) from None

    run = parser["run"] if parser.has_section("run") else {}
    duration = _num(run, "run", "duration", 7200.0)
    if duration <= 0:
        raise ParseError("run.duration", "must be positive")

    class_sections = sorted(
        (s for s in parser.sections() if s.startswith("class")),
        key=lambda s: _class_number(s),
    )
    if not class_sections:
        raise ParseError("class", "at least one [class N] section is required")
    classes, traffic = [], []
    for pos, sname in enumerate(class_sections):
        idx = _class_number(sname)
        if idx != pos + 1:
            raise ParseError(sname, f"class indices must run 1..m, got {idx} at position {pos + 1}")
        sec = parser[sname]
        try:
            cls = ServiceClass(
                index=idx,
                b=_num(sec, sname, "b"),
                gamma=_num(sec, sname, "gamma"),
                k=_num(sec, sname, "k", 50, int),
                q=_num(sec, sname, "q"),
                alpha=_num(sec, sname, "alpha", 1.0),
                reward=_reward_from(sec, sname),
            )
            validate_class(cls)
            traffic.append(ClassTraffic(
                delta=_num(sec, sname, "delta"),
                arrivals=sec.get("arrivals", "exponential").strip(),
                service=sec.get("service", "exponential").strip(),
            ))
        except InvalidParameter as exc:
            raise ParseError(f"{sname}.{exc.field}", str(exc)) from None
        except ConfigError as exc:
            raise ParseError(sname, str(exc)) from None
        classes.append(cls)

    swap = None
    if parser.has_section("swap"):
        sw = parser["swap"]
        try:
            pair = tuple(int(x) - 1 for x in sw.get("classes", "1, 2").split(","))
            if len(pair) != 2:
                raise ValueError("swap.classes needs exactly two indices")
            swap = SwapSpec(period=_num(sw, "swap", "period"), pair=pair)
        except (ValueError, ConfigError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError("swap", str(exc)) from None

    cfg = ExperimentConfig(
        servers=servers,
        classes=classes,
        traffic=traffic,
        policy=policy,
        duration=duration,
        seed=_num(run, "run", "seed", 1, int),
        sample_period=_num(run, "run", "sample_period", 600.0),
        replications=_num(run, "run", "replications", 1, int),
        switch_delay=switch_delay,
        job_overhead=_num(run, "run", "job_overhead", 0.0),
        swap=swap,
    )
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ParseError("config", str(exc)) from None
    cfg.notes = saturation_notes(cfg)
    return cfg


def _class_number(section_name: str) -> int:
    try:
        return int(section_name[len("class"):].strip())
    except ValueError:
        raise ParseError(section_name, "expected a section name like [class 1]") from None


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`."""
    lines = [
        "[cluster]",
        f"N = {cfg.servers}",
        f"switch_delay = {cfg.switch_delay!r}",
        "",
        "[policy]",
        f"admission = {cfg.policy.admission}",
        f"window_events = {cfg.policy.window_events}",
        f"epsilon = {cfg.policy.epsilon!r}",
        f"ewma_beta = {cfg.policy.ewma_beta!r}",
    ]
    if cfg.policy.threshold_cap is not None:
        lines.append(f"threshold_cap = {cfg.policy.threshold_cap}")
    lines += [
        "",
        "[run]",
        f"duration = {cfg.duration!r}",
        f"seed = {cfg.seed}",
        f"sample_period = {cfg.sample_period!r}",
        f"replications = {cfg.replications}",
        f"job_overhead = {cfg.job_overhead!r}",
    ]
    if cfg.swap is not None:
        a, b = cfg.swap.pair
        lines += ["", "[swap]", f"period = {cfg.swap.period!r}", f"classes = {a + 1}, {b + 1}"]
    for cls, tr in zip(cfg.classes, cfg.traffic):
        lines += [
            "",
            f"[class {cls.index}]",
            f"b = {cls.b!r}",
            f"gamma = {cls.gamma!r}",
            f"k = {cls.k}",
            f"q = {cls.q!r}",
            f"alpha = {cls.alpha!r}",
            f"delta = {tr.delta!r}",
            f"arrivals = {tr.arrivals}",
            f"service = {tr.service}",
        ]
        rw = cls.reward
        if isinstance(rw, Flat):
            lines += ["reward = flat", f"c = {rw.c!r}", f"r = {rw.r!r}"]
        elif isinstance(rw, Proportional):
            lines += ["reward = proportional", f"c = {rw.c!r}", f"r = {rw.r!r}"]
        else:
            lines += [
                "reward = bounded",
                f"c = {rw.c!r}",
                f"r_prime = {rw.r_prime!r}",
                f"t = {rw.t!r}",
                f"r_dprime = {rw.r_dprime!r}",
            ]
    return "\n".join(lines) + "\n"

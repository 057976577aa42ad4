"""Experiment configuration: nested dataclasses serialized as JSON.

All lengths are in the same (dimensionless) length unit as the grid box.
Schema (keys and meaning)::

    kernel            gaussian | poisson | bump | path to a tabulated profile
    seed              integer seeding every random choice
    output_dir        directory receiving <experiment>/report.json and CSVs
    grid.n            dimension
    grid.P            points per axis
    grid.L            box half-width (length units); box is [-L, L)^n
    time_grid.K       number of base scales t_1 > ... > t_K
    time_grid.refinement   sub-samples per interval, endpoints included
    time_grid.t1      largest scale (length units)
    time_grid.spacing dyadic (t_i = t1 2^{1-i})
    lacunary.delta    lacunarity ratio delta > 1
    lacunary.mode     plain | strong  (strong also caps ratios at delta^2)
    lacunary.M        truncation half-width (> 2)
    lacunary.a0       scale a_0 (length units); a_i = a0 delta^i
    lacunary.weights  ones | alternating | random  (random: uniform on [-1, 1], seeded)
    exponents.rho     list of variation exponents (> 2)
    exponents.q       exponent of the L^q maximal function (> 1)
    exponents.p       list of Lebesgue exponents for the L^p sweep (>= 1)
    battery.functions subset of: log, log_shift, trig, step, constant
    battery.shifts    centers (first axis) of the shifted logarithms
    battery.trig_degree  maximal frequency of the random trig polynomials
    battery.n_trig    number of random trig polynomials
    balls.stride      center subsampling stride (1 = all grid points)
    balls.per_octave  radii per doubling in the ladder 2h .. L/2
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import KERNEL_NAMES

WEIGHT_PATTERNS = ("ones", "alternating", "random")
BATTERY_NAMES = ("log", "log_shift", "trig", "step", "constant")


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))


@dataclass
class GridSpec:
    n: int = 1
    P: int = 2048
    L: float = 8.0


@dataclass
class TimeGridSpec:
    K: int = 7
    refinement: int = 8
    t1: float = 2.0
    spacing: str = "dyadic"


@dataclass
class LacunarySpec:
    delta: float = 2.0
    mode: str = "strong"
    M: int = 8
    a0: float = 0.25
    weights: str = "ones"


@dataclass
class ExponentSpec:
    rho: list = field(default_factory=lambda: [3.0])
    q: float = 2.0
    p: list = field(default_factory=lambda: [1.5, 2.0, 4.0])


@dataclass
class BatterySpec:
    functions: list = field(default_factory=lambda: ["log", "log_shift", "trig", "step"])
    shifts: list = field(default_factory=lambda: [-2.5, 1.0, 3.0])
    trig_degree: int = 16
    n_trig: int = 2


@dataclass
class BallSpec:
    stride: int = 1
    per_octave: int = 4


@dataclass
class ExperimentConfig:
    kernel: str = "gaussian"
    seed: int = 0
    output_dir: str = "runs"
    grid: GridSpec = field(default_factory=GridSpec)
    time_grid: TimeGridSpec = field(default_factory=TimeGridSpec)
    lacunary: LacunarySpec = field(default_factory=LacunarySpec)
    exponents: ExponentSpec = field(default_factory=ExponentSpec)
    battery: BatterySpec = field(default_factory=BatterySpec)
    balls: BallSpec = field(default_factory=BallSpec)

    # -- validation ---------------------------------------------------------
    def violations(self) -> list[str]:
        v = []
        if self.kernel not in KERNEL_NAMES and not Path(self.kernel).exists():
            v.append(f"kernel: unknown kernel {self.kernel!r}")
        g = self.grid
        if not (isinstance(g.n, int) and g.n >= 1):
            v.append("grid.n: must be a positive integer")
        if not (isinstance(g.P, int) and g.P >= 8):
            v.append("grid.P: must be an integer >= 8")
        elif g.P & (g.P - 1):
            v.append("grid.P: must be a power of two")
        if not (isinstance(g.L, (int, float)) and g.L > 0):
            v.append("grid.L: must be positive")
        t = self.time_grid
        if not (isinstance(t.K, int) and t.K >= 2):
            v.append("time_grid.K: must be an integer >= 2")
        if not (isinstance(t.refinement, int) and t.refinement >= 2):
            v.append("time_grid.refinement: must be an integer >= 2")
        if not t.t1 > 0:
            v.append("time_grid.t1: must be positive")
        if t.spacing != "dyadic":
            v.append("time_grid.spacing: only 'dyadic' is supported")
        lac = self.lacunary
        if not lac.delta > 1:
            v.append("lacunary.delta: must exceed 1")
        if lac.mode not in ("plain", "strong"):
            v.append("lacunary.mode: must be 'plain' or 'strong'")
        if not (isinstance(lac.M, int) and lac.M > 2):
            v.append("lacunary.M: must be an integer > 2")
        if not lac.a0 > 0:
            v.append("lacunary.a0: must be positive")
        if lac.weights not in WEIGHT_PATTERNS:
            v.append(f"lacunary.weights: must be one of {WEIGHT_PATTERNS}")
        e = self.exponents
        if not e.rho or any(not r > 2 for r in e.rho):
            v.append("exponents.rho: every exponent must exceed 2")
        if not e.q > 1:
            v.append("exponents.q: must exceed 1")
        if not e.p or any(not (p >= 1) for p in e.p):
            v.append("exponents.p: every exponent must be >= 1")
        b = self.battery
        bad = [name for name in b.functions if name not in BATTERY_NAMES]
        if bad:
            v.append(f"battery.functions: unknown entries {bad}")
        if not (isinstance(b.trig_degree, int) and 1 <= b.trig_degree <= max(1, g.P // 8 if isinstance(g.P, int) else 1)):
            v.append("battery.trig_degree: must be an integer in [1, P/8]")
        if not (isinstance(b.n_trig, int) and b.n_trig >= 0):
            v.append("battery.n_trig: must be a non-negative integer")
        if isinstance(g.L, (int, float)) and any(abs(s) >= g.L for s in b.shifts):
            v.append("battery.shifts: centers must lie inside the box")
        s = self.balls
        if not (isinstance(s.stride, int) and s.stride >= 1):
            v.append("balls.stride: must be a positive integer")
        if not (isinstance(s.per_octave, int) and s.per_octave >= 1):
            v.append("balls.per_octave: must be a positive integer")
        return v

    def validate(self) -> "ExperimentConfig":
        v = self.violations()
        if v:
            raise ConfigError(v)
        return self

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        sections = {"grid": GridSpec, "time_grid": TimeGridSpec, "lacunary": LacunarySpec,
                    "exponents": ExponentSpec, "battery": BatterySpec, "balls": BallSpec}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError([f"unknown key {k!r}" for k in sorted(unknown)])
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                sub = sections[key]
                sub_known = {f.name for f in dataclasses.fields(sub)}
                extra = set(value) - sub_known
                if extra:
                    raise ConfigError([f"unknown key {key}.{k!r}" for k in sorted(extra)])
                kwargs[key] = sub(**value)
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]

    def replace(self, **overrides) -> "ExperimentConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"grid.P": 4096})``."""
        data = json.loads(self.dumps())
        for key, value in overrides.items():
            node = data
            *path, last = key.split(".")
            for p in path:
                node = node[p]
            if last not in node:
                raise ConfigError([f"unknown key {key!r}"])
            node[last] = value
        return ExperimentConfig.from_dict(data)

    # -- derived objects ----------------------------------------------------
    def lacunary_weights(self, M: int | None = None) -> np.ndarray:
        M = self.lacunary.M if M is None else M
        count = 2 * M + 1
        pattern = self.lacunary.weights
        if pattern == "ones":
            return np.ones(count)
        if pattern == "alternating":
            return (-1.0) ** np.arange(-M, M + 1)
        rng = np.random.default_rng([self.seed, 0x1AC])
        # weights for |i| <= M are the same for every M (nested draws)
        big = rng.uniform(-1.0, 1.0, size=2 * 64 + 1)
        if M > 64:
            raise ConfigError(["lacunary.M: random weights support M <= 64"])
        return big[64 - M:64 + M + 1]


def finite_or_none(x: float):
    return x if math.isfinite(x) else None

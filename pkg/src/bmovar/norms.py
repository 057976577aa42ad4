"""BMO, BLO and L^p estimators over finite ball families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .grid import Ball, Grid, SampledFunction, ball_samples, iter_ball_chunks, integrate
from .operators import OperatorField

# slack for per-ball Jensen comparisons (floating point rounding only)
JENSEN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BallFamily:
    """Balls centered on grid points (every ``stride``-th flat index) with a
    log-spaced radius ladder from ``2h`` to ``L/2``, ``per_octave`` radii per doubling.
    """

    grid: Grid
    stride: int = 1
    per_octave: int = 4
    radii: np.ndarray | None = None
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.stride < 1 or self.per_octave < 1:
            raise ValueError("stride and per_octave must be positive")
        radii = self.grid.radius_ladder(self.per_octave) if self.radii is None else np.asarray(self.radii, float)
        if radii.size == 0 or np.any(~(radii > 0)) or np.any(radii > self.grid.L / 2 * (1 + 1e-12)):
            raise ValueError("radii must lie in (0, L/2]")
        if np.any(np.diff(radii) <= 0):
            raise ValueError("radius ladder must be strictly increasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "centers", np.arange(0, self.grid.size, self.stride))

    def __len__(self) -> int:
        return self.centers.size * self.radii.size

    def resolution(self) -> dict:
        return {"P": self.grid.P, "n": self.grid.n, "L": self.grid.L, "stride": self.stride,
                "per_octave": self.per_octave, "radii": int(self.radii.size),
                "r_min": float(self.radii[0]), "r_max": float(self.radii[-1])}

    def chunks(self, values: np.ndarray) -> Iterator[tuple[float, np.ndarray, np.ndarray]]:
        for r in self.radii:
            for c, w in iter_ball_chunks(values, self.grid, float(r), self.centers):
                yield float(r), c, w


@dataclass
class NormReport:
    value: float
    witness_center: int
    witness_radius: float
    resolution: dict
    skipped: bool = False

    def witness(self, grid: Grid) -> Ball:
        return Ball.at_index(grid, self.witness_center, self.witness_radius)

    def as_dict(self) -> dict:
        return {"value": self.value, "witness": {"center_index": self.witness_center,
                                                 "radius": self.witness_radius},
                "resolution": self.resolution, "skipped": self.skipped}


def _sup(family: BallFamily, values: np.ndarray, per_ball) -> NormReport:
    best, wc, wr = -1.0, -1, float("nan")
    for r, c, w in family.chunks(values):
        q = per_ball(w)
        k = int(np.argmax(q))
        if q[k] > best:
            best, wc, wr = float(q[k]), int(c[k]), r
    return NormReport(best, wc, wr, family.resolution())


def mean_oscillation(w: np.ndarray) -> np.ndarray:
    """Row-wise ``mean |w - mean(w)|``."""
    d = w - w[:, :1]  # recentring first makes constant rows exactly zero
    return np.mean(np.abs(d - d.mean(axis=1, keepdims=True)), axis=1)


def lower_oscillation(w: np.ndarray) -> np.ndarray:
    """Row-wise ``mean(w) - min(w)``."""
    return np.mean(w - w.min(axis=1, keepdims=True), axis=1)


def bmo_norm(f: SampledFunction, family: BallFamily) -> NormReport:
    """``max_B mean_B |f - f_B|`` over the family."""
    return _sup(family, f.values, mean_oscillation)


def blo_norm(f: SampledFunction, family: BallFamily) -> NormReport:
    """``max_B mean_B (f - min_B f)`` over the family (real ``f``)."""
    if np.iscomplexobj(f.values):
        raise ValueError("lower oscillation needs a real-valued function")
    return _sup(family, f.values, lower_oscillation)


def ball_mean_oscillation(f: SampledFunction, ball: Ball) -> float:
    return float(mean_oscillation(ball_samples(f, ball)[None, :])[0])


def ball_lower_oscillation(f: SampledFunction, ball: Ball) -> float:
    return float(lower_oscillation(ball_samples(f, ball)[None, :])[0])


def lp_norm(f: SampledFunction, p: float) -> float:
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if not p >= 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    return float(np.real(integrate(SampledFunction(f.grid, np.abs(f.values) ** p))) ** (1.0 / p))


def check_bmo_structure(f: SampledFunction, family: BallFamily, ms: Sequence[int] = (1, 2, 3)) -> dict:
    """Empirical constants of the three BMO structure estimates, plus per-ball Jensen.

    * ``average_drift``: ``max |f_B - f_{2^m B}| / (m ||f||)``
    * ``l2_oscillation``: ``max (mean_B |f - f_B|^2)^{1/2} / ||f||``
    * ``dilated_oscillation``: ``max mean_{2^m B} |f - f_B| / (m ||f||)``

    Dilates are only used while ``2^m r <= L/2``.
    """
    bmo = bmo_norm(f, family)
    if bmo.value <= 0:
        return {"skipped": True, "reason": "constant function", "bmo": 0.0}
    grid = f.grid
    vals = f.values
    drift = {m: 0.0 for m in ms}
    dil = {m: 0.0 for m in ms}
    l2 = 0.0
    jensen_violations = 0
    balls = 0
    for r in family.radii:
        r = float(r)
        means = np.empty(family.centers.size)
        for c, w in iter_ball_chunks(vals, grid, r, family.centers):
            mean = w.mean(axis=1)
            dev = np.abs(w - mean[:, None])
            l1o = dev.mean(axis=1)
            l2o = np.sqrt(np.mean(dev**2, axis=1))
            jensen_violations += int(np.count_nonzero(l1o > l2o * (1 + JENSEN_RTOL)))
            balls += c.size
            l2 = max(l2, float(np.max(l2o)))
            means[c // family.stride] = mean
        for m in ms:
            R = r * 2**m
            if R > grid.L / 2 * (1 + 1e-12):
                continue
            for c, big in iter_ball_chunks(vals, grid, R, family.centers):
                small = means[c // family.stride]
                drift[m] = max(drift[m], float(np.max(np.abs(small - big.mean(axis=1)))) / m)
                dil[m] = max(dil[m], float(np.max(np.mean(np.abs(big - small[:, None]), axis=1))) / m)
    norm = bmo.value
    return {
        "skipped": False,
        "bmo": norm,
        "average_drift": {m: drift[m] / norm for m in ms},
        "l2_oscillation": l2 / norm,
        "dilated_oscillation": {m: dil[m] / norm for m in ms},
        "jensen_violations": jensen_violations,
        "balls": balls,
        "resolution": family.resolution(),
    }


def bmo_blo_ratio(operator_field: OperatorField | SampledFunction, input_f: SampledFunction,
                  family: BallFamily, skip_tol: float = 1e-12) -> dict:
    """``||T f||_BLO / ||f||_BMO``; constant inputs are reported as skipped."""
    out = operator_field.values if isinstance(operator_field, OperatorField) else operator_field
    name = operator_field.operator if isinstance(operator_field, OperatorField) else "field"
    bmo = bmo_norm(input_f, family)
    if bmo.value <= skip_tol:
        return {"operator": name, "skipped": True, "reason": "input has zero mean oscillation",
                "bmo": bmo.value}
    blo = blo_norm(out, family)
    return {"operator": name, "skipped": False, "ratio": blo.value / bmo.value,
            "bmo": bmo.as_dict(), "blo": blo.as_dict()}


def per_ball_table(f: SampledFunction, family: BallFamily) -> list[tuple[int, float, float, float]]:
    """Rows ``(center_index, radius, mean_oscillation, lower_oscillation)`` for CSV export."""
    rows = []
    for r, c, w in family.chunks(f.values):
        mo = mean_oscillation(w)
        lo = lower_oscillation(w) if not np.iscomplexobj(w) else np.full(c.size, np.nan)
        rows.extend(zip(c.tolist(), [r] * c.size, mo.tolist(), lo.tolist()))
    return rows

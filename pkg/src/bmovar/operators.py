"""Oscillation, rho-variation and differential transforms of ``{Phi_t}``, plus
Hardy-Littlewood type maximal functions and the Cotlar-type comparison.

Windows ``(N1, N2)`` always satisfy ``N1 < N2``, as in the definition of the
maximal transform; single-term windows are not admissible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import Grid, SampledFunction, gather_balls
from .kernels import KernelSpec
from .semigroup import SemigroupField, convolve_many, interval_ranges

_RATIO_RTOL = 1e-12


# --- types -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LacunarySequence:
    """Scales ``a_i`` for ``i = -M .. M+1`` and weights ``v_i`` for ``i = -M .. M``.

    The extra scale ``a_{M+1}`` lets the widest window ``(-M, M)`` be evaluated.
    ``strong=True`` additionally enforces ``a_{i+1}/a_i <= delta^2``.
    """

    delta: float
    M: int
    scales: np.ndarray
    weights: np.ndarray
    strong: bool = False

    def __post_init__(self):
        if not self.delta > 1:
            raise ValueError(f"lacunarity delta must exceed 1, got {self.delta}")
        if int(self.M) != self.M or self.M <= 2:
            raise ValueError(f"truncation M must be an integer > 2, got {self.M}")
        a = np.array(self.scales, dtype=float).reshape(-1)
        v = np.array(self.weights).reshape(-1)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if a.size != 2 * self.M + 2 or v.size != 2 * self.M + 1:
            raise ValueError("need 2M+2 scales (a_{-M}..a_{M+1}) and 2M+1 weights (v_{-M}..v_M)")
        if np.any(~(a > 0)):
            raise ValueError("scales must be positive")
        ratios = a[1:] / a[:-1]
        if np.any(ratios < self.delta * (1 - _RATIO_RTOL)):
            raise ValueError(f"sequence is not {self.delta}-lacunary (min ratio {ratios.min():.6g})")
        if self.strong and np.any(ratios > self.delta**2 * (1 + _RATIO_RTOL)):
            raise ValueError(f"ratio above delta^2 (max ratio {ratios.max():.6g})")
        if not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite")
        a.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "scales", a)
        object.__setattr__(self, "weights", v)

    @classmethod
    def geometric(cls, delta: float = 2.0, M: int = 8, a0: float = 1.0, weights=None,
                  strong: bool = True) -> "LacunarySequence":
        """``a_i = a0 * delta^i``; ``weights`` defaults to all ones."""
        i = np.arange(-M, M + 2, dtype=float)
        v = np.ones(2 * M + 1) if weights is None else weights
        return cls(delta, M, a0 * delta**i, v, strong)

    @property
    def v_inf(self) -> float:
        return float(np.max(np.abs(self.weights)))

    @property
    def indices(self) -> np.ndarray:
        """Weight indices ``-M .. M``."""
        return np.arange(-self.M, self.M + 1)

    def a(self, i: int) -> float:
        if not -self.M <= i <= self.M + 1:
            raise IndexError(f"a_{i} not materialized")
        return float(self.scales[i + self.M])

    def v(self, i: int):
        if not -self.M <= i <= self.M:
            raise IndexError(f"v_{i} not materialized")
        return self.weights[i + self.M]

    def truncated(self, M: int) -> "LacunarySequence":
        """Same sequence materialized only over ``-M .. M+1``."""
        if not 2 < M <= self.M:
            raise ValueError(f"cannot truncate M={self.M} to {M}")
        k = self.M - M
        return LacunarySequence(self.delta, M, self.scales[k:self.scales.size - k],
                                self.weights[k:self.weights.size - k], self.strong)


@dataclass(frozen=True)
class WindowIndex:
    N1: int
    N2: int

    def __post_init__(self):
        if not self.N1 < self.N2:
            raise ValueError(f"window needs N1 < N2, got ({self.N1}, {self.N2})")

    def check(self, seq: LacunarySequence) -> None:
        if not (-seq.M <= self.N1 and self.N2 <= seq.M):
            raise IndexError(f"window ({self.N1}, {self.N2}) outside materialized range [-{seq.M}, {seq.M}]")


@dataclass
class VariationResult:
    value: float
    optimal_subsequence: list[int]


@dataclass(frozen=True, eq=False)
class OperatorField:
    """Pointwise operator output on the input's grid, with provenance."""

    values: SampledFunction
    operator: str
    params: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.values.grid


# --- oscillation -------------------------------------------------------------

def _flat_index(grid: Grid, x) -> int:
    return int(x) if np.isscalar(x) else grid.ravel(x)


def oscillation_field(field: SemigroupField) -> OperatorField:
    if field.times.K < 2:
        raise ValueError("oscillation needs at least two base scales")
    ranges = interval_ranges(field)
    vals = np.sqrt(np.sum(ranges**2, axis=0))
    return OperatorField(SampledFunction(field.grid, vals), "oscillation",
                         {"K": field.times.K, "R": field.times.refinement})


def oscillation(field: SemigroupField, x) -> float:
    """``(sum_i range_i(x)^2)^{1/2}`` over the ``K-1`` base intervals."""
    if field.times.K < 2:
        raise ValueError("oscillation needs at least two base scales")
    vals = field.values_at(_flat_index(field.grid, x))
    total = 0.0
    for i in range(field.times.n_intervals):
        block = vals[field.times.interval_indices(i)]
        if np.iscomplexobj(block):
            rng = np.max(np.abs(block[:, None] - block[None, :]))
        else:
            rng = block.max() - block.min()
        total += float(rng) ** 2
    return math.sqrt(total)


# --- variation ---------------------------------------------------------------

def variation_dp(values: np.ndarray, rho: float, track: bool = False):
    """Longest path over decreasing subsequences of a scale pool.

    ``values`` has shape ``(S, ...)`` ordered by decreasing scale.  Vertex ``k``
    stores ``best[k]``, the largest sum of ``|u_j - u_l|^rho`` over chains
    ending at ``k``; edges go from every earlier scale.  Returns the rho-th root
    of ``max_k best[k]`` (and, if ``track``, the optimal chain for 1-D input).
    No check is made on ``rho``; see :func:`variation`.
    """
    u = np.asarray(values)
    S = u.shape[0]
    best = np.zeros(u.shape, dtype=float)
    pred = np.full(u.shape, -1, dtype=int) if track else None
    for k in range(1, S):
        cand = best[:k] + np.abs(u[:k] - u[k]) ** rho
        j = np.argmax(cand, axis=0)
        top = np.take_along_axis(cand, j[None, ...], axis=0)[0] if cand.ndim > 1 else cand[j]
        take = top > 0.0
        best[k] = np.where(take, top, 0.0)
        if track:
            pred[k] = np.where(take, j, -1)
    total = best.max(axis=0)
    value = total ** (1.0 / rho)
    if not track:
        return value
    if u.ndim != 1:
        raise ValueError("path tracking needs a single scale profile")
    k = int(np.argmax(best))
    chain = []
    if best[k] > 0:
        while k >= 0:
            chain.append(k)
            k = int(pred[k])
    return float(value), chain[::-1]


def _check_rho(rho: float) -> None:
    if not rho > 2:
        raise ValueError("variation exponent must exceed 2")


def variation(field: SemigroupField, x, rho: float) -> VariationResult:
    """rho-variation at ``x`` over all decreasing subsequences of the field's scales."""
    _check_rho(rho)
    vals = field.values_at(_flat_index(field.grid, x))
    value, chain = variation_dp(vals, rho, track=True)
    return VariationResult(value, chain)


def variation_field(field: SemigroupField, rho: float) -> OperatorField:
    _check_rho(rho)
    vals = variation_dp(field.slices, rho)
    return OperatorField(SampledFunction(field.grid, vals), "variation",
                         {"rho": rho, "K": field.times.K, "R": field.times.refinement})


def chain_value(values: np.ndarray, chain: Sequence[int], rho: float) -> float:
    """``(sum |u_{c_j} - u_{c_{j+1}}|^rho)^{1/rho}`` for an explicit chain."""
    u = np.asarray(values)[list(chain)]
    return float(np.sum(np.abs(np.diff(u)) ** rho) ** (1.0 / rho))


# --- differential transforms -------------------------------------------------

@dataclass(frozen=True, eq=False)
class LacunaryField:
    """``Phi_{a_i} f`` for ``i = -M .. M+1`` (rows, flattened samples)."""

    base: SampledFunction
    seq: LacunarySequence
    slices: np.ndarray = field(repr=False)

    @property
    def grid(self) -> Grid:
        return self.base.grid

    def terms(self) -> np.ndarray:
        """Rows ``v_i (Phi_{a_{i+1}} f - Phi_{a_i} f)`` for ``i = -M .. M``."""
        w = self.seq.weights.reshape((-1,) + (1,) * (self.slices.ndim - 1))
        return w * (self.slices[1:] - self.slices[:-1])


def lacunary_field(f: SampledFunction, phi: KernelSpec, seq: LacunarySequence,
                   backend: str = "spectral") -> LacunaryField:
    return LacunaryField(f, seq, convolve_many(f, phi, seq.scales, backend))


def _row(seq: LacunarySequence, i: int) -> int:
    return i + seq.M


def partial_sum_field(lf: LacunaryField, w: WindowIndex) -> np.ndarray:
    """``S_{a,v;(N1,N2)} f`` at every grid point (flattened)."""
    w.check(lf.seq)
    terms = lf.terms()
    return terms[_row(lf.seq, w.N1):_row(lf.seq, w.N2) + 1].sum(axis=0)


def diff_transform_partial(f: SampledFunction, phi: KernelSpec, seq: LacunarySequence,
                           w: WindowIndex, x, *, lf: LacunaryField | None = None):
    """``sum_{i=N1}^{N2} v_i (Phi_{a_{i+1}} f(x) - Phi_{a_i} f(x))``."""
    w.check(seq)
    flat = _flat_index(f.grid, x)
    if lf is None:
        needed = seq.scales[_row(seq, w.N1):_row(seq, w.N2) + 2]
        rows = convolve_many(f, phi, needed)[:, flat]
        v = seq.weights[_row(seq, w.N1):_row(seq, w.N2) + 1]
        return np.sum(v * (rows[1:] - rows[:-1]))
    return partial_sum_field(lf, w)[flat]


def admissible_range(M: int) -> tuple[int, int]:
    """Weight indices spanned by the truncated maximal transform: ``-M+1 < N1 < N2 < M-1``."""
    return -M + 2, M - 2


def maximal_from_terms(terms: np.ndarray) -> np.ndarray:
    """``max_{N1 < N2} |sum_{i=N1}^{N2} terms_i|`` along axis 0 by prefix scan.

    With ``P(k) = sum_{i<=k} terms_i`` a window is ``P(N2) - P(N1-1)`` with the
    two prefix indices at least 2 apart, so a running max/min of ``P`` lagged
    by two steps suffices.  Complex terms fall back to all prefix pairs.
    """
    t = np.asarray(terms)
    m = t.shape[0]
    if m < 2:
        raise ValueError("need at least two terms for a window with N1 < N2")
    prefix = np.concatenate([np.zeros((1,) + t.shape[1:], dtype=t.dtype), np.cumsum(t, axis=0)])
    if np.iscomplexobj(t):
        best = np.zeros(t.shape[1:])
        for q in range(2, m + 1):
            best = np.maximum(best, np.max(np.abs(prefix[q] - prefix[:q - 1]), axis=0))
        return best
    run_max = prefix[0]
    run_min = prefix[0]
    best = np.zeros(t.shape[1:])
    for q in range(2, m + 1):
        run_max = np.maximum(run_max, prefix[q - 2])
        run_min = np.minimum(run_min, prefix[q - 2])
        best = np.maximum(best, np.maximum(prefix[q] - run_min, run_max - prefix[q]))
    return best


def _maximal_terms(lf: LacunaryField, M: int) -> np.ndarray:
    if int(M) != M or M <= 2:
        raise ValueError(f"truncation M must be an integer > 2, got {M}")
    if M > lf.seq.M:
        raise ValueError(f"sequence materialized only up to M={lf.seq.M}")
    lo, hi = admissible_range(M)
    return lf.terms()[_row(lf.seq, lo):_row(lf.seq, hi) + 1]


def maximal_transform_field(lf: LacunaryField, M: int) -> OperatorField:
    """``S*_M f`` at every grid point."""
    vals = maximal_from_terms(_maximal_terms(lf, M))
    return OperatorField(SampledFunction(lf.grid, vals.reshape(lf.grid.shape)), "maximal_transform",
                         {"M": M, "delta": lf.seq.delta})


def diff_transform_maximal(f: SampledFunction, phi: KernelSpec, seq: LacunarySequence, M: int, x,
                           *, lf: LacunaryField | None = None) -> float:
    """``S*_M f(x) = sup_{-M+1 < N1 < N2 < M-1} |S_{a,v;(N1,N2)} f(x)|``."""
    if int(M) != M or M <= 2:
        raise ValueError(f"truncation M must be an integer > 2, got {M}")
    flat = _flat_index(f.grid, x)
    if lf is None:
        lf = lacunary_field(f, phi, seq)
    terms = _maximal_terms(lf, M)[:, flat]
    return float(maximal_from_terms(terms))


def maximal_convergence(lf: LacunaryField, Ms: Sequence[int], x) -> list[tuple[int, float]]:
    """``S*_M f(x)`` for increasing ``M``: the full transform is read off as the limit."""
    flat = _flat_index(lf.grid, x)
    return [(int(M), float(maximal_from_terms(_maximal_terms(lf, M)[:, flat]))) for M in sorted(Ms)]


# --- kernel of the partial sums ---------------------------------------------

def partial_sum_kernel(seq: LacunarySequence, w: WindowIndex, y, phi: KernelSpec) -> np.ndarray:
    """``K_{a,v;N}(y) = sum_{i=N1}^{N2} v_i (phi_{a_{i+1}}(y) - phi_{a_i}(y))``."""
    w.check(seq)
    total = 0.0
    for i in range(w.N1, w.N2 + 1):
        total = total + seq.v(i) * (phi.dilate(seq.a(i + 1), y) - phi.dilate(seq.a(i), y))
    return total


def partial_sum_kernel_grad(seq: LacunarySequence, w: WindowIndex, y, phi: KernelSpec) -> np.ndarray:
    w.check(seq)
    total = 0.0
    for i in range(w.N1, w.N2 + 1):
        total = total + seq.v(i) * (phi.dilate_grad(seq.a(i + 1), y) - phi.dilate_grad(seq.a(i), y))
    return total


def _norm_y(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.abs(y) if n == 1 else np.sqrt(np.sum(y * y, axis=-1))


def check_kernel_bounds(seq: LacunarySequence, w: WindowIndex, phi: KernelSpec, y_samples) -> dict:
    """Empirical constants ``sup |y|^n |K(y)|`` and ``sup |y|^{n+1} |grad K(y)|``."""
    n = phi.n
    r = _norm_y(y_samples, n)
    if np.any(r == 0):
        raise ValueError("y samples must exclude the origin")
    K = np.abs(partial_sum_kernel(seq, w, y_samples, phi))
    G = partial_sum_kernel_grad(seq, w, y_samples, phi)
    G = np.abs(G) if n == 1 else np.sqrt(np.sum(np.abs(G) ** 2, axis=-1))
    return {
        "window": (w.N1, w.N2),
        "size_constant": float(np.max(r**n * K)),
        "gradient_constant": float(np.max(r ** (n + 1) * G)),
        "samples": int(r.size),
    }


def tail_kernel_bound(seq: LacunarySequence, m: int, phi: KernelSpec, y_samples,
                      top: int | None = None) -> float:
    """``sup_y |sum_{i=m}^{top} v_i (phi_{a_{i+1}} - phi_{a_i})(y)| * a_m^n`` (``top`` defaults to M)."""
    top = seq.M if top is None else top
    total = 0.0
    for i in range(m, top + 1):
        total = total + seq.v(i) * (phi.dilate(seq.a(i + 1), y_samples) - phi.dilate(seq.a(i), y_samples))
    return float(np.max(np.abs(total)) * seq.a(m) ** phi.n)


# --- maximal functions -------------------------------------------------------

def _ladder(radius_ladder) -> np.ndarray:
    r = np.atleast_1d(np.asarray(radius_ladder, dtype=float))
    if r.size == 0:
        raise ValueError("radius ladder is empty")
    return r


def ball_means(values: np.ndarray, grid: Grid, centers, radius_ladder, power: float = 1.0) -> np.ndarray:
    """``max_r mean_{B(x,r)} |values|^power`` for each flat center ``x``."""
    centers = np.atleast_1d(np.asarray(centers, dtype=int))
    absv = np.abs(np.asarray(values).reshape(-1)) ** power
    best = np.zeros(centers.size)
    for r in _ladder(radius_ladder):
        st = grid.ball_stencil(r)
        if len(st) == 0:
            continue
        best = np.maximum(best, gather_balls(absv, grid, st, centers).mean(axis=1))
    return best


def hl_maximal(f: SampledFunction, x, radius_ladder) -> float:
    """``sup_r mean_{B(x, r)} |f|`` over the ladder."""
    return float(ball_means(f.values, f.grid, [_flat_index(f.grid, x)], radius_ladder)[0])


def lq_maximal(f: SampledFunction, x, q: float, radius_ladder) -> float:
    """``sup_r (mean_{B(x, r)} |f|^q)^{1/q}`` over the ladder."""
    if not q > 1:
        raise ValueError("L^q maximal function needs q > 1")
    return float(ball_means(f.values, f.grid, [_flat_index(f.grid, x)], radius_ladder, q)[0] ** (1.0 / q))


@dataclass
class CotlarReport:
    M: int
    q: float
    ratios: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    skipped: bool = False
    reason: str = ""

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)))


def cotlar_check(f: SampledFunction, phi: KernelSpec, seq: LacunarySequence, M: int, q: float,
                 x_samples, radius_ladder=None, *, lf: LacunaryField | None = None) -> CotlarReport:
    """Pointwise ratio ``S*_M f(x) / (M(S_{(-M,M)} f)(x) + M_q f(x))``.

    A zero denominator with a nonzero numerator yields an infinite ratio.
    """
    if not q > 1:
        raise ValueError("L^q maximal function needs q > 1")
    if int(M) != M or M <= 2:
        raise ValueError(f"truncation M must be an integer > 2, got {M}")
    grid = f.grid
    xs = np.array([_flat_index(grid, x) for x in x_samples], dtype=int)
    ladder = grid.radius_ladder() if radius_ladder is None else radius_ladder
    if not np.any(f.values):
        return CotlarReport(M, q, np.zeros(0), np.zeros(0), np.zeros(0), True, "f vanishes identically")
    if lf is None or lf.seq.M < M:
        lf = lacunary_field(f, phi, seq)
    num = maximal_from_terms(_maximal_terms(lf, M)[:, xs])
    full = partial_sum_field(lf, WindowIndex(-M, M))
    den = ball_means(full, grid, xs, ladder) + ball_means(f.values, grid, xs, ladder, q) ** (1.0 / q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return CotlarReport(M, q, ratios, num, den)


"""The convolution family ``Phi_t f = phi_t * f`` evaluated over a grid of scales."""
from __future__ import annotations

import hashlib
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import Grid, SampledFunction
from .kernels import KernelSpec

BACKENDS = ("spectral", "direct")
CACHE_ENV = "BMOVAR_CACHE_DIR"
CACHE_FORMAT_VERSION = 1
WRAP_TOL = 1e-8


class WraparoundWarning(UserWarning):
    """Kernel mass outside the box exceeds the tolerance; periodization error is not negligible."""


class BackendMismatchError(RuntimeError):
    pass


def _van_der_corput(k: int) -> float:
    q, denom = 0.0, 1.0
    while k:
        denom *= 2.0
        k, bit = divmod(k, 2)
        q += bit / denom
    return q


def subdivision_fractions(R: int) -> np.ndarray:
    """Positions in ``[0, 1]`` of ``R`` sub-samples: both endpoints, then base-2
    van der Corput points.  The set for ``R`` is contained in the set for any
    larger ``R``; for ``R = 2^k + 1`` it is the uniform subdivision.
    """
    if R < 1:
        raise ValueError("refinement must be >= 1")
    if R == 1:
        return np.array([0.0])
    fr = [0.0, 1.0] + [_van_der_corput(k) for k in range(1, R - 1)]
    return np.sort(np.array(fr))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly decreasing scales ``t_1 > ... > t_K > 0`` plus ``R`` sub-samples per interval.

    Each interval ``[t_{i+1}, t_i]`` carries ``R`` log-placed points including
    both endpoints (``R = 2``: endpoints only).  Intervals are 0-based here.
    """

    scales: np.ndarray
    refinement: int = 2

    def __post_init__(self):
        s = np.array(self.scales, dtype=float).reshape(-1)
        if s.size < 1 or np.any(~(s > 0)) or np.any(np.diff(s) >= 0):
            raise ValueError("time grid scales must be positive and strictly decreasing")
        if int(self.refinement) != self.refinement or self.refinement < 1:
            raise ValueError("refinement must be a positive integer")
        s.setflags(write=False)
        object.__setattr__(self, "scales", s)
        object.__setattr__(self, "refinement", int(self.refinement))

    @classmethod
    def dyadic(cls, K: int = 12, refinement: int = 8, t1: float = 1.0) -> "TimeGrid":
        """``t_i = t1 * 2^{1-i}`` for ``i = 1..K``."""
        return cls(t1 * 2.0 ** (-np.arange(K, dtype=float)), refinement)

    @property
    def K(self) -> int:
        return self.scales.size

    @property
    def n_intervals(self) -> int:
        return self.K - 1

    def with_refinement(self, R: int) -> "TimeGrid":
        return TimeGrid(self.scales, R)

    def _interval_points(self, i: int) -> np.ndarray:
        hi, lo = self.scales[i], self.scales[i + 1]
        theta = subdivision_fractions(max(self.refinement, 2))
        pts = hi * (lo / hi) ** theta
        pts[0], pts[-1] = hi, lo
        return pts

    def flattened(self) -> np.ndarray:
        """All scales, decreasing, shared endpoints counted once."""
        if self.K == 1 or self.refinement <= 2:
            return self.scales.copy()
        parts = [self._interval_points(i)[:-1] for i in range(self.n_intervals)]
        return np.concatenate(parts + [self.scales[-1:]])

    def interval_indices(self, i: int) -> np.ndarray:
        """Indices into :meth:`flattened` of the sub-grid of interval ``i``."""
        if not 0 <= i < self.n_intervals:
            raise IndexError(f"interval index {i} out of range [0, {self.n_intervals})")
        per = max(self.refinement, 2) - 1
        return np.arange(i * per, (i + 1) * per + 1)

    def digest(self) -> str:
        h = hashlib.sha256(self.scales.tobytes())
        h.update(str(self.refinement).encode())
        return h.hexdigest()[:16]


def kernel_weights(phi: KernelSpec, grid: Grid, t: float) -> np.ndarray:
    """Grid samples of ``phi_t`` at periodic displacements, renormalized to unit sum.

    Displacement index 0 sits at array index 0 (FFT layout).
    """
    if phi.n != grid.n:
        raise ValueError("kernel and grid dimensions differ")
    if not t > 0:
        raise ValueError(f"dilation scale must be positive, got {t}")
    k = np.fft.fftfreq(grid.P, d=1.0 / grid.P)  # 0, 1, ..., -1
    disp = np.meshgrid(*([k * grid.h] * grid.n), indexing="ij")
    r = np.sqrt(sum(d * d for d in disp))
    w = phi.profile(r / t)
    total = w.sum()
    if not total > 0:
        raise ValueError(f"kernel at scale {t} has no mass on the grid")
    return w / total


def check_wraparound(phi: KernelSpec, grid: Grid, t: float) -> float:
    tail = phi.tail_mass(grid.L / t)
    if tail > WRAP_TOL:
        warnings.warn(f"{phi.name} kernel at t={t:g} has mass {tail:.2e} outside |x| <= L={grid.L:g}",
                      WraparoundWarning, stacklevel=3)
    return tail


def multiplier(phi: KernelSpec, grid: Grid, t: float) -> np.ndarray:
    """Discrete Fourier multiplier of ``Phi_t`` on the grid."""
    return np.fft.fftn(kernel_weights(phi, grid, t))


def _convolve_direct(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape, dtype=np.result_type(values, w))
    axes = tuple(range(values.ndim))
    for idx in zip(*np.nonzero(w)):
        out += w[idx] * np.roll(values, idx, axis=axes)
    return out


def _convolve_spectral(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.fft.ifftn(np.fft.fftn(values) * np.fft.fftn(w))
    return out if np.iscomplexobj(values) else out.real


def convolve(f: SampledFunction, phi: KernelSpec, t: float, backend: str = "spectral",
             verify: bool = False, tol: float = 1e-8) -> SampledFunction:
    """Periodic convolution ``phi_t * f`` with the sampled, unit-sum kernel.

    With ``verify=True`` both backends run and a :class:`BackendMismatchError`
    is raised if they differ by more than ``tol`` in sup norm.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    check_wraparound(phi, f.grid, t)
    w = kernel_weights(phi, f.grid, t)
    if backend == "spectral":
        out = _convolve_spectral(f.values, w)
    else:
        out = _convolve_direct(f.values, w)
    if verify:
        other = _convolve_direct(f.values, w) if backend == "spectral" else _convolve_spectral(f.values, w)
        gap = float(np.max(np.abs(out - other)))
        if gap > tol:
            raise BackendMismatchError(f"backends differ by {gap:.3e} at t={t:g}")
    return SampledFunction(f.grid, out)


@dataclass(frozen=True, eq=False)
class SemigroupField:
    """``slices[j] = Phi_{scales[j]} f`` (flattened samples), one row per scale."""

    base: SampledFunction
    times: TimeGrid
    scales: np.ndarray
    slices: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.slices.shape != (self.scales.size, self.base.grid.size):
            raise ValueError("one slice per flattened scale is required")
        self.slices.setflags(write=False)

    @property
    def grid(self) -> Grid:
        return self.base.grid

    def slice(self, j: int) -> SampledFunction:
        return SampledFunction(self.grid, self.slices[j])

    def values_at(self, x) -> np.ndarray:
        """Scale profile ``tau -> Phi_tau f(x)`` at grid point ``x`` (flat or multi-index)."""
        flat = x if np.isscalar(x) else self.grid.ravel(x)
        return self.slices[:, int(flat)]


class FieldCache:
    """On-disk cache of semigroup fields (``.npz`` files, format version 1).

    Key: SHA-256 over format version, kernel name, grid ``(n, P, L)``, flattened
    scales, backend and the raw input samples.  Each file stores
    ``format_version``, ``scales`` and ``slices``.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_env(cls) -> "FieldCache | None":
        root = os.environ.get(CACHE_ENV)
        return cls(root) if root else None

    @staticmethod
    def key(f: SampledFunction, phi: KernelSpec, scales: np.ndarray, backend: str) -> str:
        g = f.grid
        h = hashlib.sha256(f"v{CACHE_FORMAT_VERSION}|{phi.name}|{phi.n}|{g.n}|{g.P}|{g.L!r}|{backend}".encode())
        h.update(np.ascontiguousarray(scales, dtype=float).tobytes())
        h.update(np.ascontiguousarray(f.values).tobytes())
        return h.hexdigest()

    def path(self, key: str) -> Path:
        return self.root / f"field-{key[:32]}.npz"

    def load(self, key: str, scales: np.ndarray) -> np.ndarray | None:
        p = self.path(key)
        if not p.exists():
            return None
        with np.load(p) as data:
            if int(data["format_version"]) != CACHE_FORMAT_VERSION:
                return None
            if not np.array_equal(data["scales"], scales):
                return None
            return np.array(data["slices"])

    def store(self, key: str, scales: np.ndarray, slices: np.ndarray) -> None:
        tmp = self.path(key).with_suffix(".tmp.npz")
        np.savez(tmp, format_version=CACHE_FORMAT_VERSION, scales=scales, slices=slices)
        os.replace(tmp, self.path(key))


def convolve_many(f: SampledFunction, phi: KernelSpec, scales: Sequence[float],
                  backend: str = "spectral") -> np.ndarray:
    """Rows ``Phi_t f`` (flattened) for every ``t`` in ``scales``."""
    scales = np.asarray(scales, dtype=float)
    grid = f.grid
    dtype = complex if np.iscomplexobj(f.values) else float
    out = np.empty((scales.size, grid.size), dtype=dtype)
    if backend == "spectral":
        fhat = np.fft.fftn(f.values)
        for j, t in enumerate(scales):
            check_wraparound(phi, grid, t)
            res = np.fft.ifftn(fhat * np.fft.fftn(kernel_weights(phi, grid, t)))
            out[j] = (res if dtype is complex else res.real).reshape(-1)
    else:
        for j, t in enumerate(scales):
            out[j] = convolve(f, phi, t, backend).flat
    return out


def build_field(f: SampledFunction, phi: KernelSpec, times: TimeGrid,
                backend: str = "spectral", cache: FieldCache | None = None) -> SemigroupField:
    scales = times.flattened()
    slices = None
    key = None
    if cache is not None:
        key = cache.key(f, phi, scales, backend)
        slices = cache.load(key, scales)
    if slices is None:
        slices = convolve_many(f, phi, scales, backend)
        if cache is not None:
            cache.store(key, scales, slices)
    return SemigroupField(f, times, scales, slices)


def interval_range(field: SemigroupField, x, i: int) -> float:
    """``max - min`` of ``tau -> Phi_tau f(x)`` over the sub-grid of interval ``i``.

    On a finite set the largest pairwise gap equals the range, so this is the
    interval supremum of ``|Phi_a f(x) - Phi_b f(x)|`` over sub-grid pairs.
    """
    vals = field.values_at(x)[field.times.interval_indices(i)]
    if np.iscomplexobj(vals):
        # range identity needs an order; fall back to pairs for complex data
        return float(np.max(np.abs(vals[:, None] - vals[None, :])))
    return float(np.max(vals) - np.min(vals))


def interval_ranges(field: SemigroupField) -> np.ndarray:
    """Array ``(K-1, size)`` of :func:`interval_range` at every grid point."""
    T = field.times
    out = np.empty((T.n_intervals, field.grid.size))
    for i in range(T.n_intervals):
        block = field.slices[T.interval_indices(i)]
        if np.iscomplexobj(block):
            out[i] = np.max(np.abs(block[:, None, :] - block[None, :, :]), axis=(0, 1))
        else:
            out[i] = block.max(axis=0) - block.min(axis=0)
    return out

"""Uniform periodic grids on [-L, L)^n and the sampled functions living on them.

Every operator in the package consumes a :class:`SampledFunction`.  Balls are
open and use the periodic (minimum-image) distance, so the box behaves as a
torus; the essential infimum over a ball is the minimum over its member samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

FORMAT_TAG = "bmovar-sampled-function"
FORMAT_VERSION = 1

# relative slack so that r = k*h reliably excludes the k-th neighbour (open balls)
_RADIUS_RTOL = 1e-12


def _inside(dist, radius):
    return dist < radius * (1 - _RADIUS_RTOL)


class EmptyBallError(ValueError):
    """A ball contains no grid point."""


@dataclass(frozen=True)
class Grid:
    """Periodic grid with ``P`` points per axis covering ``[-L, L)^n``."""

    n: int
    P: int
    L: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n}")
        if int(self.P) != self.P or self.P < 1:
            raise ValueError(f"points per axis must be a positive integer, got {self.P}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"box half-width must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "P", int(self.P))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.P

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.P,) * self.n

    @property
    def size(self) -> int:
        return self.P**self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** self.n

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.P)

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays (``indexing='ij'``), one per axis."""
        ax = self.axis()
        return list(np.meshgrid(*([ax] * self.n), indexing="ij"))

    def points(self) -> np.ndarray:
        """All grid coordinates as an array of shape ``(size, n)`` in C order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def origin_index(self) -> tuple[int, ...]:
        return (self.P // 2,) * self.n

    def unravel(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(int(flat), self.shape))

    def ravel(self, index: Sequence[int]) -> int:
        idx = tuple(int(i) % self.P for i in index)
        return int(np.ravel_multi_index(idx, self.shape))

    def coords(self, index: Sequence[int] | int) -> np.ndarray:
        if np.isscalar(index):
            index = self.unravel(int(index))
        idx = np.asarray(index, dtype=int) % self.P
        if idx.shape != (self.n,):
            raise ValueError(f"index {index!r} does not address a {self.n}-d grid")
        return -self.L + self.h * idx

    def nearest_index(self, x: Sequence[float]) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.rint((x + self.L) / self.h).astype(int) % self.P
        return tuple(int(i) for i in k)

    def periodic_delta(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Minimum-image displacement ``x - y`` per axis, in ``[-L, L)``."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return (d + self.L) % (2.0 * self.L) - self.L

    def periodic_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(self.periodic_delta(x, y) ** 2, axis=-1))

    def ball_stencil(self, radius: float) -> np.ndarray:
        """Integer offsets ``(m, n)`` of the grid points within ``radius`` of a grid point."""
        if radius > self.L:
            raise ValueError(f"radius {radius} exceeds box half-width {self.L}")
        kmax = min(int(math.floor(radius / self.h)) + 1, self.P // 2)
        ks = np.arange(-kmax, kmax + 1)
        ks = ks[(ks >= -(self.P // 2)) & (ks < self.P - self.P // 2)]
        offs = np.stack(
            [m.ravel() for m in np.meshgrid(*([ks] * self.n), indexing="ij")], axis=1
        )
        dist = self.h * np.sqrt(np.sum(offs.astype(float) ** 2, axis=1))
        return offs[_inside(dist, radius)]

    def radius_ladder(self, per_octave: int = 4, r_min: float | None = None,
                      r_max: float | None = None) -> np.ndarray:
        """Log-spaced radii from ``2h`` to ``L/2`` with ``per_octave`` radii per doubling."""
        r_min = 2.0 * self.h if r_min is None else float(r_min)
        r_max = self.L / 2.0 if r_max is None else float(r_max)
        if not (0 < r_min <= r_max):
            raise ValueError(f"bad ladder bounds [{r_min}, {r_max}]")
        octaves = math.log2(r_max / r_min)
        count = int(math.floor(octaves * per_octave + 1e-9)) + 1
        return r_min * 2.0 ** (np.arange(count) / per_octave)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples of a real or complex function on every point of ``grid``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {vals.size}")
        vals = np.array(vals.reshape(self.grid.shape), copy=True)
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled function has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, func: Callable[..., np.ndarray]) -> "SampledFunction":
        """Sample ``func(*coordinate_arrays)`` on ``grid``."""
        vals = np.broadcast_to(np.asarray(func(*grid.mesh())), grid.shape)
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: Grid, c: complex | float) -> "SampledFunction":
        return cls(grid, np.full(grid.shape, c))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def at(self, index: Sequence[int] | int):
        if np.isscalar(index):
            return self.flat[int(index)]
        return self.values[tuple(int(i) % self.grid.P for i in index)]

    def is_constant(self, atol: float = 0.0) -> bool:
        v = self.flat
        return bool(np.max(np.abs(v - v[0])) <= atol)

    def shifted(self, shift: Sequence[int]) -> "SampledFunction":
        """Periodic translate: ``g(x) = f(x - shift*h)``."""
        return SampledFunction(self.grid, np.roll(self.values, tuple(shift), axis=tuple(range(self.grid.n))))

    def _other(self, other):
        if isinstance(other, SampledFunction):
            if other.grid != self.grid:
                raise ValueError("sampled functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - self._other(other))

    def __mul__(self, other):
        return SampledFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    def __abs__(self):
        return SampledFunction(self.grid, np.abs(self.values))


@dataclass(frozen=True)
class Ball:
    """Open ball ``B(center, radius)`` under the periodic distance."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @classmethod
    def at_index(cls, grid: Grid, index: Sequence[int] | int, radius: float) -> "Ball":
        return cls(tuple(grid.coords(index)), radius)

    def dilate(self, k: float) -> "Ball":
        return Ball(self.center, self.radius * k)

    def mask(self, grid: Grid) -> np.ndarray:
        if len(self.center) != grid.n:
            raise ValueError("ball and grid dimensions differ")
        d = grid.periodic_distance(grid.points(), np.asarray(self.center))
        return _inside(d, self.radius).reshape(grid.shape)

    def measure(self, grid: Grid) -> float:
        """Counting-measure volume: member count times ``h^n``."""
        return float(np.count_nonzero(self.mask(grid))) * grid.cell_volume


def _check_finite(f: SampledFunction) -> None:
    if not np.all(np.isfinite(f.values)):
        raise ValueError("non-finite samples")


def integrate(f: SampledFunction):
    """Midpoint rule on the periodic box: ``h^n * sum(values)``."""
    _check_finite(f)
    return f.grid.cell_volume * np.sum(f.values)


def ball_samples(f: SampledFunction, ball: Ball) -> np.ndarray:
    m = ball.mask(f.grid)
    if not m.any():
        raise EmptyBallError(f"ball {ball} contains no grid point (h = {f.grid.h})")
    return f.values[m]


def ball_average(f: SampledFunction, ball: Ball):
    return np.mean(ball_samples(f, ball))


def ball_min(f: SampledFunction, ball: Ball) -> float:
    return float(np.min(np.real_if_close(ball_samples(f, ball))))


def ball_max(f: SampledFunction, ball: Ball) -> float:
    return float(np.max(np.real_if_close(ball_samples(f, ball))))


def gather_balls(values: np.ndarray, grid: Grid, stencil: np.ndarray,
                 centers: np.ndarray) -> np.ndarray:
    """Samples of every ball: row ``i`` holds the stencil around flat center ``centers[i]``."""
    cidx = np.stack(np.unravel_index(np.asarray(centers), grid.shape), axis=1)
    idx = (cidx[:, None, :] + stencil[None, :, :]) % grid.P
    flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), grid.shape)
    return values.reshape(-1)[flat]


def iter_ball_chunks(values: np.ndarray, grid: Grid, radius: float,
                     centers: np.ndarray | None = None,
                     max_elems: int = 1 << 22) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(centers, samples)`` blocks for all balls of one radius."""
    stencil = grid.ball_stencil(radius)
    if centers is None:
        centers = np.arange(grid.size)
    step = max(1, max_elems // max(len(stencil), 1))
    for start in range(0, len(centers), step):
        c = centers[start:start + step]
        yield c, gather_balls(values, grid, stencil, c)


# --- serialization -----------------------------------------------------------

def save_function(path: str | Path, f: SampledFunction) -> None:
    """Write ``f`` as text: two header lines then one sample per line in C order.

    Header: ``# bmovar-sampled-function v1`` and ``# n=<n> P=<P> L=<L> dtype=<real|complex>``.
    Complex samples are written as ``re,im``.  Floats use 17 significant digits,
    so a save/load round trip is exact.
    """
    g = f.grid
    is_complex = np.iscomplexobj(f.values)
    lines = [f"# {FORMAT_TAG} v{FORMAT_VERSION}",
             f"# n={g.n} P={g.P} L={g.L!r} dtype={'complex' if is_complex else 'real'}"]
    if is_complex:
        lines += [f"{v.real:.17g},{v.imag:.17g}" for v in f.flat]
    else:
        lines += [f"{v:.17g}" for v in f.flat]
    Path(path).write_text("\n".join(lines) + "\n")


def load_function(path: str | Path) -> SampledFunction:
    text = Path(path).read_text().splitlines()
    if len(text) < 2 or not text[0].startswith(f"# {FORMAT_TAG} v"):
        raise ValueError(f"{path}: not a sampled-function file")
    version = int(text[0].rsplit("v", 1)[1])
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    meta = dict(tok.split("=", 1) for tok in text[1].lstrip("# ").split())
    grid = Grid(int(meta["n"]), int(meta["P"]), float(meta["L"]))
    body = [ln for ln in text[2:] if ln.strip()]
    if meta.get("dtype") == "complex":
        pairs = np.array([[float(x) for x in ln.split(",")] for ln in body])
        vals = pairs[:, 0] + 1j * pairs[:, 1]
    else:
        vals = np.array([float(ln) for ln in body])
    return SampledFunction(grid, vals)

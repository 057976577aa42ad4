"""Radial unit-mass kernels, their dilations and analytic scale derivatives.

A kernel is stored through its radial profile ``g`` with ``phi(x) = g(|x|)`` and
``int phi = 1``.  Dilations follow ``phi_t(x) = t^{-n} phi(x/t)``, hence

    d/dt phi_t(x) = -t^{-n-1} [n g(s) + s g'(s)],   s = |x|/t,
    grad phi_t(x) = t^{-n-1} g'(s) x/|x|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, special, stats
from scipy.interpolate import make_interp_spline

from .grid import Ball

KERNEL_NAMES = ("gaussian", "poisson", "bump")

Profile = Callable[[np.ndarray], np.ndarray]


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _radius(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1:
        return np.abs(x)
    if x.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}, got shape {x.shape}")
    return np.sqrt(np.sum(x * x, axis=-1))


def _check_scale(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError(f"dilation scale must be positive, got {t}")
    return t


class _GaussLegendre:
    def __init__(self, a: float, b: float, nodes: int):
        x, w = special.roots_legendre(nodes)
        self.x = 0.5 * (b - a) * x + 0.5 * (b + a)
        self.w = 0.5 * (b - a) * w


def _hankel(profile: Profile, n: int, support: float, nodes: int = 800, max_nodes: int = 1 << 14):
    """Return ``(F, dF)``: radial Fourier transform ``F(u) = int g(|x|) e^{-2 pi i x.xi}``
    with ``u = |xi|``, and its derivative, for a profile vanishing beyond ``support``.

    Uses ``F(u) = 2 pi u^{-nu} int g(r) J_nu(2 pi u r) r^{n/2} dr`` with ``nu = n/2 - 1``;
    the derivative follows from ``(z^{-nu} J_nu)' = -z^{-nu} J_{nu+1}``.  The
    Gauss-Legendre rule grows with ``u`` so that every oscillation is resolved,
    up to ``max_nodes``; beyond that frequency the transform is returned as 0.
    """
    nu = n / 2.0 - 1.0
    rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def rule(count: int):
        if count not in rules:
            gl = _GaussLegendre(0.0, support, count)
            rules[count] = (gl.x, gl.w * profile(gl.x) * gl.x ** (n / 2.0))
        return rules[count]

    def transform(u, order: float, extra_r: bool):
        u = np.abs(np.asarray(u, dtype=float))
        out = np.zeros_like(u)
        flat_u, flat_out = u.reshape(-1), out.reshape(-1)
        need = np.maximum(nodes, 8.0 * flat_u * support + 64.0)
        counts = 2 ** np.ceil(np.log2(need)).astype(int)
        for count in np.unique(counts):
            sel = np.nonzero((counts == count) & (flat_u > 0))[0]
            if sel.size == 0 or count > max_nodes:
                continue
            x, w = rule(int(count))
            for chunk in np.array_split(sel, max(1, sel.size * int(count) // (1 << 22))):
                up = flat_u[chunk]
                z = 2.0 * np.pi * up[:, None] * x
                ww = w * (2.0 * np.pi * x if extra_r else 1.0)
                flat_out[chunk] = 2.0 * np.pi * up ** (-nu) * np.sum(ww * special.jv(order, z), axis=-1)
        return flat_out.reshape(u.shape), u

    def F(u):
        out, u = transform(u, nu, False)
        out[u == 0] = 1.0
        return out

    def dF(u):
        out, _ = transform(u, nu + 1.0, True)
        return -out

    return F, dF


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Radial Schwartz kernel with unit mass.

    ``profile`` and ``dprofile`` take radii ``s >= 0``.  ``fourier``/``fourier_du``
    give the radial Fourier transform (convention ``e^{-2 pi i x.xi}``) and its
    derivative.  ``analytic`` is False for tabulated profiles, whose derivatives
    come from a spline.
    """

    name: str
    n: int
    profile: Profile = field(repr=False)
    dprofile: Profile = field(repr=False)
    fourier: Profile = field(repr=False)
    fourier_du: Profile = field(repr=False)
    mass_normalization: float = 1.0
    support: float = math.inf
    analytic: bool = True
    tail: Callable[[float], float] | None = field(default=None, repr=False)

    def evaluate(self, x) -> np.ndarray:
        return self.profile(_radius(x, self.n))

    def dilate(self, t, x) -> np.ndarray:
        """``t^{-n} phi(x/t)``."""
        t = _check_scale(t)
        return t ** (-self.n) * self.profile(_radius(x, self.n) / t)

    def dilate_dt(self, t, x) -> np.ndarray:
        """Analytic ``d/dt`` of ``phi_t(x)``."""
        t = _check_scale(t)
        s = _radius(x, self.n) / t
        return -(t ** (-self.n - 1)) * (self.n * self.profile(s) + s * self.dprofile(s))

    def dilate_grad(self, t, x) -> np.ndarray:
        """Spatial gradient of ``phi_t`` at ``x``; shape ``x.shape`` (n = 1) or ``(..., n)``."""
        t = _check_scale(t)
        x = np.asarray(x, dtype=float)
        r = _radius(x, self.n)
        radial = t ** (-self.n - 1) * self.dprofile(r / t)
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.n == 1:
                return np.where(r > 0, radial * np.sign(x), 0.0)
            unit = np.where(r[..., None] > 0, x / r[..., None], 0.0)
        return radial[..., None] * unit

    def tail_mass(self, R: float) -> float:
        """Mass of ``phi`` outside the ball of radius ``R``."""
        if self.tail is not None:
            return float(self.tail(R))
        if R >= self.support:
            return 0.0
        area = sphere_area(self.n)
        val, _ = integrate.quad(lambda s: area * s ** (self.n - 1) * float(self.profile(np.array(s))),
                                R, self.support, limit=200)
        return max(val, 0.0)


def gaussian(n: int = 1) -> KernelSpec:
    c = (2.0 * math.pi) ** (-n / 2.0)

    def g(s):
        return c * np.exp(-0.5 * np.asarray(s) ** 2)

    def dg(s):
        s = np.asarray(s)
        return -s * g(s)

    def F(u):
        return np.exp(-2.0 * math.pi**2 * np.asarray(u, dtype=float) ** 2)

    def dF(u):
        u = np.asarray(u, dtype=float)
        return -4.0 * math.pi**2 * u * F(u)

    return KernelSpec("gaussian", n, g, dg, F, dF, mass_normalization=c,
                      tail=lambda R: stats.chi2.sf(R * R, n))


def poisson(n: int = 1) -> KernelSpec:
    """``c_n (1 + |x|^2)^{-(n+1)/2}`` with ``c_n = Gamma((n+1)/2) / pi^{(n+1)/2}``."""
    c = math.gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)

    def g(s):
        return c * (1.0 + np.asarray(s) ** 2) ** (-(n + 1) / 2.0)

    def dg(s):
        s = np.asarray(s)
        return -(n + 1) * s / (1.0 + s * s) * g(s)

    def F(u):
        return np.exp(-2.0 * math.pi * np.abs(np.asarray(u, dtype=float)))

    def dF(u):
        return -2.0 * math.pi * F(u)

    tail = None
    if n == 1:
        tail = lambda R: 1.0 - 2.0 / math.pi * math.atan(R)  # noqa: E731
    elif n == 2:
        tail = lambda R: 1.0 / math.sqrt(1.0 + R * R)  # noqa: E731
    return KernelSpec("poisson", n, g, dg, F, dF, mass_normalization=c, tail=tail)


def _bump_raw(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def bump(n: int = 1) -> KernelSpec:
    """Normalized ``exp(-1/(1-|x|^2))`` on the unit ball."""
    area = sphere_area(n)
    gl = _GaussLegendre(0.0, 1.0, 400)
    mass = area * np.sum(gl.w * _bump_raw(gl.x) * gl.x ** (n - 1))
    c = 1.0 / mass

    def g(s):
        return c * _bump_raw(s)

    def dg(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = s < 1.0
        si = s[inside]
        out[inside] = c * np.exp(-1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2)
        return out

    F, dF = _hankel(g, n, 1.0)
    return KernelSpec("bump", n, g, dg, F, dF, mass_normalization=c, support=1.0)


def tabulated(radii, values, n: int = 1, order: int = 3, name: str = "tabulated") -> KernelSpec:
    """Kernel from a sampled radial profile, interpolated by a spline of ``order``.

    The profile is taken as zero beyond the last radius and rescaled to unit mass.
    Derivatives come from the spline, so the kernel is flagged non-analytic.
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.ndim != 1 or radii.shape != values.shape or np.any(np.diff(radii) <= 0) or radii[0] < 0:
        raise ValueError("tabulated profile needs strictly increasing radii >= 0 matching values")
    spl = make_interp_spline(radii, values, k=order)
    dspl = spl.derivative()
    rmax = float(radii[-1])
    gl = _GaussLegendre(0.0, rmax, 800)
    mass = sphere_area(n) * np.sum(gl.w * spl(gl.x) * gl.x ** (n - 1))
    if not mass > 0:
        raise ValueError("tabulated profile has non-positive mass")

    def g(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= rmax, spl(np.minimum(s, rmax)), 0.0) / mass

    def dg(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= rmax, dspl(np.minimum(s, rmax)), 0.0) / mass

    F, dF = _hankel(g, n, rmax)
    return KernelSpec(name, n, g, dg, F, dF, mass_normalization=1.0 / mass,
                      support=rmax, analytic=False)


def load_tabulated(path: str | Path, n: int = 1) -> KernelSpec:
    """Read a tabulated radial profile.

    File format: optional ``# order=<k>`` comment line (default 3), then one
    ``radius,value`` pair per line with strictly increasing radii.
    """
    order = 3
    radii, vals = [], []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line.lstrip("#").split():
                if tok.startswith("order="):
                    order = int(tok.split("=", 1)[1])
            continue
        r, v = line.split(",")
        radii.append(float(r))
        vals.append(float(v))
    return tabulated(radii, vals, n=n, order=order, name=Path(path).stem)


def get_kernel(name: str, n: int = 1) -> KernelSpec:
    if name == "gaussian":
        return gaussian(n)
    if name == "poisson":
        return poisson(n)
    if name == "bump":
        return bump(n)
    path = Path(name)
    if path.exists():
        return load_tabulated(path, n)
    raise ValueError(f"unknown kernel {name!r}; expected one of {KERNEL_NAMES} or a profile file")


def dilate(phi: KernelSpec, t, x):
    return phi.dilate(t, x)


def dilate_dt(phi: KernelSpec, t, x):
    return phi.dilate_dt(t, x)


def schwartz_seminorms(phi: KernelSpec, max_order: int = 2, extent: float = 40.0,
                       points: int = 20001) -> dict[tuple[int, int], float]:
    """``sup |x^a d^b phi(x)|`` along a ray for ``a, b <= max_order``.

    Orders above one are differentiated numerically from the analytic ``g'``.
    """
    x = np.linspace(-extent, extent, points)
    derivs = [phi.profile(np.abs(x)), np.sign(x) * phi.dprofile(np.abs(x))]
    while len(derivs) <= max_order:
        derivs.append(np.gradient(derivs[-1], x))
    return {(a, b): float(np.max(np.abs(x**a * derivs[b])))
            for a in range(max_order + 1) for b in range(max_order + 1)}


# --- derivative estimates ----------------------------------------------------

DERIVATIVE_ESTIMATES = ("decay", "far_decay", "local_smoothness", "far_smoothness")


@dataclass
class EstimateResult:
    name: str
    constant: float
    refined_constant: float
    resolution: int
    drift: float
    finite: bool
    stable: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _line_points(center: float, lo: float, hi: float, count: int) -> np.ndarray:
    """Points at distance in ``[lo, hi]`` from ``center`` on the real line."""
    if lo <= 0:
        return center + np.linspace(-hi, hi, 2 * count + 1)
    d = np.linspace(lo, hi, count)
    return center + np.concatenate([-d[::-1], d])


def _shell_points(center: np.ndarray, lo: float, hi: float, count: int) -> np.ndarray:
    from scipy.stats import qmc

    n = len(center)
    if n == 1:
        return _line_points(float(center[0]), lo, hi, count)[:, None]
    raw = qmc.Halton(d=n, scramble=False).random(count ** min(n, 2) * 4)
    pts = (2.0 * raw - 1.0) * hi
    r = np.sqrt(np.sum(pts**2, axis=1))
    return center + pts[(r >= lo) & (r <= hi)]


def _estimate_sup(phi: KernelSpec, which: str, ball: Ball, res: int,
                  t_range: tuple[float, float], extent: float) -> float:
    n = phi.n
    x0 = np.asarray(ball.center, dtype=float)
    r = ball.radius
    ts = np.geomspace(t_range[0], t_range[1], res)

    def dt(t, w):
        return phi.dilate_dt(t, w if n > 1 else w[..., 0])

    if which == "decay":
        xs = _shell_points(np.zeros(n), 0.0, extent, res)
        w = xs[None, :, :]
        tt = ts[:, None]
        ratio = np.abs(dt(tt, w)) * (tt + np.sqrt(np.sum(w * w, axis=-1))) ** (n + 1)
        return float(np.max(ratio))
    if which == "far_decay":
        xs = _shell_points(x0, 0.0, r, res)
        ys = _shell_points(x0, 2.0 * r, 2.0 * r + extent, res)
        w = xs[:, None, :] - ys[None, :, :]
        dist = np.sqrt(np.sum((ys - x0) ** 2, axis=-1))[None, :]
        best = 0.0
        for t in ts:
            best = max(best, float(np.max(np.abs(dt(t, w)) * dist ** (n + 1))))
        return best
    xs = _shell_points(x0, 0.0, r, res)
    if which == "local_smoothness":
        zs = _shell_points(x0, 0.0, 2.0 * r, res)
    elif which == "far_smoothness":
        zs = _shell_points(x0, 2.0 * r, 2.0 * r + extent, res)
    else:
        raise ValueError(f"unknown estimate {which!r}")
    dxy = np.sqrt(np.sum((xs[:, None, :] - xs[None, :, :]) ** 2, axis=-1))
    wx = xs[:, None, :] - zs[None, :, :]
    zdist = np.sqrt(np.sum((zs - x0) ** 2, axis=-1))
    best = 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        for t in ts:
            d = dt(t, wx)  # (x, z)
            diff = np.abs(d[:, None, :] - d[None, :, :])  # (x, y, z)
            if which == "local_smoothness":
                scale = t ** (n + 2)
            else:
                scale = t**1.5 * zdist[None, None, :] ** (n + 0.5)
            ratio = np.where(dxy[:, :, None] > 0, diff * scale / dxy[:, :, None], 0.0)
            best = max(best, float(np.max(ratio)))
    return best


def difference_quotient(phi: KernelSpec, t, x, y, z) -> np.ndarray:
    """``|d_t phi_t(x - z) - d_t phi_t(y - z)| / |x - y|``, defined as 0 where ``x = y``."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    d = np.abs(phi.dilate_dt(t, x - z) - phi.dilate_dt(t, y - z))
    gap = _radius(x - y, phi.n)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(gap > 0, d / np.where(gap > 0, gap, 1.0), 0.0)


def check_derivative_bounds(phi: KernelSpec, ball: Ball = Ball((0.0,), 1.0), *,
                            t_range: tuple[float, float] = (0.05, 5.0),
                            extent: float = 10.0, resolution: int = 32,
                            estimates=DERIVATIVE_ESTIMATES,
                            max_drift: float = 0.2) -> dict[str, EstimateResult]:
    """Empirical constants for the four scale-derivative estimates.

    Each constant is the supremum of LHS/RHS (without ``C``) over the sample set;
    it is recomputed with twice the sampling density and the relative drift
    between the two reported.
    """
    if resolution < 2 or not (0 < t_range[0] < t_range[1]) or extent <= 0:
        raise ValueError("degenerate sample set")
    if len(ball.center) != phi.n:
        raise ValueError("ball and kernel dimensions differ")
    out = {}
    for name in estimates:
        c1 = _estimate_sup(phi, name, ball, resolution, t_range, extent)
        c2 = _estimate_sup(phi, name, ball, 2 * resolution, t_range, extent)
        drift = abs(c2 - c1) / c2 if c2 > 0 else 0.0
        finite = math.isfinite(c1) and math.isfinite(c2)
        out[name] = EstimateResult(name, c1, c2, resolution, drift, finite,
                                   finite and drift < max_drift)
    return out

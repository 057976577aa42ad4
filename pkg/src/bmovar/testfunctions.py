"""Test-function battery: log singularities, trigonometric polynomials, a smoothed step."""
from __future__ import annotations

import numpy as np

from .grid import Grid, SampledFunction


def log_abs(grid: Grid, center=None, sign: float = 1.0, scale: float = 1.0) -> SampledFunction:
    """``sign * log(scale * max(|x - center|, h/2))`` with the periodic distance.

    The floor acts on ``|x - center|`` before scaling, so changing ``scale``
    only adds the constant ``sign * log(scale)``.
    """
    c = np.zeros(grid.n) if center is None else np.atleast_1d(np.asarray(center, float))
    d = grid.periodic_distance(grid.points(), c)
    vals = sign * np.log(scale * np.maximum(d, grid.h / 2))
    return SampledFunction(grid, vals)


def trig_poly(grid: Grid, degree: int, seed: int, complex_valued: bool = False) -> SampledFunction:
    """Random real trigonometric polynomial with frequencies ``|k_j| <= degree`` (periodic on the box).

    Coefficients are standard normal and scaled by ``1/(1+|k|)``.
    """
    rng = np.random.default_rng(seed)
    ks = np.arange(-degree, degree + 1)
    kk = np.meshgrid(*([ks] * grid.n), indexing="ij")
    knorm = np.sqrt(sum(k * k for k in kk))
    coef = (rng.standard_normal(knorm.shape) + 1j * rng.standard_normal(knorm.shape)) / (1.0 + knorm)
    coeffs_grid = np.zeros(grid.shape, dtype=complex)
    idx = tuple(k % grid.P for k in kk)
    np.add.at(coeffs_grid, idx, coef)
    # phase so that coefficient k multiplies exp(i pi k x / L) with x measured from -L
    vals = np.fft.ifftn(coeffs_grid) * grid.size
    if not complex_valued:
        vals = vals.real
    return SampledFunction(grid, vals)


def smoothed_step(grid: Grid, width: float | None = None) -> SampledFunction:
    """``tanh(x_1 / width)``, periodically continued (jumps back at ``x = +-L``)."""
    width = 4 * grid.h if width is None else width
    x1 = grid.mesh()[0]
    return SampledFunction(grid, np.tanh(x1 / width) * np.tanh((grid.L - np.abs(x1)) / width))


def gaussian_bump(grid: Grid, sigma: float = 1.0) -> SampledFunction:
    r2 = sum(m * m for m in grid.mesh())
    return SampledFunction(grid, np.exp(-r2 / (2 * sigma**2)) / (2 * np.pi * sigma**2) ** (grid.n / 2))


def default_battery(grid: Grid, seed: int = 0, trig_degree: int = 16, n_trig: int = 2,
                    shifts=(-2.5, 1.0, 3.0)) -> dict[str, SampledFunction]:
    """``log|x|``, three shifted logs, seeded trig polynomials and a smoothed step."""
    out = {"log": log_abs(grid)}
    for s in shifts:
        c = np.zeros(grid.n)
        c[0] = s
        out[f"log_shift{s:+g}"] = log_abs(grid, c)
    for j in range(n_trig):
        out[f"trig{j}"] = trig_poly(grid, trig_degree, seed + j)
    out["step"] = smoothed_step(grid, width=0.25)
    return out

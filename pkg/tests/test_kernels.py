import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as quad_integrate

from bmovar.grid import Ball, Grid, SampledFunction, integrate
from bmovar.kernels import (DERIVATIVE_ESTIMATES, KERNEL_NAMES, bump, check_derivative_bounds, dilate,
                            dilate_dt, difference_quotient, gaussian, get_kernel, load_tabulated,
                            poisson, schwartz_seminorms, tabulated)

ALL = [gaussian(1), poisson(1), bump(1), gaussian(2), poisson(2), bump(2)]


def _mass_on_grid(phi, t, L=50.0, P=1 << 16):
    g = Grid(1, P, L)
    return integrate(SampledFunction.from_callable(g, lambda x: dilate(phi, t, x)))


@pytest.mark.parametrize("phi", ALL, ids=lambda k: f"{k.name}{k.n}")
def test_unit_mass_of_profile(phi):
    area = 2 * math.pi ** (phi.n / 2) / math.gamma(phi.n / 2)
    upper = phi.support if math.isfinite(phi.support) else np.inf
    val, _ = quad_integrate.quad(lambda s: area * s ** (phi.n - 1) * float(phi.profile(np.array(s))),
                                 0, upper, limit=400)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_identity_dilation():
    x = np.linspace(-3, 3, 31)
    for phi in (gaussian(1), poisson(1), bump(1)):
        assert np.array_equal(dilate(phi, 1.0, x), phi.evaluate(x))


def test_poisson_closed_form():
    phi = poisson(1)
    x = np.linspace(-5, 5, 101)
    for t in (0.3, 1.0, 2.5):
        assert np.allclose(dilate(phi, t, x), t / (t * t + x * x) / math.pi, rtol=1e-14)


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("name", ["gaussian", "bump"])
def test_mass_under_dilation(name, t):
    assert _mass_on_grid(get_kernel(name), t) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_poisson_mass_including_tail(t):
    # heavy tail: the box only captures 1 - tail(L/t); the remainder is the closed-form tail
    phi = poisson(1)
    inside = _mass_on_grid(phi, t)
    assert inside + phi.tail_mass(50.0 / t) == pytest.approx(1.0, abs=1e-6)


def test_gaussian_dt_at_origin():
    assert dilate_dt(gaussian(1), 1.0, 0.0) == pytest.approx(-1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_poisson_dt_at_origin():
    for t in (0.5, 1.0, 3.0):
        assert dilate_dt(poisson(1), t, 0.0) == pytest.approx(-1 / (math.pi * t * t), rel=1e-14)


@pytest.mark.parametrize("phi", ALL, ids=lambda k: f"{k.name}{k.n}")
def test_dt_matches_finite_differences(phi, rng):
    n = phi.n
    t = rng.uniform(0.2, 3.0, 1000)
    x = rng.uniform(-3.0, 3.0, (1000, n)) * t[:, None]
    if math.isfinite(phi.support):
        # keep away from the edge of the support where derivatives blow up
        r = np.linalg.norm(x, axis=1)
        x *= np.minimum(1.0, 0.9 * t / np.maximum(r, 1e-300))[:, None]
    xx = x[:, 0] if n == 1 else x
    h = 1e-5
    fd = (dilate(phi, t + h, xx) - dilate(phi, t - h, xx)) / (2 * h)
    an = dilate_dt(phi, t, xx)
    scale = np.maximum(np.abs(an), dilate(phi, t, xx) / t)
    assert np.max(np.abs(fd - an) / scale) <= 1e-5


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-20, 20))
def test_scaling_identity(s, t, x):
    for phi in (gaussian(1), poisson(1)):
        lhs = dilate(phi, s * t, x)
        rhs = s ** -1 * dilate(phi, t, x / s)
        # both sides agree up to rounding, amplified by the exponent for the gaussian
        cond = 1.0 + (x / (s * t)) ** 2
        assert lhs == pytest.approx(rhs, rel=64 * np.finfo(float).eps * cond, abs=1e-300)


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_fourier_matches_cosine_transform(name):
    phi = get_kernel(name)
    for u in (0.0, 0.1, 0.5, 1.3):
        prof = lambda x: 2 * float(phi.profile(np.array(x)))  # noqa: E731
        if math.isfinite(phi.support):
            val, _ = quad_integrate.quad(lambda x: prof(x) * math.cos(2 * math.pi * u * x), 0, phi.support,
                                         limit=400)
        elif u == 0:
            val, _ = quad_integrate.quad(prof, 0, np.inf)
        else:
            val, _ = quad_integrate.quad(prof, 0, np.inf, weight="cos", wvar=2 * math.pi * u)
        assert float(phi.fourier(np.array([u]))[0]) == pytest.approx(val, abs=1e-8)


@pytest.mark.parametrize("phi", ALL, ids=lambda k: f"{k.name}{k.n}")
def test_fourier_derivative_matches_finite_differences(phi):
    u = np.array([0.05, 0.3, 0.9, 2.0])
    h = 1e-6
    fd = (phi.fourier(u + h) - phi.fourier(u - h)) / (2 * h)
    assert np.allclose(phi.fourier_du(u), fd, atol=1e-6)


def test_bump_fourier_at_high_frequency_is_tiny():
    phi = bump(1)
    assert np.all(np.abs(phi.fourier(np.array([300.0, 1000.0, 1e5]))) < 1e-12)


def test_derivative_bounds_gaussian_and_poisson():
    res = check_derivative_bounds(gaussian(1))
    assert set(res) == set(DERIVATIVE_ESTIMATES)
    for r in res.values():
        assert r.finite and r.stable, r
    far = check_derivative_bounds(poisson(1), Ball((0.0,), 1.0), estimates=("far_decay",))["far_decay"]
    assert far.finite and far.stable


def test_difference_quotient_vanishes_for_equal_points():
    phi = gaussian(1)
    assert difference_quotient(phi, 0.7, 0.3, 0.3, -1.2) == 0.0
    assert difference_quotient(phi, 0.7, 0.3, 0.4, -1.2) > 0.0


def test_derivative_bounds_reject_degenerate_samples():
    with pytest.raises(ValueError):
        check_derivative_bounds(gaussian(1), resolution=1)
    with pytest.raises(ValueError):
        check_derivative_bounds(gaussian(2), Ball((0.0,), 1.0))


def test_schwartz_seminorms_finite():
    for phi in (gaussian(1), bump(1)):
        semi = schwartz_seminorms(phi)
        assert all(math.isfinite(v) for v in semi.values())
        assert semi[(0, 0)] == pytest.approx(float(phi.profile(np.array(0.0))))


def test_tabulated_profile_reproduces_gaussian(tmp_path):
    r = np.linspace(0, 9, 901)
    g = gaussian(1)
    path = tmp_path / "gauss.csv"
    path.write_text("# order=3\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(r, g.profile(r))))
    tab = load_tabulated(path)
    assert not tab.analytic
    x = np.linspace(-4, 4, 77)
    assert np.allclose(tab.dilate(0.8, x), g.dilate(0.8, x), atol=1e-7)
    assert np.allclose(tab.dilate_dt(0.8, x), g.dilate_dt(0.8, x), atol=1e-5)
    assert np.allclose(tab.fourier(np.array([0.2, 0.5])), g.fourier(np.array([0.2, 0.5])), atol=1e-7)
    assert get_kernel(str(path)).name == "gauss"


def test_tabulated_rejects_bad_input():
    with pytest.raises(ValueError):
        tabulated([0.0, 1.0, 0.5, 2.0], [1, 1, 1, 1])


def test_unknown_kernel_and_bad_scale():
    with pytest.raises(ValueError):
        get_kernel("lorentzian")
    with pytest.raises(ValueError):
        dilate(gaussian(1), 0.0, 1.0)

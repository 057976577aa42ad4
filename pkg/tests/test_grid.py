import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from bmovar.grid import (Ball, EmptyBallError, Grid, SampledFunction, ball_average, ball_max,
                         ball_min, ball_samples, integrate, load_function, save_function)
from bmovar.oracles import exhaustive_ball_min
from bmovar.testfunctions import log_abs


def test_grid_geometry():
    g = Grid(2, 8, 4.0)
    assert g.h == 1.0
    assert g.shape == (8, 8)
    assert g.volume == 64.0
    assert np.allclose(g.axis()[[0, -1]], [-4.0, 3.0])
    assert g.coords(g.origin_index()).tolist() == [0.0, 0.0]
    assert g.ravel(g.unravel(13)) == 13


@pytest.mark.parametrize("bad", [dict(n=0, P=8, L=1.0), dict(n=1, P=0, L=1.0), dict(n=1, P=8, L=0.0)])
def test_grid_rejects_degenerate(bad):
    with pytest.raises(ValueError):
        Grid(**bad)


def test_sampled_function_rejects_nonfinite():
    g = Grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        SampledFunction(g, np.array([np.nan] + [0.0] * 7))
    with pytest.raises(ValueError):
        SampledFunction(g, np.zeros(5))


@pytest.mark.parametrize("n,P,L", [(1, 16, 3.0), (2, 8, 1.5), (3, 4, 2.0)])
def test_integrate_constant_is_volume(n, P, L):
    g = Grid(n, P, L)
    assert integrate(SampledFunction.constant(g, 1.0)) == pytest.approx((2 * L) ** n, rel=1e-14)


def test_integrate_odd_sine_vanishes():
    g = Grid(1, 256, 3.0)
    f = SampledFunction.from_callable(g, lambda x: np.sin(np.pi * x / g.L))
    assert abs(integrate(f)) < 1e-12


def test_integrate_gaussian_matches_erf():
    g = Grid(1, 4096, 20.0)
    f = SampledFunction.from_callable(g, lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi))
    exact = special.erf(g.L / math.sqrt(2))  # mass inside [-L, L)
    assert abs(integrate(f) - exact) < 1e-9


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_integrate_linear(a, b, seed):
    g = Grid(1, 32, 2.0)
    r = np.random.default_rng(seed)
    f = SampledFunction(g, r.standard_normal(32))
    h = SampledFunction(g, r.standard_normal(32))
    lhs = integrate(f * a + h * b)
    rhs = a * integrate(f) + b * integrate(h)
    scale = abs(a) * integrate(abs(f)) + abs(b) * integrate(abs(h)) + 1e-300
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_ball_average_constant_and_odd():
    g = Grid(1, 128, 4.0)
    c = SampledFunction.constant(g, 2.5)
    for r in (0.1, 1.0, 3.9):
        assert ball_average(c, Ball((0.3,), r)) == pytest.approx(2.5, abs=1e-15)
    x = SampledFunction.from_callable(g, lambda x: x)
    assert abs(ball_average(x, Ball((0.0,), 1.3))) < 1e-12


def test_ball_average_log_matches_riemann_sum():
    g = Grid(1, 4096, 8.0)
    f = log_abs(g)
    xs = g.axis()
    inside = np.abs(xs) < 1.0
    direct = sum(math.log(max(abs(x), g.h / 2)) for x in xs[inside]) / inside.sum()
    assert abs(ball_average(f, Ball((0.0,), 1.0)) - direct) < 1e-10


def test_ball_min_cases(rng):
    g = Grid(1, 64, 2.0)
    assert ball_min(SampledFunction.constant(g, -1.5), Ball((0.0,), 0.5)) == -1.5
    absx = SampledFunction.from_callable(g, np.abs)
    assert ball_min(absx, Ball((0.0,), 0.7)) == 0.0
    g2 = Grid(2, 8, 2.0)
    f = SampledFunction(g2, rng.standard_normal((8, 8)))
    for _ in range(20):
        b = Ball(tuple(rng.uniform(-2, 2, 2)), float(rng.uniform(0.6, 2.0)))
        assert ball_min(f, b) == exhaustive_ball_min(f.values, b.mask(g2))


def test_ball_is_open_and_periodic():
    g = Grid(1, 8, 4.0)  # h = 1
    f = SampledFunction(g, np.arange(8.0))
    # radius exactly one spacing: only the center is inside (open ball)
    assert ball_samples(f, Ball((0.0,), 1.0)).tolist() == [4.0]
    # near the edge the ball wraps around
    assert sorted(ball_samples(f, Ball((-4.0,), 1.5)).tolist()) == [0.0, 1.0, 7.0]


def test_empty_ball_raises():
    g = Grid(1, 8, 4.0)
    with pytest.raises(EmptyBallError):
        ball_samples(SampledFunction.constant(g, 1.0), Ball((0.5,), 0.4))


@given(st.integers(0, 2**31), st.floats(-2, 2), st.floats(0.3, 1.9))
def test_ball_average_between_min_and_max(seed, c, r):
    g = Grid(1, 64, 2.0)
    f = SampledFunction(g, np.random.default_rng(seed).standard_normal(64))
    b = Ball((c,), r)
    assert ball_min(f, b) <= ball_average(f, b) <= ball_max(f, b)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 1.5))
def test_enlarging_radius_never_loses_members(cx, cy, r):
    g = Grid(2, 16, 2.0)
    b = Ball((cx, cy), r)
    assert b.dilate((r + g.h) / r).mask(g).sum() >= b.mask(g).sum()


@pytest.mark.parametrize("complex_valued", [False, True])
def test_function_file_round_trip(tmp_path, rng, complex_valued):
    g = Grid(2, 8, 1.25)
    vals = rng.standard_normal((8, 8))
    if complex_valued:
        vals = vals + 1j * rng.standard_normal((8, 8))
    f = SampledFunction(g, vals)
    path = tmp_path / "f.txt"
    save_function(path, f)
    back = load_function(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    save_function(tmp_path / "g.txt", back)
    assert (tmp_path / "g.txt").read_text() == path.read_text()


def test_load_rejects_wrong_header(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("# something else\n1\n")
    with pytest.raises(ValueError):
        load_function(p)


def test_radius_ladder_bounds():
    g = Grid(1, 1024, 8.0)
    r = g.radius_ladder(4)
    assert r[0] == pytest.approx(2 * g.h)
    assert r[-1] == pytest.approx(g.L / 2)
    assert np.all(np.diff(np.log2(r)) == pytest.approx(0.25))

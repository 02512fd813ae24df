import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint, linalg

from elbubble.discretize import (RadialField, fv_grid, geometric_grid, graded_grid, grading_rate,
                                 refine_geometric, sin_power_integral)
from elbubble.model import sphere_volume


@settings(max_examples=40, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, math.pi), st.integers(1, 11))
def test_sin_power_integral(a, b, m):
    a, b = min(a, b), max(a, b)
    ref = sint.quad(lambda s: math.sin(s) ** m, a, b, epsabs=1e-15, epsrel=1e-13)[0]
    assert sin_power_integral(a, b, m) == pytest.approx(ref, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("n", [6, 7, 10])
def test_volumes_and_stiffness(n):
    g = fv_grid(geometric_grid(1e-6, 500), n)
    assert g.volumes.sum() == pytest.approx(sphere_volume(n), rel=1e-13)
    assert np.max(np.abs(g.stiffness_apply(np.ones(g.size)))) == 0.0
    x = np.random.default_rng(0).standard_normal(g.size)
    y = np.random.default_rng(1).standard_normal(g.size)
    assert x @ g.stiffness_apply(y) == pytest.approx(y @ g.stiffness_apply(x), rel=1e-12)
    assert x @ g.stiffness_apply(x) > 0


def test_first_harmonic():
    # -Lap cos = n cos on S^n
    n = 7
    th = geometric_grid(1e-3, 4000)
    g = fv_grid(th, n)
    c = np.cos(th)
    mid = (th > 0.05) & (th < math.pi - 0.05)
    lap = g.laplacian_apply(c)
    assert np.max(np.abs(lap[mid] - n * c[mid])) < 1e-3


def _manufactured_error(th, n):
    # (-Lap + 1) u = f for u = exp(cos)
    g = fv_grid(th, n)
    c, s = np.cos(th), np.sin(th)
    u = np.exp(c)
    f = u * (n * c - s * s + 1.0)
    d, e = g.stiffness_banded()
    ab = np.zeros((2, g.size))
    ab[0, 1:] = e
    ab[1] = d + g.volumes
    uh = linalg.solveh_banded(ab, g.volumes * f)
    return math.sqrt(np.sum(g.volumes * (uh - u) ** 2))


def test_manufactured_second_order():
    n = 7
    th = geometric_grid(1e-3, 250)
    errs = []
    for _ in range(4):
        errs.append(_manufactured_error(th, n))
        th = refine_geometric(th)
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) > 1.8


def test_refinement_nests():
    th = geometric_grid(1e-4, 100)
    f = refine_geometric(th)
    assert f.size == 2 * (th.size - 1)
    assert np.all(np.isin(th, f))
    assert np.all(np.diff(f) > 0) and f[-1] == math.pi


def test_graded_grid():
    th = graded_grid(1e-6, 1000)
    assert th[0] == 0.0 and th[-1] == math.pi
    assert th[1] == pytest.approx(1e-6, rel=1e-8)
    assert grading_rate(1.0, 100) == 0.0


def test_bad_grids():
    with pytest.raises(ValueError):
        geometric_grid(1e-3, 4)
    with pytest.raises(ValueError):
        fv_grid(np.linspace(0, 3, 10), 7)
    with pytest.raises(ValueError):
        RadialField(np.array([0.0, 1.0, 0.5]), np.zeros(3), 7)

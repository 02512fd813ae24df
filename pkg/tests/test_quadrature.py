import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from elbubble.model import dimension_constants
from elbubble.quadrature import (bubble_mass, gk_adaptive, integrate, whole_space_moment_closed,
                                 whole_space_moment_quad)


def test_polynomial_exact():
    r = gk_adaptive(lambda x: x**5 - 3 * x**2, [0.0, 2.0])
    assert r.converged and r.value == pytest.approx(64 / 6 - 8, rel=1e-14)


def test_endpoint_singularity():
    r = integrate(lambda x: 1 / np.sqrt(x), [0.0, 1.0], rtol=1e-10)
    assert r.value == pytest.approx(2.0, rel=1e-9)


def test_infinite_tail():
    r = integrate(lambda x: 1 / (1 + x * x), [0.0, 1.0, math.inf])
    assert r.value == pytest.approx(math.pi / 2, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.5, 4.0))
def test_against_scipy(a, b):
    f = lambda x: np.exp(-a * x) * np.cos(b * x)
    ref = sint.quad(f, 0, 5, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    assert gk_adaptive(f, [0.0, 5.0]).value == pytest.approx(ref, rel=1e-11, abs=1e-14)


@pytest.mark.parametrize("n", range(7, 13))
def test_moment_beta_oracle(n):
    assert whole_space_moment_quad(n) == pytest.approx(whole_space_moment_closed(n), rel=1e-10)


@pytest.mark.parametrize("n", [7, 8, 10])
def test_bubble_mass_flux(n):
    c = dimension_constants(n)
    a = 1.0 / (n * (n - 2))
    p = (n + 2) / (n - 2)
    val = integrate(lambda r: r ** (n - 1) * (1 + a * r * r) ** (-(n - 2) / 2 * p),
                    [0, 1, 10, 100, math.inf], 1e-13).value
    assert c.omega_nm1 * val == pytest.approx(bubble_mass(n), rel=1e-10)


def test_moment_runtime():
    t = time.perf_counter()
    for n in range(7, 13):
        whole_space_moment_quad(n)
    assert time.perf_counter() - t < 1.0

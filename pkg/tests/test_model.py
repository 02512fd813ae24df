from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from elbubble.model import (Schedule, base_data, dimension_constants, eta_truncate, free_config,
                            mu_exponent, schedule_at, sphere_volume, validate_schedule)


def test_n7_constants():
    c = dimension_constants(7)
    assert c.c_n_q == Fraction(5, 24)
    assert c.two_star_q == Fraction(14, 5)
    assert c.omega_n == pytest.approx(math.pi**4 / 3, rel=1e-15)
    assert c.alpha_n == pytest.approx(5**3.5 * 7**2.5, rel=1e-15)
    assert c.alpha_n == pytest.approx(3.624e4, rel=1e-3)
    assert c.K_n == pytest.approx(0.2056, abs=5e-5)


def test_sobolev_constant_direct():
    # K_n^2 = 4 / (n (n-2) omega_n^(2/n))
    for n in range(6, 13):
        c = dimension_constants(n)
        om = 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
        assert c.K_n == pytest.approx(math.sqrt(4 / (n * (n - 2) * om ** (2 / n))), rel=1e-14)


@pytest.mark.parametrize("n", [2, 5])
def test_low_dimension_rejected(n):
    with pytest.raises(ValueError):
        dimension_constants(n)


@pytest.mark.parametrize("n", range(6, 13))
def test_constant_invariants(n):
    c = dimension_constants(n)
    assert c.two_star > 2 and c.two_star_q == Fraction(2 * n, n - 2)
    assert 0 < c.c_n < 0.25 and c.K_n > 0 and c.alpha_n > 0
    b = base_data(n)
    assert b.cn_sg == n * (n - 2) / 4 and b.cn_sg > 2
    assert b.base_residual() == 0.0
    assert b.pi0_sq > 1


def test_sphere_volumes():
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    for m in range(3, 14):
        assert sphere_volume(m) == pytest.approx(2 * math.pi / (m - 1) * sphere_volume(m - 2), rel=1e-14)


def test_eta_branches():
    assert eta_truncate(0.1, 0.05) == 0.1
    assert eta_truncate(0.1, 0.5) == 0.5
    assert eta_truncate(0.1, 0.1) == 0.1
    with pytest.raises(ValueError):
        eta_truncate(0.0, 1.0)


@given(st.floats(1e-6, 10), st.floats(-100, 100), st.floats(-100, 100))
def test_eta_lipschitz_idempotent(eps, u, v):
    a, b = eta_truncate(eps, u), eta_truncate(eps, v)
    assert abs(a - b) <= abs(u - v) + 1e-15
    assert eta_truncate(eps, a) == a
    if u <= v:
        assert a <= b


def test_power_schedule_n7():
    s = Schedule(n=7, k0=2)
    e = schedule_at(s, 2)
    assert e.eps == 2.0**-20
    assert e.r == pytest.approx(2.0 ** (-7 / 3), rel=1e-15)
    assert e.mu == pytest.approx(e.eps**0.4, rel=1e-15)
    assert np.allclose(e.xi_chart, [0.5, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        schedule_at(s, 1)


def test_mu_branches():
    assert mu_exponent(7) == pytest.approx(0.4)
    assert mu_exponent(9, lcf=False) == pytest.approx(2 / 7)
    assert mu_exponent(11, lcf=False) == 0.25
    assert mu_exponent(6) == 0.5


def test_validate_power_schedule():
    assert validate_schedule(Schedule(n=7, k0=2), 50).passed
    assert validate_schedule(Schedule(n=6, k0=2), 50).passed


def test_validate_rejects_slow_r():
    rep = validate_schedule(Schedule(n=7, k0=2, r_exp=1.0), 20)
    assert not rep.passed and "r_k_times_k2" in rep.failures()


def test_validate_rejects_mu_r_squared():
    # mu_k = r_k^2 makes mu/r^3 = 1/r_k grow
    s = Schedule(n=7, k0=2, mu_rule=lambda eps, k: float(k) ** (-14.0 / 3.0))
    rep = validate_schedule(s, 20)
    assert not rep.passed and "mu_over_r3" in rep.failures()


@given(st.integers(2, 40), st.integers(1, 10))
def test_schedule_monotone(k, dk):
    s = Schedule(n=8, k0=2)
    a, b = schedule_at(s, k), schedule_at(s, k + dk)
    assert b.eps < a.eps and b.mu < a.mu and b.r < a.r


def test_free_ladder_validation():
    cfg = free_config(7, [1e-2, 1e-3])
    assert schedule_at(cfg.schedule, 2).eps == 1e-3
    with pytest.raises(ValueError):
        free_config(7, [1e-3, 1e-2])

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elbubble.quadrature import bubble_mass, whole_space_moment_quad
from elbubble.reduced import (Hred_eval, Hred_grad, Hred_hessian, ReducedEnergySpec, dHdt_split_form,
                              find_critical, grid_minimizer, interaction_coefficient,
                              n6_cubic_constant, n6_quadratic_coefficient, plateau_H,
                              reduced_n6_fit, t0_closed_form)
from elbubble.model import dimension_constants, sphere_volume

H7 = ReducedEnergySpec(7, M=20.0)


def test_interaction_modes():
    c = dimension_constants(7)
    assert interaction_coefficient(7, "literal") == c.alpha_n
    assert interaction_coefficient(7) == pytest.approx(c.alpha_n * c.omega_nm1, rel=1e-10)
    assert bubble_mass(7) == interaction_coefficient(7)
    with pytest.raises(ValueError):
        interaction_coefficient(7, "other")


def test_branch_validation():
    with pytest.raises(ValueError):
        ReducedEnergySpec(8, branch="n10")
    with pytest.raises(ValueError):
        ReducedEnergySpec(12, branch="n11plus")
    with pytest.raises(ValueError):
        ReducedEnergySpec(7, branch="n6")


@pytest.mark.parametrize("t", [0.2, 0.5, 1.0])
def test_gradient_matches_differences(t):
    g = Hred_grad(H7, t)
    h = 1e-4 * t
    fd = (Hred_eval(H7, t + h) - Hred_eval(H7, t - h)) / (2 * h)
    assert g[0] == pytest.approx(fd, rel=1e-6)
    assert np.all(g[1:] == 0.0)
    assert dHdt_split_form(H7, t) == pytest.approx(g[0], rel=1e-8)


def test_gradient_in_p():
    p = np.zeros(7)
    p[0] = 0.3
    g = Hred_grad(H7, 0.4, p)
    h = 1e-4
    fd = (Hred_eval(H7, 0.4, 0.3 + h) - Hred_eval(H7, 0.4, 0.3 - h)) / (2 * h)
    assert g[1] == pytest.approx(fd, rel=1e-5)
    assert np.allclose(g[2:], 0.0, atol=1e-12 * abs(g[1]))


def test_t0_moment_oracle():
    # t0 from the quadrature moment instead of the Beta closed form
    A = whole_space_moment_quad(7)
    ts = 14 / 5
    e = 2.5
    t0 = ((2 / ts) * A / (e * interaction_coefficient(7))) ** (1 / (e - 2))
    assert t0_closed_form(H7) == pytest.approx(t0, rel=1e-10)
    h = 1e-5 * t0
    assert abs(plateau_H(H7, t0 + h) - plateau_H(H7, t0 - h)) < 1e-8 * abs(plateau_H(H7, t0))


def test_critical_point_certificate():
    cp = find_critical(H7)
    assert cp.hessTT < 0 and np.all(cp.hessPP > 0)
    assert cp.signature == (1, 7)
    assert cp.grad_norm < 1e-8
    assert cp.certificate["newtonBasin"]["converged"]
    H = Hred_hessian(H7, cp.tM)
    assert np.allclose(H, H.T)


def test_drift_vanishes_as_plateau_grows():
    drifts = [find_critical(ReducedEnergySpec(7, M=M)).rel_drift for M in (20, 100, 1000, 1e4)]
    assert all(b < a for a, b in zip(drifts, drifts[1:]))
    assert drifts[-1] < 1e-4


def test_n6_constants():
    assert n6_quadratic_coefficient() == pytest.approx(1152 * math.pi**3, rel=1e-13)
    assert n6_cubic_constant() > 0
    spec = ReducedEnergySpec(6, branch="n6", a0=7.0, C0=n6_cubic_constant())
    B = n6_quadratic_coefficient()
    assert t0_closed_form(spec) == pytest.approx(2 * B / (3 * 7.0 * n6_cubic_constant()), rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(0.5, 10.0), st.floats(10.0, 1e5))
def test_n6_fit_recovers_synthetic(C0, a0, B):
    t_star = 2 * B / (3 * a0 * C0)
    t = t_star * np.linspace(0.7, 1.3, 13)
    E = -B * t * t + C0 * a0 * t**3
    fit = reduced_n6_fit(t, E, a0, B)
    assert fit.C0 == pytest.approx(C0, rel=1e-10)
    assert fit.t0 == pytest.approx(t_star, rel=1e-10)
    # the rescaled form gives the same scale
    assert 10 / (3 * a0 * fit.C0_rescaled) == pytest.approx(t_star, rel=1e-12)
    assert fit.min_rel_err < 0.01


def test_grid_minimizer_parabola():
    t = np.linspace(0, 2, 11)
    assert grid_minimizer(t, (t - 0.93) ** 2) == pytest.approx(0.93, rel=1e-12)
    assert grid_minimizer(t, t) == 0.0

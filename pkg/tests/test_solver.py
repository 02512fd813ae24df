import math

import numpy as np
import pytest

from elbubble.discretize import refine_geometric
from elbubble.reduced import ReducedEnergySpec, find_critical
from elbubble.solver import (BubbleOnGrid, assemble_operator, construct_member, deflated_search,
                             family_grid, linearization_spectrum, morse_index, newton_solve,
                             problem_coefficients, projected_correction, reduction_seed,
                             relative_distance)

N = 7
EPS = 2.0**-24
MU = EPS**0.4


@pytest.fixture(scope="module")
def tM():
    return find_critical(ReducedEnergySpec(N)).tM


@pytest.fixture(scope="module")
def setup(tM):
    th = family_grid([MU * tM], 20000)
    op = assemble_operator(problem_coefficients(N, th, EPS, MU), delta=MU * tM)
    return th, op, BubbleOnGrid(N, th, MU, 1.0)


@pytest.fixture(scope="module")
def member(setup, tM):
    return construct_member(N, setup[0], EPS, MU, tM)


def test_u0_is_a_root(setup):
    th, op, _ = setup
    r = newton_solve(op, np.ones(th.size))
    assert r.converged and r.iterations == 0 and r.resid_sup < 1e-12


def test_newton_returns_to_u0(setup):
    th, _, _ = setup
    flat = assemble_operator(problem_coefficients(N, th))
    r = newton_solve(flat, 1.0 + 0.05 * np.cos(th))
    assert r.converged and r.iterations <= 8
    assert np.max(np.abs(r.values() - 1.0)) < 1e-10
    assert r.morse_index == 0


def test_newton_rejects_bad_guess(setup):
    th, op, _ = setup
    with pytest.raises(ValueError):
        newton_solve(op, -np.ones(th.size))
    with pytest.raises(ValueError):
        newton_solve(op, np.ones(th.size - 1))


def test_coarse_grid_rejected():
    th = family_grid([1e-2], 200)
    with pytest.raises(ValueError):
        assemble_operator(problem_coefficients(N, th, EPS, MU), delta=1e-7)


def test_peaked_solution(member):
    r = member.result
    assert member.converged and r.resid_sup < 1e-12
    ratio = r.u_max * member.delta ** ((N - 2) / 2)
    assert 0.5 <= ratio <= 2.0
    assert r.u_min >= 0.1
    assert r.morse_index >= 1
    assert abs(member.lambda0_scaled) < 1e-8


def test_morse_index_matches_spectrum(setup, member):
    _, op, _ = setup
    lam = linearization_spectrum(op, member.result.u, 6)
    assert int(np.sum(lam < 0)) == morse_index(op, member.result.values())


def test_deflation_finds_two_and_is_stable(setup, tM):
    th, op, bub = setup
    _, seed = reduction_seed(op, bub, tM)
    found = deflated_search(op, [np.ones(th.size), seed])
    assert len(found) >= 2
    again = newton_solve(op, found[1].u)
    assert again.converged and relative_distance(op, again.u, found[1].u) < 1e-10


def test_lambda0_zero_near_critical_scale(setup, tM):
    _, op, bub = setup
    red = projected_correction(op, bub, tM * np.linspace(0.7, 1.3, 7))
    assert red.zero_crossing is not None
    assert abs(red.zero_crossing - tM) / tM < 0.1
    assert red.phi_constant < 1.0


def test_lambda0_zero_approaches_critical_scale(tM):
    errs = []
    for eps in (2.0**-16, 2.0**-20, 2.0**-24):
        mu = eps**0.4
        m = construct_member(N, family_grid([mu * tM]), eps, mu, tM)
        errs.append(abs(m.t_zero - tM) / tM)
    assert errs[0] > errs[1] > errs[2]


def test_spectrum_at_u0_closed_form(setup):
    th, op, _ = setup
    # (2* + 2) pi0^2 - (2* - 2) with pi0^2 = 35/4 - 1
    closed = (14 / 5 + 2) * (35 / 4 - 1) - (14 / 5 - 2)
    assert closed == pytest.approx(36.4)
    vals = []
    g = th
    for _ in range(2):
        flat = assemble_operator(problem_coefficients(N, g))
        vals.append(linearization_spectrum(flat, np.ones(g.size), 3)[0])
        g = refine_geometric(g)
    assert all(abs(v - closed) / closed < 1e-6 for v in vals)
    assert linearization_spectrum(op, np.ones(th.size), 3)[0] > 0


def test_spectrum_harmonics(setup):
    # constant potential: eigenvalues l(l+n-1) + 36.4
    th, _, _ = setup
    flat = assemble_operator(problem_coefficients(N, th))
    lam = linearization_spectrum(flat, np.ones(th.size), 3)
    assert np.allclose(lam - 36.4, [0.0, 7.0, 16.0], atol=1e-3)


def test_refinement_stability(member, tM):
    th = refine_geometric(member.result.u.theta)
    fine = construct_member(N, th, EPS, MU, tM)
    assert abs(fine.result.u_max / member.result.u_max - 1) < 0.01

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elbubble.discretize import RadialField, geometric_grid
from elbubble.energy import (Ansatz, J_base, QuadratureSpec, energy_J, energy_J_ansatz, inner_h,
                             kernel_gram, reduced_energy_Ik, reduced_energy_n6, residual_R)
from elbubble.model import dimension_constants, free_config
from elbubble.profiles import free_bubble

PI4 = math.pi**4
TH = geometric_grid(1e-4, 400)


def _field(vals):
    return RadialField(TH, np.asarray(vals, dtype=float), 7)


def test_inner_h_constant():
    one = _field(np.ones_like(TH))
    assert inner_h(one, one) == pytest.approx(35 / 4 * PI4 / 3, rel=1e-13)


def test_energy_of_u0():
    one = _field(np.ones_like(TH))
    assert energy_J(one) == pytest.approx(95 * PI4 / 42, rel=1e-13)
    assert J_base(7) == pytest.approx(95 * PI4 / 42, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_inner_h_symmetric_coercive(a, b):
    c = np.cos(TH)
    u = _field(a[0] + a[1] * c + a[2] * c * c)
    v = _field(b[0] + b[1] * c + b[2] * np.sin(TH) ** 2)
    assert inner_h(u, v) == pytest.approx(inner_h(v, u), rel=1e-12, abs=1e-10)
    # h = cS > 1 bounds the form below by the L^2 norm
    l2 = float(np.sum(np.abs(u.values) ** 2 * _vol()))
    assert inner_h(u, u) >= l2 - 1e-10


def _vol():
    from elbubble.discretize import fv_grid
    return fv_grid(TH, 7).volumes


def test_grid_mismatch_rejected():
    with pytest.raises(ValueError):
        inner_h(_field(np.ones_like(TH)), RadialField(geometric_grid(1e-3, 400), np.ones(401), 7))


@pytest.fixture(scope="module")
def ansatz_case():
    eps = 2.0**-8
    cfg = free_config(7, [eps])
    bp = free_bubble(7, eps, 1.0, mu=eps**0.4, r=1.0, M=20)
    return cfg, bp


def test_energy_decomposition(ansatz_case):
    # direct J(u0 + W) over the sphere against J(u0) + K^-n/n + the split excess
    cfg, bp = ansatz_case
    br = reduced_energy_Ik(cfg, bp, with_residual=False)
    K = dimension_constants(7).K_n ** -7 / 7
    direct = energy_J_ansatz(cfg, bp)
    base = J_base(cfg, Ansatz.from_params(bp, cfg.M))
    assert direct - base - K == pytest.approx(br.excess, rel=1e-9)
    assert br.J == pytest.approx(direct, rel=1e-12)


def test_residual_vanishes_off_support(ansatz_case):
    cfg, bp = ansatz_case
    ev, nrm = residual_R(cfg, bp)
    assert np.all(ev(np.array([2.0 * bp.r * 1.01, 3.0, 10.0])) == 0.0)
    assert nrm > 0


def test_residual_rejects_active_truncation(ansatz_case):
    cfg, bp = ansatz_case
    from dataclasses import replace
    with pytest.raises(ValueError):
        residual_R(replace(cfg, eps_trunc=1.5), bp)


@pytest.mark.parametrize("mu", [1e-4, 1e-6])
def test_gram_unperturbed(mu):
    bp = free_bubble(7, 0.0, 1.0, mu=mu, r=1.0, M=20)
    g = kernel_gram(bp)
    assert g.delta_over_r <= 1e-3
    assert np.max(g.diag_rel) < 1e-6
    assert g.offdiag_rel == 0.0


def test_gram_rejects_offcentre():
    bp = free_bubble(7, 1e-8, 1.0, p=np.eye(7)[0], mu=1e-4, r=1.0, M=20)
    with pytest.raises(ValueError):
        kernel_gram(bp)


def test_n6_excess_scales_like_eps_cubed():
    vals = []
    for eps in (2.0**-14, 2.0**-18):
        bp = free_bubble(6, eps, 0.007, mu=eps**0.5, r=1.0, M=20)
        vals.append(reduced_energy_n6(bp, 7.0, QuadratureSpec(1e-12)).excess / eps**3)
    assert vals[1] == pytest.approx(vals[0], rel=0.05)
    assert vals[1] < 0

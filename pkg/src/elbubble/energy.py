"""Energy functional, inner product, reduced energy I_k(t, p) and the residual R.

Sphere integrals are done in the flat chart centred at the bubble, where the
round volume is (1 + d^2/4)^-n dz.  The exact bubble energies are subtracted
analytically: with U the uncut flat bubble,

    I1 = 1/2 f_y^(1-n/2) K^-n + 1/2 int (|grad chi U|^2 - |grad U|^2) dz
         - c/2 int |grad Psi0|^2 W^2 dv
    I3 = 1/(2*) f_y^(-n/2) K^-n + 1/(2*) int (f chi^2* - 1) U^2* dz
         + 1/(2*) int f [(1+W)^2* - W^2* - 1 - 2* W] dv

so each remaining integral is small and gets its own relative tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .model import ModelConfig, dimension_constants, base_data
from .profiles import (BumpSpec, BubbleParams, bubble_radial, bubble_theta, chi, psi_radial,
                       bump_radial, psi_eval)
from .quadrature import geometric_breaks, gk_adaptive, integrate
from .discretize import RadialField, fv_grid
from .model import sphere_volume


# ------------------------------------------------------------- stable powers

def pow_rem(W, p: float):
    """(1+W)^p - 1 - p W for W > -1, accurate for small |W|."""
    W = np.asarray(W, dtype=float)
    out = np.empty_like(W)
    small = np.abs(W) < 0.05
    if np.any(small):
        w = W[small]
        acc = np.zeros_like(w)
        coef = p
        for j in range(2, 26):
            # binomial coefficient by recursion (scipy's binom is nan at negative integers)
            coef *= (p - j + 1) / j
            acc += coef * w**j
        out[small] = acc
    big = ~small
    out[big] = np.expm1(p * np.log1p(W[big])) - p * W[big]
    return out


def pow_rem_top(W, p: float):
    """(1+W)^p - W^p - 1 - p W for W >= 0."""
    W = np.asarray(W, dtype=float)
    out = np.empty_like(W)
    lo = W < 1.0
    out[lo] = pow_rem(W[lo], p) - W[lo] ** p
    hi = ~lo
    w = W[hi]
    out[hi] = w**p * np.expm1(p * np.log1p(1.0 / w)) - 1.0 - p * w
    return out


def pow_rem_shift(W, p: float):
    """(1+W)^p - W^p - 1 for W >= 0."""
    W = np.asarray(W, dtype=float)
    out = np.empty_like(W)
    lo = W < 1.0
    out[lo] = np.expm1(p * np.log1p(W[lo])) - W[lo] ** p
    hi = ~lo
    w = W[hi]
    out[hi] = w**p * np.expm1(p * np.log1p(1.0 / w)) - 1.0
    return out


# ------------------------------------------------------------- geometry

@dataclass(frozen=True)
class Ansatz:
    """Bubble plus single bump, described in the flat chart centred at the bubble.

    The bump centre sits on the first chart axis at chart distance mu |p|
    (the chart distance between two points only depends on their geodesic distance).
    """
    n: int
    eps: float
    mu: float
    r: float
    delta: float
    f_y: float
    P: float
    M: float

    @classmethod
    def from_params(cls, bp: BubbleParams, M: float):
        return cls(bp.n, bp.eps, bp.mu, bp.r, bp.delta, bp.f_center,
                   float(np.linalg.norm(bp.p)), M)

    @property
    def bump_offset(self) -> float:
        return self.mu * self.P

    @property
    def f_shift(self) -> float:
        """f_y - 1 without the rounding of f_y itself."""
        if self.n == 6:
            return 0.0
        return self.eps * float(psi_radial(BumpSpec(self.M), self.P * self.P))

    def bump_chart_radius(self, d, cphi=None):
        """Radius in the bump's own chart of the point at (d, phi)."""
        if cphi is None or self.P == 0.0:
            return np.broadcast_to(np.asarray(d, dtype=float), np.broadcast(d, cphi).shape
                                   if cphi is not None else np.shape(d))
        b = self.bump_offset
        dz2 = np.maximum(d * d - 2.0 * d * b * cphi + b * b, 0.0)
        chord2 = dz2 / ((1.0 + d * d / 4.0) * (1.0 + b * b / 4.0))
        return np.sqrt(chord2 / np.maximum(1.0 - chord2 / 4.0, 1e-300))

    def bump_fields(self, d, cphi=None):
        """(Psi0, |grad Psi0|^2_g) at chart points."""
        rho = self.bump_chart_radius(d, cphi)
        s = (rho / self.mu) ** 2
        p0, p1 = psi_radial(BumpSpec(self.M), s, 1)
        psi0 = self.eps * p0
        grad = self.eps * p1 * 2.0 * rho / self.mu**2 * (1.0 + rho * rho / 4.0)
        return psi0, grad * grad

    def coefficients(self, d, cphi=None):
        psi0, g2 = self.bump_fields(d, cphi)
        c = dimension_constants(self.n).c_n
        base = base_data(self.n)
        return base.cn_sg - c * g2, 1.0 + psi0, base.pi0_sq - c * g2 - psi0, g2

    def W(self, d, order=0):
        return bubble_radial(d, self.n, self.delta, self.f_y, self.r, order)

    def U(self, d, order=0):
        return bubble_radial(d, self.n, self.delta, self.f_y, math.inf, order, conformal=False)

    def bump_extent(self):
        return self.bump_offset + self.mu * math.sqrt(self.M + 1.0)

    def breaks(self, upto=None):
        hi = 2.0 * self.r if upto is None else upto
        pts = {0.0, self.r, 2.0 * self.r}
        x = self.delta / 16.0
        while x < hi:
            pts.add(x)
            x *= 2.0
        b = self.bump_offset
        for rr in (math.sqrt(self.M), math.sqrt(self.M + 1.0)):
            for s in (b - self.mu * rr, b + self.mu * rr):
                if s > 0:
                    pts.add(s)
        if b > 0:
            pts.add(b)
        # where W ~ 1
        pts.add(math.sqrt(self.n * (self.n - 2) * self.delta / self.f_y))
        return sorted(p for p in pts if p <= hi)


def _flat_weight(n, d):
    return sphere_volume(n - 1) * d ** (n - 1)


def _round_weight(n, d):
    return _flat_weight(n, d) * (1.0 + d * d / 4.0) ** (-n)


# ------------------------------------------------------------- quadrature glue

@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-12
    phi_panels: int = 24
    tail_radius: float = math.inf


def _ring_cos(an: Ansatz, d, rho):
    """cos(phi) at which the circle of chart radius d meets bump-chart radius rho."""
    b = an.bump_offset
    c2 = rho * rho / (1.0 + rho * rho / 4.0)
    dz2 = c2 * (1.0 + d * d / 4.0) * (1.0 + b * b / 4.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = (d * d + b * b - dz2) / (2.0 * d * b)
    return np.clip(np.nan_to_num(cs, nan=1.0, posinf=1.0, neginf=-1.0), -1.0, 1.0)


def _phi_rule(an: Ansatz, d, panels: int, radii=None):
    """Per-d Gauss nodes in phi, split where the circle crosses the bump transition ring.

    The bump cutoff varies on a band of relative width ~1/(2M) in its own chart,
    which fixed phi panels cannot resolve; splitting at the crossings makes every
    sub-interval smooth.
    """
    n = an.n
    per = max(1, panels // 8)
    x, w = np.polynomial.legendre.leggauss(16)
    x = (np.linspace(-1, 1, per + 1)[:-1, None] + (x[None, :] + 1) / per).ravel()
    w = np.tile(w / per, per)
    if radii is None:
        radii = (an.mu * math.sqrt(an.M), an.mu * math.sqrt(an.M + 1.0))
    cuts = [np.zeros_like(d)]
    for rr in radii:
        cuts.append(np.arccos(_ring_cos(an, d, rr)))
    cuts.append(np.full_like(d, math.pi))
    cuts = np.sort(np.stack(cuts, axis=1), axis=1)
    nodes, weights = [], []
    for a, bb in zip(cuts[:, :-1].T, cuts[:, 1:].T):
        hw = 0.5 * (bb - a)
        nodes.append(0.5 * (a + bb)[:, None] + hw[:, None] * x[None, :])
        weights.append(hw[:, None] * w[None, :])
    ph = np.concatenate(nodes, axis=1)
    wt = np.concatenate(weights, axis=1)
    wt = wt * np.sin(ph) ** (n - 2) * (sphere_volume(n - 2) / sphere_volume(n - 1))
    return np.cos(ph), wt


def _integrate_d(an: Ansatz, f, breaks, q: QuadratureSpec, axisym: bool, radii=None):
    """Integrate f(d) or f(d, cos phi) times the flat radial weight (caller adds the rest)."""
    if not axisym:
        res = gk_adaptive(lambda d: f(d, None), breaks, q.rel_tol, 1e-300)
        return res.value, res.error

    def g(d):
        cph, wt = _phi_rule(an, d, q.phi_panels, radii)
        return np.sum(np.asarray(f(d[:, None], cph)) * wt, axis=1)

    res = gk_adaptive(g, breaks, q.rel_tol, 1e-300, chunk=2000)
    return res.value, res.error


@dataclass
class EnergyBreakdown:
    J: float
    J_u0: float
    I1: float
    I2: float
    I3: float
    excess: float  # I1 + I2 - I3 - K^-n/n
    resid_norm_sq: float
    alpha_bound: float
    quad_error: float
    parts: dict = field(default_factory=dict)


def alpha_class(n: int, lcf: bool, delta: float, r: float, mu: float) -> float:
    """Order of the remainder class for the given geometry branch."""
    if lcf:
        return 0.0
    if 7 <= n <= 9:
        return (delta / r) ** (n - 2)
    if n == 10:
        return mu**8 * abs(math.log(delta)) ** (6.0 / 5.0)
    return delta**8


def J_base(cfg_or_n, an: Ansatz | None = None, q: QuadratureSpec = QuadratureSpec()) -> float:
    """J(u0) with u0 = 1 for the bump of an (none: unperturbed)."""
    n = cfg_or_n if isinstance(cfg_or_n, int) else cfg_or_n.n
    c = dimension_constants(n)
    base = base_data(n)
    ts = c.two_star
    val = c.omega_n * (0.5 * base.cn_sg - 1.0 / ts + base.pi0_sq / ts)
    if an is None or an.eps == 0.0:
        return val
    # bump correction: int (-(1/2 + 1/2*) c |grad Psi0|^2 - (2/2*) Psi0) dv around the bump centre
    b = Ansatz(n, an.eps, an.mu, an.r, an.delta, an.f_y, 0.0, an.M)
    ext = b.mu * math.sqrt(an.M + 1.0)

    def f(d, _):
        psi0, g2 = b.bump_fields(d)
        return _round_weight(n, d) * (-(0.5 + 1.0 / ts) * c.c_n * g2 - 2.0 / ts * psi0)

    br = [0.0, an.mu * math.sqrt(an.M) / 2, an.mu * math.sqrt(an.M), ext]
    corr = gk_adaptive(lambda d: f(d, None), br, q.rel_tol, 1e-300).value
    return val + corr


def reduced_energy_Ik(cfg: ModelConfig, bp: BubbleParams, q: QuadratureSpec = QuadratureSpec(),
                      with_residual: bool = True) -> EnergyBreakdown:
    an = Ansatz.from_params(bp, cfg.M)
    n = an.n
    c = dimension_constants(n)
    ts = c.two_star
    Kn = c.K_n ** (-n)
    axisym = an.P > 0.0
    br = an.breaks()
    errs = []

    # cutoff correction to the Dirichlet energy, supported in d > r
    def cut(d, _):
        U, U1 = an.U(d, 1)
        ch, ch1 = chi(d / an.r, 1)
        g = ch1 / an.r * U + ch * U1
        return 0.5 * _flat_weight(n, d) * (g * g - U1 * U1)

    v, e = _integrate_d(an, cut, [an.r, 1.5 * an.r, 2.0 * an.r], q, False)
    tail = integrate(lambda d: cut(d, None), [2.0 * an.r, 4.0 * an.r, math.inf], q.rel_tol)
    cut_grad = v + tail.value
    errs += [e, tail.error]

    def grad_psi(d, cp):
        _, _, _, g2 = an.coefficients(d, cp)
        W = an.W(d)
        return -0.5 * c.c_n * g2 * W * W * _round_weight(n, d)

    ext = an.bump_extent()
    brb = [x for x in br if x <= ext] + [ext]
    grad_part, e = _integrate_d(an, grad_psi, brb, q, axisym)
    errs.append(e)

    def t3a(d, cp):
        psi0, _ = an.bump_fields(d, cp)
        U = an.U(d)
        ch = chi(d / an.r)
        fac = (1.0 + psi0) * ch**ts - 1.0
        return fac * U**ts * _flat_weight(n, d) / ts

    # nonzero only on the bump and where chi < 1
    v1, e1 = _integrate_d(an, t3a, brb, q, axisym)
    lo = max(an.r, ext)
    v2, e2 = _integrate_d(an, t3a, [lo, 2.0 * an.r], q, False) if lo < 2.0 * an.r else (0.0, 0.0)
    R = max(2.0 * an.r, ext)
    tl = integrate(lambda d: -an.U(d) ** ts * _flat_weight(n, d) / ts, [R, 2.0 * R, math.inf], q.rel_tol)
    T3a = v1 + v2 + tl.value
    errs += [e1, e2, tl.error]

    def t3b(d, cp):
        _, f, _, _ = an.coefficients(d, cp)
        return f * pow_rem_top(an.W(d), ts) * _round_weight(n, d) / ts

    def i2(d, cp):
        _, _, pi2, _ = an.coefficients(d, cp)
        return pi2 * pow_rem(an.W(d), -ts) * _round_weight(n, d) / ts

    if axisym:
        # split: joint integration inside the bump extent, radial outside
        def split(fun):
            a, ea = _integrate_d(an, fun, [x for x in br if x <= ext] + [ext], q, True)
            rest = [ext] + [x for x in br if x > ext]
            b_, eb = _integrate_d(an, lambda d, cp: fun(d, None), rest, q, False) if ext < br[-1] else (0.0, 0.0)
            return a + b_, ea + eb
        T3b, e = split(t3b)
        errs.append(e)
        I2, e = split(i2)
        errs.append(e)
    else:
        T3b, e = _integrate_d(an, t3b, br, q, False)
        errs.append(e)
        I2, e = _integrate_d(an, i2, br, q, False)
        errs.append(e)

    fy = an.f_y
    I1 = 0.5 * fy ** (1 - n / 2.0) * Kn + cut_grad + grad_part
    I3 = fy ** (-n / 2.0) * Kn / ts + T3a + T3b
    # K^-n (f^(1-n/2)/2 - f^(-n/2)/2* - 1/n) vanishes to second order at f = 1
    L = math.log1p(an.f_shift)
    lead = Kn * (0.5 * math.expm1((1 - n / 2.0) * L) - math.expm1(-n / 2.0 * L) / ts)
    excess = lead + cut_grad + grad_part + I2 - T3a - T3b
    Ju0 = J_base(n, an, q)
    rn = residual_R(cfg, bp, q)[1] if with_residual else float("nan")
    return EnergyBreakdown(
        J=Ju0 + I1 + I2 - I3, J_u0=Ju0, I1=I1, I2=I2, I3=I3, excess=excess,
        resid_norm_sq=rn, alpha_bound=alpha_class(n, cfg.lcf, an.delta, an.r, an.mu),
        quad_error=float(sum(errs)),
        parts={"lead": lead, "cutGrad": cut_grad, "gradPsi": grad_part, "T3a": T3a, "T3b": T3b})


@dataclass
class N6Breakdown:
    excess: float  # J(1 + W) - J(1) - K_6^-6/6
    predicted_scale: float  # eps^3, the order of the excess when delta = eps t
    quad_error: float
    parts: dict = field(default_factory=dict)


def reduced_energy_n6(bp: BubbleParams, a0: float = 7.0, q: QuadratureSpec = QuadratureSpec(),
                      bump_radius: float = 2.0) -> N6Breakdown:
    """Excess energy of 1 + W for  Lap u + h u = u^2 + a u^-4  on S^6 with u0 = 1.

    h = 1 + a0 - eps H and a = a0 - eps H, H the bump at scale mu.  Conformal
    invariance turns the gradient, h0 and cubic parts into K^-6/6 plus two cutoff
    terms, leaving

        excess = cutGrad + cutCubic - eps/2 int H W^2 + 1/3 int a [(1+W)^-3 - 1 + 3W].
    """
    from .reduced import n6_bump_radial
    if bp.n != 6:
        raise ValueError("n = 6 energy needs n = 6")
    an = Ansatz.from_params(bp, 20.0)
    n = 6
    q_rad = an.mu * bump_radius
    ext = an.bump_offset + q_rad
    axisym = an.P > 0.0
    errs = []

    def cut(d, _):
        U, U1 = an.U(d, 1)
        ch, ch1 = chi(d / an.r, 1)
        g = ch1 / an.r * U + ch * U1
        return 0.5 * _flat_weight(n, d) * (g * g - U1 * U1)

    def cut_cubic(d, _):
        U = an.U(d)
        ch = chi(d / an.r)
        return -np.expm1(3.0 * np.log(np.maximum(ch, 1e-300))) * U**3 * _flat_weight(n, d) / 3.0

    cg, e = _integrate_d(an, cut, [an.r, 1.5 * an.r, 2.0 * an.r], q, False)
    errs.append(e)
    tl = integrate(lambda d: cut(d, None), [2.0 * an.r, 4.0 * an.r, math.inf], q.rel_tol)
    cut_grad = cg + tl.value
    errs.append(tl.error)
    cc, e = _integrate_d(an, cut_cubic, [an.r, 1.5 * an.r, 2.0 * an.r], q, False)
    errs.append(e)
    tl = integrate(lambda d: an.U(d) ** 3 * _flat_weight(n, d) / 3.0, [2.0 * an.r, 4.0 * an.r, math.inf],
                   q.rel_tol)
    cut_cubic_v = cc + tl.value
    errs.append(tl.error)

    def H(d, cp):
        return n6_bump_radial(an.bump_chart_radius(d, cp) / an.mu, bump_radius)

    def quad_h(d, cp):
        W = an.W(d)
        return -0.5 * an.eps * H(d, cp) * W * W * _round_weight(n, d)

    def cubic_a0(d, _):
        return a0 * pow_rem(an.W(d), -3.0) * _round_weight(n, d) / 3.0

    def cubic_h(d, cp):
        return -an.eps * H(d, cp) * pow_rem(an.W(d), -3.0) * _round_weight(n, d) / 3.0

    br = [x for x in an.breaks() if x <= ext]
    b = an.bump_offset
    br += [x for x in (b, b - q_rad, b + q_rad, ext) if 0 < x <= ext]
    br = sorted(set(br + [0.0]))
    qh, e = _integrate_d(an, quad_h, br, q, axisym, radii=(q_rad,))
    errs.append(e)
    ch_, e = _integrate_d(an, cubic_h, br, q, axisym, radii=(q_rad,))
    errs.append(e)
    ca, e = _integrate_d(an, cubic_a0, an.breaks(), q, False)
    errs.append(e)
    excess = cut_grad + cut_cubic_v + qh + ca + ch_
    return N6Breakdown(excess, an.eps**3, float(sum(errs)),
                       {"cutGrad": cut_grad, "cutCubic": cut_cubic_v, "quadH": qh,
                        "cubicA0": ca, "cubicH": ch_})


def measured_excess(cfg: ModelConfig, bp: BubbleParams, q: QuadratureSpec = QuadratureSpec()) -> float:
    """(I_k - J(u0) - K^-n/n) / eps."""
    return reduced_energy_Ik(cfg, bp, q, with_residual=False).excess / bp.eps


def energy_J_ansatz(cfg: ModelConfig, bp: BubbleParams, q: QuadratureSpec = QuadratureSpec(rel_tol=1e-13)) -> float:
    """J(u0 + W) by direct quadrature over the sphere in geodesic polar coordinates (p = 0)."""
    if np.any(bp.p != 0):
        raise ValueError("direct evaluation implemented for p = 0")
    n = bp.n
    c = dimension_constants(n)
    ts = c.two_star
    an = Ansatz.from_params(bp, cfg.M)
    om = sphere_volume(n - 1)

    def f(th):
        W, Wt = bubble_theta(th, n, bp.delta, bp.f_center, bp.r, 1)
        d = 2.0 * np.tan(np.minimum(th, 3.0) / 2.0)
        h, fc, pi2, _ = an.coefficients(d)
        far = th >= 3.0
        base = base_data(n)
        h = np.where(far, base.cn_sg, h)
        fc = np.where(far, 1.0, fc)
        pi2 = np.where(far, base.pi0_sq, pi2)
        u = 1.0 + W
        dens = 0.5 * Wt * Wt + 0.5 * h * u * u - fc * u**ts / ts + pi2 * u ** (-ts) / ts
        return om * np.sin(th) ** (n - 1) * dens

    th_br = sorted(set([0.0, math.pi] + [2 * math.atan(x / 2) for x in an.breaks()] + [3.0]))
    res = gk_adaptive(f, th_br, q.rel_tol, 1e-300)
    return res.value


# ------------------------------------------------------------- residual

def residual_pointwise(an: Ansatz, d, cphi=None):
    """R = (Delta + h)(1 + W) - f (1+W)^(2*-1) - pi^2 (1+W)^(-2*-1) at chart points."""
    n = an.n
    c = dimension_constants(n)
    p = c.two_star - 1.0
    d = np.asarray(d, dtype=float)
    h, f, pi2, g2 = an.coefficients(d, cphi)
    psi0, _ = an.bump_fields(d, cphi)
    U, U1 = an.U(d, 1)
    r = an.r
    ch, ch1, ch2 = chi(d / r, 2)
    ch1 = ch1 / r
    ch2 = ch2 / r**2
    lam_p = (1.0 + d * d / 4.0) ** ((n - 2) / 2.0 * p)
    W = lam_p ** (1.0 / p) * ch * U
    with np.errstate(divide="ignore", invalid="ignore"):
        lap_chi = np.where(d > 0, -ch2 - (n - 1) * ch1 / d, 0.0)
    cut = lam_p * (U * lap_chi - 2.0 * ch1 * U1)
    with np.errstate(divide="ignore", invalid="ignore"):
        chp = np.where(ch > 0, ch ** (p - 1.0), 0.0)
    # f_y - f chi^(p-1), keeping the O(eps) difference f_y - f exact
    core = lam_p * U**p * ch * ((an.f_shift - psi0) - f * (chp - 1.0))
    return (core - f * pow_rem_shift(W, p) + cut - c.c_n * g2 * W
            - pi2 * np.expm1(-(p + 2.0) * np.log1p(W)))


def residual_direct(an: Ansatz, theta):
    """Same residual from theta-derivatives of W (p = 0), used as a cross-check."""
    n = an.n
    c = dimension_constants(n)
    p = c.two_star - 1.0
    th = np.asarray(theta, dtype=float)
    W, W1, W2 = bubble_theta(th, n, an.delta, an.f_y, an.r, 2)
    lap = -W2 - (n - 1) * np.cos(th) / np.sin(th) * W1
    d = 2.0 * np.tan(th / 2.0)
    h, f, pi2, _ = an.coefficients(d)
    u = 1.0 + W
    return lap + h * u - f * u**p - pi2 * u ** (-p - 2.0)


def residual_R(cfg: ModelConfig, bp: BubbleParams, q: QuadratureSpec = QuadratureSpec()):
    """(evaluator, ||R||^2 in L^(2n/(n+2))).  The evaluator takes chart distance d
    and, for p != 0, the cosine of the angle to the bump axis."""
    an = Ansatz.from_params(bp, cfg.M)
    n = an.n
    if bp.delta <= 0:
        raise ValueError("invalid bubble")
    if cfg.eps_trunc >= 1.0:
        raise ValueError("truncation active: u0 + W >= 1 must exceed eps_trunc")
    qexp = 2.0 * n / (n + 2)

    def ev(d, cphi=None):
        return residual_pointwise(an, d, cphi)

    def dens(d, cp):
        return np.abs(residual_pointwise(an, d, cp)) ** qexp * _round_weight(n, d)

    br = an.breaks()
    if an.P > 0:
        ext = an.bump_extent()
        a, _ = _integrate_d(an, dens, [x for x in br if x <= ext] + [ext], q, True)
        rest = [ext] + [x for x in br if x > ext]
        b, _ = _integrate_d(an, lambda d, cp: dens(d, None), rest, q, False) if ext < br[-1] else (0.0, 0.0)
        val = a + b
    else:
        val, _ = _integrate_d(an, dens, br, QuadratureSpec(max(q.rel_tol, 1e-10)), False)
    return ev, val ** (2.0 / qexp)


# ------------------------------------------------------------- discrete forms

def _check_same(u: RadialField, v: RadialField):
    if u.n != v.n or not np.array_equal(u.theta, v.theta):
        raise ValueError("fields live on different grids")


def inner_h(u: RadialField, v: RadialField, h=None) -> float:
    """int <grad u, grad v> + h u v over S^n with the finite-volume stiffness."""
    _check_same(u, v)
    g = fv_grid(u.theta, u.n)
    if h is None:
        h = base_data(u.n).cn_sg
    return float(u.values @ g.stiffness_apply(v.values) + np.sum(g.volumes * h * u.values * v.values))


def energy_J(u: RadialField, h=None, f=None, pi_sq=None, eps_trunc: float = 0.1) -> float:
    """Discrete J with (u+)^2* in the focusing term and eta inside the negative power."""
    n = u.n
    c = dimension_constants(n)
    base = base_data(n)
    ts = c.two_star
    h = base.cn_sg if h is None else h
    f = 1.0 if f is None else f
    pi_sq = base.pi0_sq if pi_sq is None else pi_sq
    g = fv_grid(u.theta, n)
    x = u.values
    eta = np.maximum(x, eps_trunc)
    dens = 0.5 * h * x * x - f * np.maximum(x, 0.0) ** ts / ts + pi_sq * eta ** (-ts) / ts
    return float(0.5 * x @ g.stiffness_apply(x) + np.sum(g.volumes * dens))


# ------------------------------------------------------------- kernel Gram matrix

@dataclass
class GramReport:
    gram: np.ndarray  # <Z_i, Z_j>_h, i, j = 0..n
    reference: np.ndarray  # ||grad V_i||^2 on R^n
    diag_rel: np.ndarray  # |G_ii - ref_i| / ref_i
    offdiag_rel: float  # max |G_ij| / ref_i over i != j
    delta_over_r: float


def _kernel_profiles(d, n, delta, fy, r):
    """Z0 = F(d) and Z_i = G(d) z_i in the bubble chart, with d-derivatives."""
    m = (n - 2) / 2.0
    a = fy / (n * (n - 2))
    q = 1.0 + d * d / 4.0
    lam, lam1 = q**m, m * q ** (m - 1) * d / 2.0
    c0, c1 = chi(d / r, 1)
    c1 = c1 / r
    den = delta * delta + a * d * d
    k0 = delta**m * (a * d * d - delta * delta) * den ** (-n / 2.0)
    k01 = delta**m * 2.0 * a * d * den ** (-n / 2.0) * (1.0 - (n / 2.0) * (a * d * d - delta * delta) / den)
    ki = delta ** (n / 2.0) * fy * den ** (-n / 2.0)
    ki1 = -n * a * d * ki / den
    F = lam * c0 * k0
    F1 = lam1 * c0 * k0 + lam * c1 * k0 + lam * c0 * k01
    G = lam * c0 * ki
    G1 = lam1 * c0 * ki + lam * c1 * ki + lam * c0 * ki1
    return F, F1, G, G1


def kernel_gram(bp: BubbleParams, M: float = 20.0, rtol: float = 1e-10) -> GramReport:
    """<Z_i, Z_j>_h = int <grad Z_i, grad Z_j>_g + h Z_i Z_j dv_g for a centred bubble (p = 0).

    In the stereographic chart g = (1 + d^2/4)^-2 |dz|^2, so the gradient term
    carries (1 + d^2/4)^(2-n) and the mass term (1 + d^2/4)^-n.  With
    Z_i = G(d) z_i the angular mean of z_i z_j is delta_ij d^2/n, and the
    off-diagonal entries vanish by the reflections z_i -> -z_i.
    """
    from .profiles import model_kernel_grad_sq
    n = bp.n
    if np.linalg.norm(bp.p) > 0:
        raise ValueError("kernel_gram covers the centred bubble p = 0")
    base = base_data(n)
    c = dimension_constants(n).c_n
    om = sphere_volume(n - 1)
    spec = BumpSpec(M)

    def h_of(d):
        if bp.eps == 0:
            return np.full_like(d, base.cn_sg)
        _, dpsi = bump_radial(2.0 * np.arctan(d / 2.0), bp.eps, bp.mu, spec)
        return base.cn_sg - c * dpsi * dpsi

    def parts(d):
        F, F1, G, G1 = _kernel_profiles(d, n, bp.delta, bp.f_center, bp.r)
        wg = (1.0 + d * d / 4.0) ** (2 - n) * om * d ** (n - 1)
        wh = (1.0 + d * d / 4.0) ** (-n) * om * d ** (n - 1) * h_of(d)
        z0 = wg * F1 * F1 + wh * F * F
        zi = wg * (G1 * G1 * d * d / n + 2.0 * G * G1 * d / n + G * G) + wh * G * G * d * d / n
        return z0, zi

    ring = [bp.mu * math.sqrt(M), bp.mu * math.sqrt(M + 1.0)]
    br = geometric_breaks(bp.delta / 16.0, 2.0 * bp.r, extra=[bp.r] + ring)
    g00 = integrate(lambda d: parts(d)[0], br, rtol).value
    gii = integrate(lambda d: parts(d)[1], br, rtol).value
    ref0, refi = model_kernel_grad_sq(n, bp.f_center)
    gram = np.diag([g00] + [gii] * n)
    ref = np.array([ref0] + [refi] * n)
    diag = np.abs(np.diag(gram) - ref) / ref
    off = gram - np.diag(np.diag(gram))
    return GramReport(gram, ref, diag, float(np.max(np.abs(off) / ref[:, None])), bp.delta / bp.r)


# ------------------------------------------------------------- expansion check

@dataclass
class ExpansionReport:
    epsilon: float
    measured: float
    predicted: float
    gap: float
    rel_gap: float
    branch: str
    I2_over_eps: float
    resid_over_eps: float
    dt_measured: float = float("nan")
    dt_predicted: float = float("nan")
    dp_measured: float = float("nan")
    dp_predicted: float = float("nan")
    quad_error: float = 0.0
    noise_limited: bool = False


def expansion_check(cfg: ModelConfig, t: float, p, ladder, r: float | None = None,
                    reduced_spec=None, derivatives: bool = True, dt_rel: float = 1e-3,
                    q: QuadratureSpec = QuadratureSpec(), mu_exp: float | None = None):
    from .reduced import ReducedEnergySpec, Hred_eval, Hred_grad, weyl_coefficient
    from .profiles import free_bubble
    lad = np.asarray(ladder, dtype=float)
    if lad.size < 1 or np.any(np.diff(lad) >= 0) or np.any(lad <= 0):
        raise ValueError("ladder must be positive and strictly decreasing")
    if not 1e-3 <= t <= 1e3:
        raise ValueError("t outside the compact window [1e-3, 1e3]")
    n = cfg.n
    p = np.zeros(n) if p is None else np.asarray(p, dtype=float)
    r = cfg.schedule.r_free if r is None else r
    if mu_exp is None:
        mu_exp = cfg.schedule.mu_power
    if reduced_spec is None:
        branch = "lcf" if (cfg.lcf or n <= 9) else ("n10" if n == 10 else "n11plus")
        reduced_spec = ReducedEnergySpec(n, branch=branch, M=cfg.M, weyl_sq=cfg.weyl_sq)
    P = float(np.linalg.norm(p))
    out = []
    for eps in lad:
        mu = eps**mu_exp

        def meas(tt, pp):
            bp = free_bubble(n, eps, tt, pp, mu=mu, r=r, M=cfg.M)
            return reduced_energy_Ik(cfg, bp, q, with_residual=False)

        bp = free_bubble(n, eps, t, p, mu=mu, r=r, M=cfg.M)
        br = reduced_energy_Ik(cfg, bp, q, with_residual=True)
        m = br.excess / eps
        pred = Hred_eval(reduced_spec, t, P)
        if not (cfg.lcf or n <= 9) and cfg.weyl_sq > 0 and reduced_spec.branch == "lcf":
            pred -= weyl_coefficient(n) * cfg.weyl_sq * (mu * t) ** 4 / eps
        gap = abs(m - pred)
        rep = ExpansionReport(float(eps), m, pred, gap, gap / abs(pred), reduced_spec.branch,
                              br.I2 / eps, br.resid_norm_sq / eps, quad_error=br.quad_error / eps)
        if derivatives:
            h = dt_rel * t
            ep = meas(t + h, p).excess / eps
            em = meas(t - h, p).excess / eps
            rep.dt_measured = (ep - em) / (2 * h)
            g = Hred_grad(reduced_spec, t, p)
            rep.dt_predicted = g[0]
            hp = 1e-3
            e1 = np.zeros(n)
            e1[0] = hp
            if P + hp <= 1.0:
                rep.dp_measured = (meas(t, p + e1).excess - meas(t, p - e1).excess) / (2 * hp * eps)
                rep.dp_predicted = g[1]
        rep.noise_limited = rep.quad_error > 0.1 * max(gap, 1e-300)
        out.append(rep)
    return out

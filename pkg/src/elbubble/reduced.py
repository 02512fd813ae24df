"""Limit reduced energy H(t, p), its derivatives and critical-point certification.

Away from n = 6 the map is

    H(t, p) = -(1/2*) int Psi(p + t y) w(y) dy - (interaction) t^e,
    w(y) = (1 + f(xi0)|y|^2/(n(n-2)))^-n.

Substituting x = p + t y moves all (t, p) dependence into the kernel
t^n (t^2 + c|x - p|^2)^-n, so derivatives are integrals of kernel derivatives
against the fixed compactly supported Psi.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import optimize, special

from .model import dimension_constants, sphere_volume
from .profiles import BumpSpec, beta
from .quadrature import gk_adaptive, axisym_integrate, whole_space_moment_closed, bubble_mass

BRANCHES = ("lcf", "n10", "n11plus", "n6")


def interaction_coefficient(n: int, mode: str = "corrected") -> float:
    """Coefficient of the bubble/background interaction term in H.

    'corrected' is alpha_n * omega_{n-1} = int U^(2*-1) over R^n, which is what the
    energy quadrature converges to; 'literal' drops the sphere volume factor.
    """
    c = dimension_constants(n)
    if mode == "corrected":
        return bubble_mass(n)
    if mode == "literal":
        return c.alpha_n
    raise ValueError(f"unknown interaction mode {mode!r}")


def weyl_coefficient(n: int) -> float:
    """K_n^-n n (n-2)^2 / (24 (n-4)(n-6)), multiplying |W|^2 delta^4."""
    if n <= 6:
        raise ValueError("Weyl term defined for n > 6")
    K = dimension_constants(n).K_n
    return K ** (-n) * n * (n - 2) ** 2 / (24.0 * (n - 4) * (n - 6))


def n6_bump(x, radius: float = 2.0):
    """Smooth compactly supported bump with value 1 and a strict maximum at 0."""
    x = np.asarray(x, dtype=float)
    s = np.sum(x * x, axis=-1) / radius**2 if x.ndim else (x / radius) ** 2
    out = np.zeros_like(np.asarray(s, dtype=float))
    m = s < 1.0
    out[m] = np.exp(-s[m] / (1.0 - s[m])) if np.ndim(s) else math.exp(-s / (1 - s))
    return out


def n6_bump_radial(rho, radius: float = 2.0):
    s = (np.asarray(rho, dtype=float) / radius) ** 2
    out = np.zeros_like(s)
    m = s < 1.0
    out[m] = np.exp(-s[m] / (1.0 - s[m]))
    return out


def n6_quadratic_coefficient() -> float:
    """1/2 ||U||^2_{L^2(R^6)} for U = (1 + |y|^2/24)^-2, the t^2 coefficient per unit H."""
    # int_0^inf r^5 (1 + r^2/24)^-4 dr = 24^3 B(3, 1) / 2
    return 0.5 * sphere_volume(5) * 24.0**3 * special.beta(3, 1) / 2.0


def n6_cubic_constant() -> float:
    """Leading coefficient of (1/3) int [(1+U)^-3 - 1 + 3U] / delta^3 for the n = 6 bubble."""
    def g(r):
        r = np.asarray(r, dtype=float)
        x = r ** -4.0
        # (1 + x)^-3 - 1 + 3x without cancellation
        return r**5 * (np.expm1(-3.0 * np.log1p(x)) + 3.0 * x)

    from .quadrature import integrate
    val = integrate(g, [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, math.inf], 1e-13).value
    return 24.0**3 / 3.0 * sphere_volume(5) * val


@dataclass(frozen=True)
class ReducedEnergySpec:
    n: int
    branch: str = "lcf"
    f_xi0: float = 1.0
    weyl_sq: float = 0.0
    M: float = 20.0
    a0: float | None = None
    C0: float | None = None
    interaction: str = "corrected"
    n6_B: float | None = None
    rtol: float = 1e-12

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ValueError(f"unknown branch {self.branch!r}")
        if not self.f_xi0 > 0:
            raise ValueError("f(xi0) must be positive")
        if self.weyl_sq < 0:
            raise ValueError("|W|^2 must be nonnegative")
        ok = {"lcf": self.n >= 7, "n10": self.n == 10, "n11plus": self.n >= 11, "n6": self.n == 6}
        if not ok[self.branch]:
            raise ValueError(f"branch {self.branch} inconsistent with n={self.n}")
        if self.branch == "n11plus" and self.weyl_sq <= 0:
            raise ValueError("n11plus branch needs |W|^2 > 0")

    @property
    def bump(self) -> BumpSpec:
        return BumpSpec(self.M)

    @property
    def c_w(self) -> float:
        return self.f_xi0 / (self.n * (self.n - 2))

    @property
    def two_star(self) -> float:
        return 2.0 * self.n / (self.n - 2)

    @property
    def B6(self) -> float:
        return self.n6_B if self.n6_B is not None else n6_quadratic_coefficient()

    def power_term(self):
        """(coefficient, exponent) of the negative power of t in H."""
        n = self.n
        if self.branch == "lcf":
            return interaction_coefficient(n, self.interaction), (n - 2) / 2.0
        if self.branch == "n10":
            return interaction_coefficient(n, self.interaction) + weyl_coefficient(n) * self.weyl_sq, 4.0
        if self.branch == "n11plus":
            return weyl_coefficient(n) * self.weyl_sq, 4.0
        raise ValueError("n6 branch has no power term")


# ------------------------------------------------------------- kernel algebra

def _kernel(t, a, which):
    """Derivatives of k(t, a) = t^n (t^2 + a)^-n; n is carried in `which`."""
    n, kind = which
    s = t * t + a
    if kind == "k":
        return t**n * s ** (-n)
    if kind == "t":
        return n * t ** (n - 1) * (a - t * t) * s ** (-n - 1)
    if kind == "tt":
        return (n * ((n - 1) * t ** (n - 2) * (a - t * t) - 2.0 * t**n) * s ** (-n - 1)
                - 2.0 * n * (n + 1) * t**n * (a - t * t) * s ** (-n - 2))
    if kind == "a":
        return -n * t**n * s ** (-n - 1)
    if kind == "aa":
        return n * (n + 1) * t**n * s ** (-n - 2)
    if kind == "ta":
        return -n * (n * t ** (n - 1) * s ** (-n - 1) - 2.0 * (n + 1) * t ** (n + 1) * s ** (-n - 2))
    raise ValueError(kind)


def _rho_breaks(spec: ReducedEnergySpec, t: float):
    rm, r1 = math.sqrt(spec.M), math.sqrt(spec.M + 1.0)
    pts = [0.0, rm, r1]
    # resolve the kernel width t/sqrt(c) when it is small
    w = t / math.sqrt(spec.c_w)
    while w < rm:
        pts.append(w)
        w *= 2.0
    return sorted(set(pts))


def _radial_psi_weight(spec, rho):
    """rho^2 beta(rho^2) / 2*, i.e. -Psi / 2*."""
    return rho * rho * beta(spec.bump, rho * rho) / spec.two_star


def _integral_p0(spec: ReducedEnergySpec, t: float, f):
    """(1/2*) int rho^2 beta(rho^2) f(rho) dx over R^n for radial f."""
    om = sphere_volume(spec.n - 1)
    n = spec.n

    def g(r):
        return om * r ** (n - 1) * _radial_psi_weight(spec, r) * f(r)

    res = gk_adaptive(g, _rho_breaks(spec, t), spec.rtol, 1e-300)
    if not res.converged:
        raise FloatingPointError("quadrature of the reduced energy did not converge")
    return res.value


def _integral_axisym(spec: ReducedEnergySpec, t: float, P: float, f):
    """(1/2*) int rho^2 beta(rho^2) f(rho, phi) dx with phi measured from the p axis."""
    n = spec.n

    def g(r, ph):
        return r ** (n - 1) * _radial_psi_weight(spec, r) * f(r, ph)

    res = axisym_integrate(g, _rho_breaks(spec, t), n, spec.rtol, atol=1e-300)
    return res.value


def _p_norm(p, n):
    if np.ndim(p) == 0:
        return abs(float(p))
    p = np.asarray(p, dtype=float)
    if p.size != n:
        raise ValueError(f"p must have {n} components")
    return float(np.linalg.norm(p))


# ------------------------------------------------------------- H and derivatives

def _psi_part(spec, t, P, kind):
    n, c = spec.n, spec.c_w
    if P == 0.0 and kind in ("k", "t", "tt"):
        return _integral_p0(spec, t, lambda r: _kernel(t, c * r * r, (n, kind)))

    def a_of(r, ph):
        return c * (r * r - 2.0 * r * P * np.cos(ph) + P * P)

    if kind in ("k", "t", "tt"):
        return _integral_axisym(spec, t, P, lambda r, ph: _kernel(t, a_of(r, ph), (n, kind)))
    if kind == "p":
        # d/dp_1 with a_p = -2c (x_1 - P)
        return _integral_axisym(spec, t, P, lambda r, ph: _kernel(t, a_of(r, ph), (n, "a"))
                                * (-2.0 * c) * (r * np.cos(ph) - P))
    raise ValueError(kind)


def Hred_eval(spec: ReducedEnergySpec, t: float, p=0.0) -> float:
    if not t > 0:
        raise ValueError("t must be positive")
    P = _p_norm(p, spec.n)
    if P > 1.0 + 1e-12:
        raise ValueError("|p| must not exceed 1")
    if spec.branch == "n6":
        return -spec.B6 * float(n6_bump_radial(P)) * t * t + _n6_C0(spec) * spec.a0 * t**3
    coef, e = spec.power_term()
    return _psi_part(spec, t, P, "k") - coef * t**e


def _n6_C0(spec):
    if spec.a0 is None or spec.C0 is None:
        raise ValueError("n6 branch needs a0 and C0")
    return spec.C0


def Hred_grad(spec: ReducedEnergySpec, t: float, p=None) -> np.ndarray:
    """(dH/dt, dH/dp_1, ..., dH/dp_n); p is taken along the first axis by symmetry."""
    n = spec.n
    p = np.zeros(n) if p is None else np.asarray(p, dtype=float)
    P = _p_norm(p, n)
    g = np.zeros(n + 1)
    if spec.branch == "n6":
        H6 = float(n6_bump_radial(P))
        g[0] = -2.0 * spec.B6 * H6 * t + 3.0 * _n6_C0(spec) * spec.a0 * t * t
        if P > 0:
            s = (P / 2.0) ** 2
            dH = H6 * (-1.0 / (1.0 - s) ** 2) * 2.0 * P / 4.0
            g[1:] = -spec.B6 * t * t * dH * p / P
        return g
    coef, e = spec.power_term()
    g[0] = _psi_part(spec, t, P, "t") - coef * e * t ** (e - 1)
    if P > 0:
        g[1:] = _psi_part(spec, t, P, "p") * p / P
    return g


def dHdt_split_form(spec: ReducedEnergySpec, t: float) -> float:
    """dH/dt(t, 0) from the beta / beta' representation in the y variable."""
    if spec.branch == "n6":
        raise ValueError("not defined for n = 6")
    n, c = spec.n, spec.c_w
    om = sphere_volume(n - 1)
    bs = spec.bump

    def g(y):
        s = t * t * y * y
        b, b1 = beta(bs, s, 1)
        w = (1.0 + c * y * y) ** (-n)
        return om * y ** (n + 1) * w * (2.0 * t * b + 2.0 * t**3 * y * y * b1)

    br = [0.0, math.sqrt(spec.M) / t, math.sqrt(spec.M + 1.0) / t]
    br += [x for x in (1.0 / math.sqrt(c) * 2.0**j for j in range(-2, 4)) if x < br[-1]]
    val = gk_adaptive(g, br, spec.rtol, 1e-300).value / spec.two_star
    coef, e = spec.power_term()
    return val - coef * e * t ** (e - 1)


def Hred_hessian(spec: ReducedEnergySpec, t: float, p=None) -> np.ndarray:
    """Hessian in (t, p); analytic at p = 0, central differences of the gradient otherwise."""
    n = spec.n
    p = np.zeros(n) if p is None else np.asarray(p, dtype=float)
    if np.any(p != 0):
        h = 1e-4
        Hs = np.zeros((n + 1, n + 1))
        x0 = np.concatenate([[t], p])
        for i in range(n + 1):
            e = np.zeros(n + 1)
            e[i] = h * (t if i == 0 else 1.0)
            gp = Hred_grad(spec, x0[0] + e[0], x0[1:] + e[1:])
            gm = Hred_grad(spec, x0[0] - e[0], x0[1:] - e[1:])
            Hs[:, i] = (gp - gm) / (2 * e[i])
        return 0.5 * (Hs + Hs.T)
    Hs = np.zeros((n + 1, n + 1))
    if spec.branch == "n6":
        Hs[0, 0] = -2.0 * spec.B6 + 6.0 * _n6_C0(spec) * spec.a0 * t
        # H6 = exp(-s/(1-s)), s = |p|^2/4 has Hessian -1/2 Id at 0
        Hs[1:, 1:] = np.eye(n) * (spec.B6 * t * t * 0.5)
        return Hs
    c = spec.c_w
    coef, e = spec.power_term()
    Hs[0, 0] = _psi_part(spec, t, 0.0, "tt") - coef * e * (e - 1) * t ** (e - 2)
    # angular average of x_i^2 is rho^2 / n
    hpp = _integral_p0(spec, t, lambda r: _kernel(t, c * r * r, (n, "aa")) * 4 * c * c * r * r / n
                       + _kernel(t, c * r * r, (n, "a")) * 2 * c)
    Hs[1:, 1:] = np.eye(n) * hpp
    return Hs


def t0_closed_form(spec: ReducedEnergySpec) -> float:
    """Critical scale of the plateau map (A/2*) t^2 - coef t^e."""
    if spec.branch == "n6":
        return 2.0 * spec.B6 / (3.0 * spec.a0 * _n6_C0(spec))
    if spec.n < 7:
        raise ValueError("power-law form needs n >= 7")
    A = whole_space_moment_closed(spec.n, spec.f_xi0)
    coef, e = spec.power_term()
    return ((2.0 / spec.two_star) * A / (e * coef)) ** (1.0 / (e - 2.0))


def plateau_H(spec: ReducedEnergySpec, t: float) -> float:
    A = whole_space_moment_closed(spec.n, spec.f_xi0)
    coef, e = spec.power_term()
    return A / spec.two_star * t * t - coef * t**e


# ------------------------------------------------------------- critical point

@dataclass
class CriticalPoint:
    tM: float
    t0: float
    hessTT: float
    hessPP: np.ndarray
    signature: tuple
    grad_norm: float
    bracket: tuple
    certificate: dict = field(default_factory=dict)

    @property
    def rel_drift(self) -> float:
        return abs(self.tM - self.t0) / self.t0


def find_critical(spec: ReducedEnergySpec, basin: float = 0.05) -> CriticalPoint:
    """Root of dH/dt(., 0) nearest the closed-form scale, with Hessian certificate."""
    t0 = t0_closed_form(spec)
    n = spec.n
    if spec.branch == "n6":
        tM = t0
        br = (t0, t0)
    else:
        f = lambda t: Hred_grad(spec, t)[0]
        ts = t0 * np.geomspace(1e-3, 1e2, 61)
        vals = np.array([f(t) for t in ts])
        idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        if idx.size == 0:
            raise RuntimeError(f"no sign change of dH/dt near t0={t0:.6g} (M={spec.M} too small?)")
        # the saddle root: dH/dt goes from + to -
        down = [i for i in idx if vals[i] > 0 > vals[i + 1]] or list(idx)
        i = min(down, key=lambda j: abs(math.log(ts[j] / t0)))
        br = (float(ts[i]), float(ts[i + 1]))
        tM = optimize.brentq(f, *br, xtol=1e-15 * t0, rtol=1e-15, maxiter=200)
    Hs = Hred_hessian(spec, tM)
    hTT = Hs[0, 0]
    hPP = np.linalg.eigvalsh(Hs[1:, 1:])
    eig = np.concatenate([[hTT], hPP])
    sig = (int(np.sum(eig < 0)), int(np.sum(eig > 0)))
    g = Hred_grad(spec, tM)
    scale = abs(Hred_eval(spec, tM)) / tM if spec.branch != "n6" else 1.0
    gn = float(np.linalg.norm(g)) / max(scale, 1e-300)
    cert = {
        "tM": tM, "t0": t0, "relDrift": abs(tM - t0) / t0, "M": spec.M,
        "hessianEigenvalues": eig.tolist(), "bracket": list(br),
        "gradNormScaled": gn, "quadRtol": spec.rtol, "interaction": spec.interaction,
        "newtonBasin": newton_basin_check(spec, tM, basin) if spec.branch != "n6" else None,
    }
    return CriticalPoint(tM, t0, float(hTT), hPP, sig, gn, br, cert)


def newton_basin_check(spec: ReducedEnergySpec, tM: float, gamma: float = 0.05, steps: int = 30):
    """Run Newton on grad H from (tM(1 +- gamma), 0) and report the landing points."""
    out = {}
    for sgn in (-1, 1):
        t = tM * (1 + sgn * gamma)
        for _ in range(steps):
            g = Hred_grad(spec, t)[0]
            h = Hred_hessian(spec, t)[0, 0]
            dt = -g / h
            t += dt
            if abs(dt) < 1e-14 * tM:
                break
        out["minus" if sgn < 0 else "plus"] = {"start": tM * (1 + sgn * gamma), "end": t,
                                               "relErr": abs(t - tM) / tM}
    out["converged"] = all(v["relErr"] < 1e-10 for v in out.values() if isinstance(v, dict))
    return out


# ------------------------------------------------------------- n = 6 fit

@dataclass
class N6Fit:
    C0: float
    C0_rescaled: float  # C0 for the energy rescaled so the eps*delta^2 coefficient is 5 H(p)
    t0: float
    B: float
    a0: float
    residual: float
    B_free: float
    C0_free: float
    t_grid_min: float
    min_rel_err: float


def reduced_n6_fit(t_grid, energies, a0: float, B: float | None = None) -> N6Fit:
    """Fit E(t) = -B t^2 + C0 a0 t^3 with B fixed; energies already divided by the eps scale."""
    t = np.asarray(t_grid, dtype=float)
    E = np.asarray(energies, dtype=float)
    if t.size < 3 or t.size != E.size:
        raise ValueError("need at least three (t, E) samples")
    B = n6_quadratic_coefficient() if B is None else B
    # one-parameter least squares for C0
    x = a0 * t**3
    y = E + B * t * t
    C0 = float(x @ y / (x @ x))
    if not C0 > 0:
        raise ValueError(f"fitted C0 = {C0:.6g} is not positive")
    model = -B * t * t + C0 * a0 * t**3
    resid = float(np.linalg.norm(model - E) / np.linalg.norm(E))
    # free two-parameter diagnostic
    X = np.column_stack([-t * t, a0 * t**3])
    (Bf, Cf), *_ = np.linalg.lstsq(X, E, rcond=None)
    # a positive rescaling of the energy moves no critical point
    C0r = 5.0 * C0 / B
    t0 = 10.0 / (3.0 * a0 * C0r)
    tmin = grid_minimizer(t, E)
    return N6Fit(C0, C0r, t0, B, a0, resid, float(Bf), float(Cf), tmin, abs(t0 - tmin) / tmin)


def grid_minimizer(t, E) -> float:
    """Minimizer of sampled data, refined by a parabola through the three best points."""
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    i = int(np.argmin(E))
    if i == 0 or i == t.size - 1:
        return float(t[i])
    x, y = t[i - 1:i + 2], E[i - 1:i + 2]
    c2, c1, _ = np.polyfit(x, y, 2)
    return float(-c1 / (2 * c2)) if c2 > 0 else float(t[i])

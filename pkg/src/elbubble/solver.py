"""Radial finite-volume solver for the truncated Einstein-Lichnerowicz equation on S^n.

Everything here is radial about the north pole: the bump and the bubble share
that center (p = 0).  The discrete residual is the integrated form

    F(u) = A u + V (h u - f (u+)^(2*-1) - pi^2 eta(u)^(-2*-1)),

A the finite-volume stiffness matrix and V the diagonal of cell volumes, so
F / V is the pointwise residual at the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import linalg, optimize, sparse

from .discretize import FVGrid, RadialField, bubble_grid, fv_grid
from .model import ModelConfig, base_data, dimension_constants, schedule_at
from .profiles import BumpSpec, bubble_theta, bump_radial, kernel_radial


# ------------------------------------------------------------- problem data

@dataclass(frozen=True)
class ProblemData:
    """Coefficients sampled on the grid: Lap u + h u = f u^p + pi2 eta(u)^(-p-2)."""
    n: int
    theta: np.ndarray
    h: np.ndarray
    f: np.ndarray
    pi2: np.ndarray
    eps_trunc: float
    eps: float = 0.0
    mu: float = 1.0


def problem_coefficients(n: int, theta, eps: float = 0.0, mu: float = 1.0, M: float = 20.0,
                         eps_trunc: float = 0.1, a0: float = 7.0, bump_radius: float = 2.0) -> ProblemData:
    """Coefficients for u0 = 1 with one bump of size eps and width mu at the pole.

    n >= 7: h = cS - c |grad Psi0|^2, f = 1 + Psi0, pi^2 = pi0^2 - c |grad Psi0|^2 - Psi0.
    n = 6:  h = 1 + a0 - eps H, f = 1, pi^2 = a = a0 - eps H.
    """
    th = np.asarray(theta, dtype=float)
    if n == 6:
        from .reduced import n6_bump_radial
        z = 2.0 * np.tan(np.minimum(th, math.pi * (1 - 1e-16)) / 2.0)
        H = n6_bump_radial(z / mu, bump_radius) if eps > 0 else np.zeros_like(th)
        a = a0 - eps * H
        return ProblemData(n, th, 1.0 + a, np.ones_like(th), a, eps_trunc, eps, mu)
    base = base_data(n, eps_trunc)
    c = dimension_constants(n).c_n
    if eps > 0:
        psi, dpsi = bump_radial(th, eps, mu, BumpSpec(M))
    else:
        psi, dpsi = np.zeros_like(th), np.zeros_like(th)
    g2 = dpsi * dpsi
    return ProblemData(n, th, base.cn_sg - c * g2, 1.0 + psi, base.pi0_sq - c * g2 - psi,
                       eps_trunc, eps, mu)


def problem_from_config(cfg: ModelConfig, theta, k: int) -> ProblemData:
    """Coefficients around the k-th bump only (other bumps lie outside its window)."""
    ent = schedule_at(cfg.schedule, k)
    return problem_coefficients(cfg.n, theta, ent.eps, ent.mu, cfg.M, cfg.eps_trunc)


# ------------------------------------------------------------- operator

@dataclass(frozen=True)
class DiscretizedOperator:
    grid: FVGrid
    h: np.ndarray
    f: np.ndarray
    pi2: np.ndarray
    eps_trunc: float

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    @property
    def power(self) -> float:
        return dimension_constants(self.n).two_star - 1.0

    def nonlinear(self, u):
        p = self.power
        up = np.maximum(u, 0.0)
        eta = np.maximum(u, self.eps_trunc)
        return self.h * u - self.f * up**p - self.pi2 * eta ** (-p - 2.0)

    def potential(self, u):
        """Derivative of the pointwise nonlinearity."""
        p = self.power
        up = np.maximum(u, 0.0)
        eta = np.maximum(u, self.eps_trunc)
        neg = np.where(u > self.eps_trunc, (p + 2.0) * self.pi2 * eta ** (-p - 3.0), 0.0)
        return self.h - p * self.f * up ** (p - 1.0) + neg

    def residual(self, u):
        return self.grid.stiffness_apply(u) + self.grid.volumes * self.nonlinear(u)

    def pointwise_residual(self, u):
        return self.residual(u) / self.grid.volumes

    def row_magnitude(self, u):
        """Sum of the absolute values of the terms making up each row of F(u)."""
        p = self.power
        up = np.maximum(u, 0.0)
        eta = np.maximum(u, self.eps_trunc)
        off = self.grid.off
        au = np.abs(u)
        flux = off * (au[:-1] + au[1:])
        out = self.grid.volumes * (np.abs(self.h * u) + self.f * up**p + np.abs(self.pi2) * eta ** (-p - 2.0))
        out[:-1] += flux
        out[1:] += flux
        return out

    def relative_residual(self, u, F=None, extra=None) -> float:
        """Componentwise relative residual max_i |F_i| / sum_j |terms_ij|.

        Tiny pole cells make |F/V| a pure rounding amplifier; this scaled form
        is the backward error of each discrete equation instead.
        """
        F = self.residual(u) if F is None else F
        mag = self.row_magnitude(u)
        if extra is not None:
            mag = mag + np.abs(extra)
        return float(np.max(np.abs(F) / mag))

    def jacobian_tridiag(self, u):
        d, e = self.grid.stiffness_banded()
        return d + self.grid.volumes * self.potential(u), e

    def jacobian_sparse(self, u, scaled: bool = False):
        d, e = self.jacobian_tridiag(u)
        if scaled:
            s = 1.0 / np.sqrt(self.grid.volumes)
            d = d * s * s
            e = e * s[:-1] * s[1:]
        return sparse.diags([e, d, e], [-1, 0, 1], format="csc")

    def solve_jacobian(self, u, rhs):
        """J^-1 rhs, solved in the V^-1/2 scaled variables where rows are balanced."""
        d, e = self.jacobian_tridiag(u)
        s = 1.0 / np.sqrt(self.grid.volumes)
        ab = np.zeros((3, d.size))
        ab[0, 1:] = e * s[:-1] * s[1:]
        ab[1] = d * s * s
        ab[2, :-1] = e * s[:-1] * s[1:]
        rhs = np.asarray(rhs, dtype=float)
        sc = s if rhs.ndim == 1 else s[:, None]
        return sc * linalg.solve_banded((1, 1), ab, sc * rhs)

    def h_operator_apply(self, v):
        """(A + V h) v, the Gram operator of <., .>_h."""
        return self.grid.stiffness_apply(v) + self.grid.volumes * self.h * v

    def inner_h(self, u, v) -> float:
        return float(u @ self.h_operator_apply(v))

    def l2_norm(self, v) -> float:
        return math.sqrt(float(np.sum(self.grid.volumes * v * v)))

    def lp_norm(self, v, q: float) -> float:
        return float(np.sum(self.grid.volumes * np.abs(v) ** q)) ** (1.0 / q)


def nodes_below(theta, delta: float) -> int:
    return int(np.count_nonzero(np.asarray(theta) < delta))


def assemble_operator(problem: ProblemData, theta=None, delta: float | None = None,
                      min_nodes: int = 12) -> DiscretizedOperator:
    """Finite-volume operator on the problem grid; delta, if given, must be resolved."""
    th = problem.theta if theta is None else np.asarray(theta, dtype=float)
    if not np.array_equal(th, problem.theta):
        raise ValueError("coefficients were sampled on a different grid")
    if delta is not None and nodes_below(th, delta) < min_nodes:
        raise ValueError(f"grid too coarse near the pole: {nodes_below(th, delta)} nodes below "
                         f"theta = {delta:.3g}, need {min_nodes}")
    return DiscretizedOperator(fv_grid(th, problem.n), problem.h, problem.f, problem.pi2,
                               problem.eps_trunc)


# ------------------------------------------------------------- Newton

@dataclass
class SolveResult:
    u: RadialField
    resid_sup: float  # componentwise relative residual, see relative_residual
    resid_abs: float  # max |F/V|
    u_min: float
    u_max: float
    morse_index: int
    iterations: int
    converged: bool
    eta_active: bool
    lambda0: float | None = None
    history: list = field(default_factory=list)

    def values(self) -> np.ndarray:
        return self.u.values


def morse_index(op: DiscretizedOperator, u) -> int:
    """Negative eigenvalues of J v = lam V v, by Sylvester inertia of the tridiagonal J."""
    d, e = op.jacobian_tridiag(u)
    tiny = np.finfo(float).tiny
    neg = 0
    piv = d[0]
    for i in range(d.size):
        if i:
            piv = d[i] - e[i - 1] * e[i - 1] / piv
        if piv == 0.0:
            piv = -tiny
        if piv < 0:
            neg += 1
    return neg


def _deflation(u, roots, V, power: float = 2.0, shift: float = 1.0):
    """Multiplier m(u) and the directional factor (grad m . d)/m as a callable."""
    if not roots:
        return 1.0, lambda d: 0.0
    diffs = [u - r for r in roots]
    D2 = [float(np.sum(V * w * w)) for w in diffs]
    m = 1.0
    for q in D2:
        m *= q ** (-power / 2.0) + shift

    def dlog(d):
        s = 0.0
        for w, q in zip(diffs, D2):
            dq = 2.0 * float(np.sum(V * w * d))
            s += (-power / 2.0) * q ** (-power / 2.0 - 1.0) * dq / (q ** (-power / 2.0) + shift)
        return s

    return m, dlog


def newton_solve(op: DiscretizedOperator, initial, tol: float = 1e-12, max_iter: int = 80,
                 deflate=(), min_step: float = 1e-6, polish: int = 3) -> SolveResult:
    """Damped Newton with Armijo backtracking on the V^-1 weighted residual norm.

    deflate lists roots to steer away from, via m(u) = prod(1/||u - r||^2 + 1).
    After convergence up to `polish` further full steps are taken while they
    keep lowering the relative residual (down to the rounding floor).
    """
    u = np.array(initial.values if isinstance(initial, RadialField) else initial, dtype=float)
    if u.shape != op.theta.shape:
        raise ValueError("initial guess is on a different grid")
    if not np.all(u > 0):
        raise ValueError("initial guess must be positive")
    V = op.grid.volumes
    roots = [np.asarray(r.values if isinstance(r, RadialField) else r, dtype=float) for r in deflate]

    def merit(v):
        F = op.residual(v)
        m, _ = _deflation(v, roots, V)
        return m * math.sqrt(float(np.sum(F * F / V))), F

    hist = []
    eta_seen = False
    phi, F = merit(u)
    it = 0
    converged = False
    for it in range(max_iter + 1):
        rel = op.relative_residual(u, F)
        hist.append(rel)
        eta_seen |= bool(np.any(u <= op.eps_trunc))
        if rel < tol:
            converged = True
            break
        if it == max_iter:
            break
        d = -op.solve_jacobian(u, F)
        if roots:
            _, dlog = _deflation(u, roots, V)
            d = d / (1.0 - dlog(d))
        alpha = 1.0
        while True:
            trial = u + alpha * d
            ph_t, F_t = merit(trial)
            if np.isfinite(ph_t) and ph_t <= (1.0 - 1e-4 * alpha) * phi:
                break
            alpha *= 0.5
            if alpha < min_step:
                break
        if alpha < min_step:
            # no decrease possible along the Newton direction
            break
        u, phi, F = trial, ph_t, F_t
    if converged:
        for _ in range(polish):
            trial = u - op.solve_jacobian(u, F)
            F_t = op.residual(trial)
            rel_t = op.relative_residual(trial, F_t)
            if not rel_t < hist[-1]:
                break
            u, F = trial, F_t
            hist.append(rel_t)
    res = op.pointwise_residual(u)
    return SolveResult(RadialField(op.theta, u, op.n), hist[-1], float(np.max(np.abs(res))),
                       float(u.min()), float(u.max()), morse_index(op, u), it, converged,
                       eta_seen, history=hist)


def relative_distance(op: DiscretizedOperator, u, v) -> float:
    a = u.values if isinstance(u, RadialField) else u
    b = v.values if isinstance(v, RadialField) else v
    return op.l2_norm(a - b) / max(op.l2_norm(a), op.l2_norm(b))


def deflated_search(op: DiscretizedOperator, seeds, tol: float = 1e-12, distinct: float = 1e-2,
                    max_iter: int = 80) -> list[SolveResult]:
    """Newton from each seed with all earlier roots deflated; keeps the distinct converged ones."""
    found: list[SolveResult] = []
    for s in seeds:
        r = newton_solve(op, s, tol, max_iter, deflate=[f.u for f in found])
        if not r.converged:
            continue
        if all(relative_distance(op, r.u, f.u) > distinct for f in found):
            found.append(r)
    return found


# ------------------------------------------------------------- spectrum

def linearization_spectrum(op: DiscretizedOperator, u, m: int = 6, refine: int = 2) -> np.ndarray:
    """Lowest m eigenvalues of J v = lam V v (J the Jacobian at u).

    Bisection (LAPACK stebz) on V^-1/2 J V^-1/2 brackets each eigenvalue; a few
    shifted inverse iterations then give the eigenvector and the Rayleigh
    quotient is taken in flux form, sum off*(dv)^2 + sum V*pot*v^2, which has
    no cancellation against the huge pole-cell entries.
    """
    if isinstance(u, SolveResult):
        u = u.u
    vals = np.asarray(u.values if isinstance(u, RadialField) else u, dtype=float)
    d, e = op.jacobian_tridiag(vals)
    V = op.grid.volumes
    s = 1.0 / np.sqrt(V)
    dd = d * s * s
    ee = e * s[:-1] * s[1:]
    m = min(m, dd.size)
    w = linalg.eigh_tridiagonal(dd, ee, eigvals_only=True, select="i", select_range=(0, m - 1),
                                lapack_driver="stebz", tol=np.finfo(float).tiny)
    pot = op.potential(vals)
    out = np.empty(m)
    rng = np.random.default_rng(0)
    for k, lam in enumerate(w):
        ab = np.zeros((3, dd.size))
        ab[0, 1:] = ee
        ab[1] = dd - (lam - 1e-9 * max(1.0, abs(lam)))
        ab[2, :-1] = ee
        y = rng.standard_normal(dd.size)
        for _ in range(refine):
            y = linalg.solve_banded((1, 1), ab, y)
            y /= np.linalg.norm(y)
        if refine == 0:
            out[k] = lam
            continue
        v = s * y
        out[k] = (float(np.sum(op.grid.off * np.diff(v) ** 2)) + float(np.sum(V * pot * v * v))) \
            / float(np.sum(V * v * v))
    return np.sort(out)


# ------------------------------------------------------------- reduction

@dataclass(frozen=True)
class BubbleOnGrid:
    """Radial bubble W and kernel Z0 with delta = scale * t on a fixed grid."""
    n: int
    theta: np.ndarray
    scale: float  # mu for n >= 7, eps for n = 6
    r: float
    f_center: float = 1.0

    def delta(self, t: float) -> float:
        return self.scale * t

    def W(self, t: float):
        return bubble_theta(self.theta, self.n, self.delta(t), self.f_center, self.r)

    def Z0(self, t: float):
        d = 2.0 * np.tan(np.minimum(self.theta, math.pi * (1 - 1e-16)) / 2.0)
        inside = d < 2.0 * self.r
        out = np.zeros_like(self.theta)
        out[inside] = kernel_radial(d[inside], self.n, self.delta(t), self.f_center, self.r, 0)
        return out


@dataclass
class BorderedPoint:
    t: float
    phi: np.ndarray
    lambda0: float  # coefficient of (A + V h) Z0
    lambda0_scaled: float
    phi_h1: float
    resid_norm: float  # ||R(t)|| in L^(2n/(n+2)) for the plain ansatz
    newton_iterations: int
    condition: float


@dataclass
class ReductionResult:
    t_grid: np.ndarray
    phi_norms: np.ndarray
    lambda0_curve: np.ndarray
    lambda0_scaled: np.ndarray
    resid_norms: np.ndarray
    zero_crossing: float | None
    bracket: tuple | None
    phi_constant: float  # max ||phi||_H1 / ||R||
    points: list = field(default_factory=list)


def _scaled_lambda(op, lam, Z, u):
    w = u - 1.0
    nz = math.sqrt(max(op.inner_h(Z, Z), 0.0))
    nw = math.sqrt(max(op.inner_h(w, w), 1e-300))
    return abs(lam) * nz / nw


def bordered_solve(op: DiscretizedOperator, bub: BubbleOnGrid, t: float, phi0=None,
                   tol: float = 1e-12, max_iter: int = 40) -> BorderedPoint:
    """Solve F(1 + W_t + phi) = lambda0 (A + V h) Z0 with <phi, Z0>_h = 0 by Newton.

    The Jacobian [[J, -b], [b^T, 0]] is factorized sparsely each step; b is
    normalized so that lambda0 is returned in units of (A + V h) Z0.
    """
    base = 1.0 + bub.W(t)
    Z = bub.Z0(t)
    b = op.h_operator_apply(Z)
    bn = float(np.linalg.norm(b))
    if bn == 0.0:
        raise ValueError("kernel element vanishes on this grid")
    bh = b / bn
    N = base.size
    phi = np.zeros(N) if phi0 is None else np.array(phi0, dtype=float)
    phi -= bh * (bh @ phi)  # start on the constraint
    lam = 0.0
    q = 2.0 * op.n / (op.n + 2.0)
    R0 = op.pointwise_residual(base)
    rnorm = op.lp_norm(R0, q)
    V = op.grid.volumes
    cond = float("nan")
    hist = []
    it = 0
    for it in range(1, max_iter + 1):
        u = base + phi
        G = op.residual(u) - lam * bh
        g2 = float(bh @ phi)
        hist.append(op.relative_residual(u, G, lam * bh))
        # two steps minimum: lambda0 is O(eps) and must come out of a solve
        if it > 2 and hist[-1] < tol and abs(g2) < tol * max(1.0, float(np.linalg.norm(phi))):
            break
        # block elimination on [[J, -b], [b^T, 0]] with two banded solves
        # (in V^-1/2 scaled variables) and one round of iterative refinement
        dphi, dlam = np.zeros(N), 0.0
        r1, r2 = -G, -g2
        for _ in range(2):
            xy = op.solve_jacobian(u, np.column_stack([r1, bh]))
            x, y = xy[:, 0], xy[:, 1]
            by = float(bh @ y)
            if by == 0.0 or not np.isfinite(by):
                raise np.linalg.LinAlgError(f"bordered system singular at t = {t:.6g}")
            dl = (r2 - float(bh @ x)) / by
            dphi = dphi + x + dl * y
            dlam = dlam + dl
            Jd = op.grid.stiffness_apply(dphi) + V * op.potential(u) * dphi
            r1 = -G - (Jd - dlam * bh)
            r2 = -g2 - float(bh @ dphi)
        cond = float(np.linalg.norm(y) / abs(by))
        # Armijo backtracking on ||G||_(V^-1), staying above the truncation level
        merit0 = math.sqrt(float(np.sum(G * G / V)))
        alpha = 1.0
        while alpha > 1e-6:
            ut = u + alpha * dphi
            if np.min(ut) > op.eps_trunc:
                Gt = op.residual(ut) - (lam + alpha * dlam) * bh
                if math.sqrt(float(np.sum(Gt * Gt / V))) <= (1.0 - 1e-4 * alpha) * merit0:
                    break
            alpha *= 0.5
        phi = phi + alpha * dphi
        lam = lam + alpha * dlam
    else:
        raise RuntimeError(f"bordered Newton did not converge at t = {t:.6g}; "
                           f"relative residuals {', '.join(f'{h:.2e}' for h in hist[-6:])}")
    u = base + phi
    lam_true = lam / bn
    h1 = math.sqrt(max(op.inner_h(phi, phi), 0.0))
    return BorderedPoint(t, phi, lam_true, _scaled_lambda(op, lam_true, Z, u), h1, rnorm, it, cond)


def projected_correction(op: DiscretizedOperator, bub: BubbleOnGrid, t_grid, refine: bool = True,
                         tol: float = 1e-12) -> ReductionResult:
    """lambda0(t) on t_grid, continuing phi along the grid; root bracketed and refined by brentq."""
    ts = np.asarray(sorted(t_grid), dtype=float)
    # every t starts from phi = 0: a phi carried over from another scale is a poor seed
    pts = [bordered_solve(op, bub, float(t), None, tol) for t in ts]
    lam = np.array([p.lambda0 for p in pts])
    zero, bracket = None, None
    for i in range(ts.size - 1):
        if lam[i] == 0.0:
            zero, bracket = float(ts[i]), (float(ts[i]), float(ts[i]))
            break
        if lam[i] * lam[i + 1] < 0:
            bracket = (float(ts[i]), float(ts[i + 1]))
            if refine:
                def g(t):
                    return bordered_solve(op, bub, t, None, tol).lambda0

                zero = optimize.brentq(g, *bracket, xtol=1e-12 * bracket[1], rtol=1e-13)
            else:
                l0, l1 = lam[i], lam[i + 1]
                zero = float(ts[i] - l0 * (ts[i + 1] - ts[i]) / (l1 - l0))
            break
    phin = np.array([p.phi_h1 for p in pts])
    rn = np.array([p.resid_norm for p in pts])
    return ReductionResult(ts, phin, lam, np.array([p.lambda0_scaled for p in pts]), rn, zero,
                           bracket, float(np.max(phin / rn)), pts)


def solution_lambda0(op: DiscretizedOperator, bub: BubbleOnGrid, u, t_guess: float) -> tuple[float, float]:
    """(t, scaled lambda0) for a solution u written as 1 + W_t + phi with phi _|_h Z0(t).

    t is fixed by the orthogonality condition; lambda0 is the component of the
    residual F(u) along (A + V h) Z0(t).
    """
    vals = np.asarray(u.values if isinstance(u, RadialField) else u, dtype=float)

    def ortho(t):
        return op.inner_h(vals - 1.0 - bub.W(t), bub.Z0(t)) / math.sqrt(op.inner_h(bub.Z0(t), bub.Z0(t)))

    lo, hi = t_guess, t_guess
    flo = fhi = ortho(t_guess)
    for _ in range(60):
        if flo * fhi <= 0 and lo != hi:
            break
        lo, hi = lo / 1.25, hi * 1.25
        flo, fhi = ortho(lo), ortho(hi)
    if flo * fhi > 0:
        raise RuntimeError("no scale t makes the remainder orthogonal to Z0")
    t = optimize.brentq(ortho, lo, hi, xtol=1e-14 * hi, rtol=1e-13)
    Z = bub.Z0(t)
    b = op.h_operator_apply(Z)
    lam = float(b @ op.residual(vals)) / float(b @ b)
    return t, _scaled_lambda(op, lam, Z, vals)


def reduction_seed(op: DiscretizedOperator, bub: BubbleOnGrid, t_seed: float, t_span: float = 0.3,
                   t_points: int = 7):
    """(t*, 1 + W(t*) + phi(t*)) at the zero of lambda0 near t_seed; (None, 1 + W(t_seed)) if none.

    Newton from the bare ansatz creeps along the dilation mode, whose curvature
    is of the size of the perturbation; this seed already sits at the right scale.
    """
    tg = t_seed * np.linspace(1.0 - t_span, 1.0 + t_span, t_points)
    red = projected_correction(op, bub, tg)
    if red.zero_crossing is None:
        return None, 1.0 + bub.W(t_seed)
    t0 = red.zero_crossing
    return t0, 1.0 + bub.W(t0) + bordered_solve(op, bub, t0).phi


# ------------------------------------------------------------- family

@dataclass
class FamilyMember:
    eps: float
    mu: float
    delta: float
    t_zero: float | None
    result: SolveResult
    lambda0_scaled: float | None
    converged: bool


@dataclass
class FamilyReport:
    members: list
    distances: np.ndarray  # pairwise relative L^2
    sup_ratios: list
    all_distinct: bool
    sup_increasing: bool
    min_above_trunc: bool
    theta: np.ndarray


def family_grid(deltas, nodes: int = 20000, pole_ratio: float = 1e-3) -> np.ndarray:
    return bubble_grid(min(deltas), nodes, pole_ratio)


def construct_member(n: int, theta, eps: float, mu: float, t_seed: float, r: float = 1.0,
                     M: float = 20.0, eps_trunc: float = 0.1, tol: float = 1e-12,
                     t_span: float = 0.3, t_points: int = 7, a0: float = 7.0) -> FamilyMember:
    """Peaked solution for one (eps, mu): zero of lambda0 near t_seed, then Newton polish."""
    prob = problem_coefficients(n, theta, eps, mu, M, eps_trunc, a0)
    scale = eps if n == 6 else mu
    op = assemble_operator(prob, delta=scale * t_seed)
    bub = BubbleOnGrid(n, op.theta, scale, r)
    t0, seed = reduction_seed(op, bub, t_seed, t_span, t_points)
    res = newton_solve(op, seed, tol)
    lam = None
    if res.converged:
        _, lam = solution_lambda0(op, bub, res.u, t0 if t0 is not None else t_seed)
        res.lambda0 = lam
    return FamilyMember(eps, mu, scale * (t0 if t0 is not None else t_seed), t0, res, lam,
                        res.converged)


def family_construct(n: int, eps_list, t_seed: float, mu_list=None, r: float = 1.0, M: float = 20.0,
                     eps_trunc: float = 0.1, nodes: int = 20000, tol: float = 1e-12, r_list=None,
                     a0: float = 7.0) -> FamilyReport:
    """One peaked solution per eps, all on one grid resolving the smallest bubble."""
    eps = [float(e) for e in eps_list]
    if mu_list is None:
        ex = 0.5 if n == 6 else 2.0 / (n - 2)
        mu_list = [e**ex for e in eps]
    scales = [e if n == 6 else m for e, m in zip(eps, mu_list)]
    theta = family_grid([s * t_seed for s in scales], nodes)
    r_list = [r] * len(eps) if r_list is None else list(r_list)
    members = [construct_member(n, theta, e, m, t_seed, rr, M, eps_trunc, tol, a0=a0)
               for e, m, rr in zip(eps, mu_list, r_list)]
    k = len(members)
    fv = fv_grid(theta, n)
    V = fv.volumes
    D = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            a, b = members[i].result.u.values, members[j].result.u.values
            num = math.sqrt(float(np.sum(V * (a - b) ** 2)))
            den = max(math.sqrt(float(np.sum(V * a * a))), math.sqrt(float(np.sum(V * b * b))))
            D[i, j] = D[j, i] = num / den
    sups = [m.result.u_max for m in members]
    ratios = [sups[i + 1] / sups[i] for i in range(k - 1)]
    ok = [m.converged for m in members]
    return FamilyReport(
        members, D, ratios,
        all_distinct=bool(all(ok) and all(D[i, j] > 1e-2 for i in range(k) for j in range(i + 1, k))),
        sup_increasing=bool(all(ok) and all(q >= 2.0 for q in ratios)),
        min_above_trunc=bool(all(ok) and all(m.result.u_min >= eps_trunc for m in members)),
        theta=theta)

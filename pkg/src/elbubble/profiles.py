"""Bump, coefficients, bubble ansatz and kernel elements in stereographic charts."""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import expit

from .model import ModelConfig, schedule_at, dimension_constants, base_data


# ---------------------------------------------------------------- cutoffs

def smoothstep(x, order: int = 0):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, exp(-1/x) gluing in between.

    Returns the value, or (value, d/dx) for order=1, or (value, d, d2) for order=2.
    """
    x = np.asarray(x, dtype=float)
    s = np.where(x >= 1.0, 1.0, 0.0)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    if np.any(m):
        xm = x[m]
        g = 1.0 / xm - 1.0 / (1.0 - xm)
        sm = expit(-g)
        q = sm * expit(g)  # s(1-s) without cancellation
        gp = -1.0 / xm**2 - 1.0 / (1.0 - xm) ** 2
        gpp = 2.0 / xm**3 - 2.0 / (1.0 - xm) ** 3
        s1 = -q * gp
        s[m] = sm
        d1[m] = s1
        d2[m] = -s1 * (1.0 - 2.0 * sm) * gp - q * gpp
    if order == 0:
        return s
    if order == 1:
        return s, d1
    return s, d1, d2


@dataclass(frozen=True)
class BumpSpec:
    M: float = 20.0
    transition: str = "exp-smoothstep"

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("plateau half-width M must be positive")


def beta(spec: BumpSpec, s, order: int = 0):
    """beta = 1 on [-M, M], 0 outside [-M-1, M+1]; derivatives in s."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s) - spec.M
    v, d1, d2 = smoothstep(a, 2)
    sg = np.sign(s)
    out = (1.0 - v, -d1 * sg, -d2)
    return out[0] if order == 0 else out[: order + 1]


def chi(s, order: int = 0):
    """chi = 1 on [0, 1], 0 beyond 2."""
    s = np.asarray(s, dtype=float)
    v, d1, d2 = smoothstep(np.abs(s) - 1.0, 2)
    sg = np.sign(s)
    out = (1.0 - v, -d1 * sg, -d2)
    return out[0] if order == 0 else out[: order + 1]


def cutoff_eval(spec: BumpSpec, which: str, s):
    if which == "beta":
        return beta(spec, s)
    if which == "chi":
        return chi(s)
    raise ValueError(f"unknown cutoff {which!r}")


def psi_radial(spec: BumpSpec, s, order: int = 0):
    """psi(s) = -s beta(s) as a function of s = |x|^2, with s-derivatives."""
    b, b1, b2 = beta(spec, s, 2)
    s = np.asarray(s, dtype=float)
    out = (-s * b, -b - s * b1, -2.0 * b1 - s * b2)
    return out[0] if order == 0 else out[: order + 1]


def psi_eval(spec: BumpSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    s = np.sum(x * x, axis=-1)
    return psi_radial(spec, s)


# ---------------------------------------------------------------- charts

def _rotation_from_pole(point):
    """Minimal rotation of R^{n+1} taking the north pole e_{n+1} to point."""
    b = np.asarray(point, dtype=float)
    m = b.size
    a = np.zeros(m)
    a[-1] = 1.0
    c = float(a @ b)
    if c <= -1.0 + 1e-14:
        raise ValueError("chart center at the south pole is not supported")
    ab = a + b
    R = np.eye(m) - np.outer(ab, ab) / (1.0 + c) + 2.0 * np.outer(b, a)
    return R


@dataclass(frozen=True)
class Chart:
    """Stereographic chart of S^n from the antipode of center.

    In these coordinates the round metric is (1 + |z|^2/4)^-2 |dz|^2, so the
    flat metric is conformal with factor lam(z) = (1 + |z|^2/4)^((n-2)/2) and
    exp of the flat metric at the center is linear.
    """
    center: np.ndarray
    frame: np.ndarray  # n x (n+1), rows are an orthonormal basis of the tangent space

    @property
    def n(self) -> int:
        return self.center.size - 1

    def to_chart(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * (x @ self.frame.T) / (1.0 + x @ self.center)[..., None]

    def from_chart(self, z):
        z = np.asarray(z, dtype=float)
        q = np.sum(z * z, axis=-1)[..., None] / 4.0
        return ((1.0 - q) * self.center + z @ self.frame) / (1.0 + q)

    def exp(self, v):
        return self.from_chart(v)

    def lam(self, z):
        z = np.asarray(z, dtype=float)
        q = np.sum(z * z, axis=-1) / 4.0
        return (1.0 + q) ** ((self.n - 2) / 2.0)

    def metric_factor(self, z):
        """Round metric in the chart is metric_factor * identity."""
        z = np.asarray(z, dtype=float)
        return (1.0 + np.sum(z * z, axis=-1) / 4.0) ** -2


def chart_at(point) -> Chart:
    p = np.asarray(point, dtype=float)
    p = p / np.linalg.norm(p)
    R = _rotation_from_pole(p)
    return Chart(center=p, frame=R[:, :-1].T.copy())


def north_pole(n: int) -> np.ndarray:
    e = np.zeros(n + 1)
    e[-1] = 1.0
    return e


def chart_jacobian(chart: Chart, z, h: float = 1e-6):
    """Central-difference Jacobian of from_chart at z (n+1 x n)."""
    z = np.asarray(z, dtype=float)
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        cols.append((chart.from_chart(z + e) - chart.from_chart(z - e)) / (2 * h))
    return np.array(cols).T


def geodesic_distance(x, y):
    """Great-circle distance between unit vectors, accurate at both ends."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.linalg.norm(x - y, axis=-1)
    b = np.linalg.norm(x + y, axis=-1)
    return 2.0 * np.arctan2(a, b)


# ---------------------------------------------------------------- bump field

def _base_chart(n):
    return chart_at(north_pole(n))


def bump_center(cfg: ModelConfig, k: int):
    """Point xi_k on the sphere and its chart."""
    ent = schedule_at(cfg.schedule, k)
    xi = _base_chart(cfg.n).from_chart(ent.xi_chart)
    return ent, chart_at(xi)


def bump_geodesic_radius(mu: float, M: float) -> float:
    return 2.0 * math.atan(mu * math.sqrt(M + 1.0) / 2.0)


def check_disjoint(cfg: ModelConfig, k_range) -> None:
    ks = list(k_range)
    cen = []
    for k in ks:
        ent, ch = bump_center(cfg, k)
        cen.append((k, ch.center, bump_geodesic_radius(ent.mu, cfg.M)))
    for i in range(len(cen)):
        for j in range(i + 1, len(cen)):
            d = float(geodesic_distance(cen[i][1], cen[j][1]))
            if d <= cen[i][2] + cen[j][2]:
                raise ValueError(f"bump supports of k={cen[i][0]} and k={cen[j][0]} overlap")


def bump_radial(theta, eps: float, mu: float, spec: BumpSpec):
    """Single bump eps*Psi(z/mu) as a function of geodesic distance theta to its center.

    Returns (Psi0, dPsi0/dtheta).
    """
    theta = np.asarray(theta, dtype=float)
    z = 2.0 * np.tan(np.minimum(theta, math.pi - 1e-300) / 2.0)
    far = theta >= bump_geodesic_radius(mu, spec.M) * (1 + 1e-12)
    z = np.where(far, 0.0, z)
    s = (z / mu) ** 2
    p0, p1 = psi_radial(spec, s, 1)
    val = eps * p0
    dval = eps * p1 * 2.0 * z / mu**2 * (1.0 + z * z / 4.0)
    return np.where(far, 0.0, val), np.where(far, 0.0, dval)


def psi0_eval(cfg: ModelConfig, x, k_range) -> np.ndarray:
    """Sum of bumps over the window; supports are checked disjoint first."""
    ks = list(k_range)
    check_disjoint(cfg, ks)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    spec = BumpSpec(cfg.M)
    out = np.zeros(x.shape[0])
    for k in ks:
        ent, ch = bump_center(cfg, k)
        th = geodesic_distance(x, ch.center)
        out += bump_radial(th, ent.eps, ent.mu, spec)[0]
    return out


def coefficients_from_bump(n: int, psi0, dpsi0_sq):
    """(h, f, pi^2) from Psi0 and |grad Psi0|^2_g."""
    c = dimension_constants(n).c_n
    base = base_data(n)
    h = base.cn_sg - c * dpsi0_sq
    f = 1.0 + psi0
    pi_sq = base.pi0_sq - c * dpsi0_sq - psi0
    return h, f, pi_sq


def coefficients_at(cfg: ModelConfig, x, k_range, check: bool = True):
    ks = list(k_range)
    check_disjoint(cfg, ks)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    spec = BumpSpec(cfg.M)
    psi0 = np.zeros(x.shape[0])
    g2 = np.zeros(x.shape[0])
    for k in ks:
        ent, ch = bump_center(cfg, k)
        th = geodesic_distance(x, ch.center)
        v, dv = bump_radial(th, ent.eps, ent.mu, spec)
        psi0 += v
        g2 += dv * dv
    h, f, pi_sq = coefficients_from_bump(cfg.n, psi0, g2)
    if check and (np.any(pi_sq <= 0) or np.any(f <= 0)):
        raise ValueError("perturbation too large: pi^2 or f not positive")
    return h, f, pi_sq


# ---------------------------------------------------------------- bubble

@dataclass(frozen=True)
class BubbleParams:
    n: int
    t: float
    p: np.ndarray
    eps: float
    mu: float
    r: float
    f_center: float
    y: np.ndarray | None = None
    k: int | None = None

    @property
    def delta(self) -> float:
        # n = 6 scales the bubble with eps, n >= 7 with mu
        return (self.eps if self.n == 6 else self.mu) * self.t

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        if np.linalg.norm(self.p) > 1.0 + 1e-12:
            raise ValueError("|p| must not exceed 1")


def bubble_params(cfg: ModelConfig, k: int, t: float, p=None, spec: BumpSpec | None = None) -> BubbleParams:
    spec = spec or BumpSpec(cfg.M)
    p = np.zeros(cfg.n) if p is None else np.asarray(p, dtype=float)
    ent, ch = bump_center(cfg, k)
    y = ch.from_chart(ent.mu * p)
    # the chart position of y is exactly mu p, so f(y) = 1 + eps Psi(p)
    f_center = 1.0 + ent.eps * float(psi_eval(spec, p)) if cfg.n > 6 else 1.0
    return BubbleParams(cfg.n, float(t), p, ent.eps, ent.mu, ent.r, f_center, y, k)


def free_bubble(n: int, eps: float, t: float, p=None, mu: float | None = None, r: float = 1.0,
                M: float = 20.0) -> BubbleParams:
    """Bubble with the bump centered at the chart origin, outside any schedule."""
    p = np.zeros(n) if p is None else np.asarray(p, dtype=float)
    if mu is None:
        mu = eps ** (2.0 / (n - 2)) if n > 6 else eps ** 0.5
    # for n = 6 the perturbation sits in h and a, the focusing coefficient stays 1
    f_center = 1.0 + eps * float(psi_eval(BumpSpec(M), p)) if n > 6 else 1.0
    return BubbleParams(n, float(t), p, float(eps), float(mu), float(r), f_center)


def bubble_radial(d, n: int, delta: float, fy: float, r: float, order: int = 0,
                  conformal: bool = True):
    """W as a function of the flat chart distance d, with d-derivatives up to order 2.

    conformal=False drops the factor lam, leaving the flat profile chi U.
    """
    d = np.asarray(d, dtype=float)
    m = (n - 2) / 2.0
    a = fy / (n * (n - 2))
    q = 1.0 + d * d / 4.0
    lam = q**m if conformal else np.ones_like(d)
    den = delta * delta + a * d * d
    U = delta**m * den ** (-m)
    if np.isscalar(r) and math.isinf(r):
        c0, c1, c2 = np.ones_like(d), np.zeros_like(d), np.zeros_like(d)
    else:
        c0, c1, c2 = chi(d / r, 2)
        c1 = c1 / r
        c2 = c2 / r**2
    W = lam * c0 * U
    if order == 0:
        return W
    lam1 = m * q ** (m - 1) * d / 2.0 if conformal else np.zeros_like(d)
    U1 = -2.0 * a * m * delta**m * d * den ** (-m - 1)
    W1 = lam1 * c0 * U + lam * c1 * U + lam * c0 * U1
    if order == 1:
        return W, W1
    lam2 = (m * (m - 1) * q ** (m - 2) * d * d / 4.0 + m * q ** (m - 1) / 2.0
            if conformal else np.zeros_like(d))
    U2 = -2.0 * a * m * delta**m * (den ** (-m - 1) - 2.0 * (m + 1) * a * d * d * den ** (-m - 2))
    W2 = (lam2 * c0 * U + lam * c2 * U + lam * c0 * U2
          + 2.0 * (lam1 * c1 * U + lam1 * c0 * U1 + lam * c1 * U1))
    return W, W1, W2


def bubble_theta(theta, n: int, delta: float, fy: float, r: float, order: int = 0):
    """W and theta-derivatives as a function of geodesic distance theta to the center.

    theta = pi is the antipode, where W vanishes for finite r and has a finite
    limit without cutoff.
    """
    theta = np.asarray(theta, dtype=float)
    anti = theta >= math.pi
    th = np.where(anti, math.pi / 2, theta)
    d = 2.0 * np.tan(th / 2.0)
    res = bubble_radial(d, n, delta, fy, r, order)
    if order == 0:
        W = res
        out = (W,)
    else:
        dd = 1.0 + d * d / 4.0
        if order == 1:
            W, W1 = res
            out = (W, W1 * dd)
        else:
            W, W1, W2 = res
            out = (W, W1 * dd, W2 * dd * dd + W1 * (d / 2.0) * dd)
    if np.any(anti):
        lim = 0.0 if math.isfinite(r) else (delta * n * (n - 2) / (4.0 * fy)) ** ((n - 2) / 2.0)
        out = tuple(np.where(anti, lim if i == 0 else 0.0, o) for i, o in enumerate(out))
    return out[0] if order == 0 else out


def bubble_eval(bp: BubbleParams, x, with_gradient: bool = False, center=None):
    """Evaluate W at points x on the sphere (rows), centered at bp.y (or center)."""
    y = bp.y if center is None else center
    if y is None:
        y = north_pole(bp.n)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ch = chart_at(y)
    z = ch.to_chart(x)
    d = np.linalg.norm(z, axis=-1)
    if not with_gradient:
        return bubble_radial(d, bp.n, bp.delta, bp.f_center, bp.r)
    W, W1 = bubble_radial(d, bp.n, bp.delta, bp.f_center, bp.r, 1)
    th = geodesic_distance(x, y)
    Wth = W1 * (1.0 + d * d / 4.0)
    sth = np.sin(th)
    with np.errstate(invalid="ignore", divide="ignore"):
        e = (np.cos(th)[:, None] * x - y) / sth[:, None]
    e = np.where(sth[:, None] > 0, e, 0.0)
    return W, Wth[:, None] * e


def dW_dt(bp: BubbleParams, d):
    """Exact t-derivative of W at flat distance d, from the closed form of Z0."""
    return (bp.n - 2) / (2.0 * bp.t) * kernel_radial(d, bp.n, bp.delta, bp.f_center, bp.r, 0)


def kernel_radial(d, n: int, delta: float, fy: float, r: float, i: int = 0, zi=None):
    """Z_0 (i = 0) or Z_i with zi the i-th chart coordinate."""
    d = np.asarray(d, dtype=float)
    a = fy / (n * (n - 2))
    lam = (1.0 + d * d / 4.0) ** ((n - 2) / 2.0)
    c0 = chi(d / r) if math.isfinite(r) else 1.0
    q = a * d * d
    den = delta * delta + q
    if i == 0:
        return lam * c0 * delta ** ((n - 2) / 2.0) * den ** (-n / 2.0) * (q - delta * delta)
    if zi is None:
        raise ValueError("chart coordinate needed for i > 0")
    return lam * c0 * delta ** (n / 2.0) * den ** (-n / 2.0) * fy * np.asarray(zi, dtype=float)


def kernel_eval(bp: BubbleParams, i: int, x, center=None):
    if not 0 <= i <= bp.n:
        raise ValueError(f"kernel index {i} outside 0..{bp.n}")
    y = bp.y if center is None else center
    if y is None:
        y = north_pole(bp.n)
    ch = chart_at(y)
    z = ch.to_chart(np.atleast_2d(np.asarray(x, dtype=float)))
    d = np.linalg.norm(z, axis=-1)
    zi = z[:, i - 1] if i > 0 else None
    return kernel_radial(d, bp.n, bp.delta, bp.f_center, bp.r, i, zi)


def model_kernel(i: int, x, n: int, fy: float = 1.0):
    """Euclidean kernel elements V_0, V_i of the unit-scale bubble."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a = fy / (n * (n - 2))
    s = a * np.sum(x * x, axis=-1)
    if i == 0:
        return (s - 1.0) * (1.0 + s) ** (-n / 2.0)
    if not 1 <= i <= n:
        raise ValueError(f"kernel index {i} outside 0..{n}")
    return fy * x[:, i - 1] * (1.0 + s) ** (-n / 2.0)


def model_kernel_grad_sq(n: int, fy: float = 1.0):
    """||grad V_0||^2 and ||grad V_i||^2 on R^n by radial quadrature."""
    from .quadrature import integrate_halfline
    a = fy / (n * (n - 2))
    om = dimension_constants(n).omega_nm1

    def g0(rr):
        s = a * rr * rr
        # d/dr of (s - 1)(1 + s)^(-n/2)
        dv = 2 * a * rr * ((1 + s) ** (-n / 2) - (n / 2) * (s - 1) * (1 + s) ** (-n / 2 - 1))
        return om * rr ** (n - 1) * dv * dv

    def gi(rr):
        # V_i = fy x_i phi(r): |grad|^2 averaged over angles = fy^2 (phi^2 + r^2 phi'^2 / n)
        s = a * rr * rr
        ph = (1 + s) ** (-n / 2)
        dph = -n * a * rr * (1 + s) ** (-n / 2 - 1)
        return om * rr ** (n - 1) * fy**2 * (ph * ph + rr * rr * dph * dph / n + 2 * rr * ph * dph / n)

    scale = 1.0 / math.sqrt(a)
    v0 = integrate_halfline(g0, scale)
    vi = integrate_halfline(gi, scale)
    return v0, vi

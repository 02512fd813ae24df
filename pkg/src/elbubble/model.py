"""Dimensional constants, base solution data and perturbation schedules."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np
from scipy import special


def sphere_volume(m: int) -> float:
    """Volume of the unit m-sphere S^m in R^{m+1}."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / special.gamma((m + 1) / 2.0)


@dataclass(frozen=True)
class DimensionConstants:
    n: int
    two_star_q: Fraction
    c_n_q: Fraction
    omega_n: float
    omega_nm1: float
    K_n: float
    alpha_n: float

    @property
    def two_star(self) -> float:
        return float(self.two_star_q)

    @property
    def c_n(self) -> float:
        return float(self.c_n_q)


def dimension_constants(n: int) -> DimensionConstants:
    n = int(n)
    if n < 6:
        raise ValueError(f"dimension n={n} not supported (need n >= 6)")
    two_star = Fraction(2 * n, n - 2)
    c_n = Fraction(n - 2, 4 * (n - 1))
    omega_n = sphere_volume(n)
    # sharp Sobolev constant of R^n
    K_n = math.sqrt(4.0 / (n * (n - 2) * omega_n ** (2.0 / n)))
    alpha_n = (n - 2) ** (n / 2.0) * n ** ((n - 2) / 2.0)
    return DimensionConstants(n, two_star, c_n, omega_n, sphere_volume(n - 1), K_n, alpha_n)


@dataclass(frozen=True)
class BaseData:
    """Base solution u0 = 1 on the unit sphere, for which pi0^2 = c_n S - 1."""
    n: int
    cn_sg: float
    pi0_sq: float
    eps_trunc: float = 0.1
    u0: float = 1.0

    def base_residual(self) -> float:
        return self.cn_sg - 1.0 - self.pi0_sq


def base_data(n: int, eps_trunc: float = 0.1) -> BaseData:
    if eps_trunc <= 0:
        raise ValueError("eps_trunc must be positive")
    cn_sg = Fraction(n * (n - 2), 4)
    base = BaseData(n, float(cn_sg), float(cn_sg - 1), eps_trunc)
    if base.cn_sg <= 2.0:
        raise ValueError("c_n S_g must exceed 2")
    return base


def eta_truncate(eps: float, u):
    """Floor u at eps."""
    if not eps > 0:
        raise ValueError("truncation level must be positive")
    out = np.maximum(u, eps)
    return float(out) if np.ndim(out) == 0 else out


def mu_exponent(n: int, lcf: bool = True) -> float:
    """Exponent a in mu = eps**a."""
    if n == 6:
        return 0.5
    if lcf or n <= 9:
        return 2.0 / (n - 2)
    return 0.25


@dataclass(frozen=True)
class ScheduleEntry:
    k: int
    eps: float
    mu: float
    r: float
    xi_chart: np.ndarray  # chart position of the bump center around the north pole
    delta: float | None = None  # only the n = 6 branch fixes delta separately


@dataclass(frozen=True)
class Schedule:
    """Perturbation schedule.

    mode 'power' uses eps_k = k^(-4(n-2)) (k^-12 for n = 6), r_k = k^(-7/3) and
    mu_k from the geometry branch.  mode 'free' walks through an explicit eps list
    (entry k0 + j uses eps_values[j]) with a fixed r.
    """
    n: int
    k0: int = 2
    mode: str = "power"
    lcf: bool = True
    eps_values: tuple = ()
    r_free: float = 1.0
    mu_exp: float | None = None
    eps_exp: float | None = None
    r_exp: float = 7.0 / 3.0
    mu_rule: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in ("power", "free"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "free":
            e = np.asarray(self.eps_values, dtype=float)
            if e.size == 0:
                raise ValueError("free mode needs at least one eps value")
            if np.any(e <= 0) or np.any(np.diff(e) >= 0):
                raise ValueError("eps ladder must be positive and strictly decreasing")
            if self.r_free <= 0:
                raise ValueError("r must be positive")

    @property
    def mu_power(self) -> float:
        return self.mu_exp if self.mu_exp is not None else mu_exponent(self.n, self.lcf)

    @property
    def eps_power(self) -> float:
        if self.eps_exp is not None:
            return self.eps_exp
        return 12.0 if self.n == 6 else 4.0 * (self.n - 2)

    @property
    def kmax(self) -> int | None:
        return self.k0 + len(self.eps_values) - 1 if self.mode == "free" else None


def schedule_at(s: Schedule, k: int) -> ScheduleEntry:
    if k < s.k0:
        raise ValueError(f"index k={k} below k0={s.k0}")
    if s.mode == "power":
        eps = float(k) ** (-s.eps_power)
        r = float(k) ** (-s.r_exp)
    else:
        j = k - s.k0
        if j >= len(s.eps_values):
            raise ValueError(f"index k={k} beyond the eps ladder")
        eps = float(s.eps_values[j])
        r = s.r_free
    mu = s.mu_rule(eps, k) if s.mu_rule is not None else eps ** s.mu_power
    xi = np.zeros(s.n)
    xi[0] = 1.0 / k
    delta = eps if s.n == 6 else None
    return ScheduleEntry(k, eps, mu, r, xi, delta)


@dataclass
class ScheduleReport:
    passed: bool
    checks: dict

    def failures(self) -> list:
        return [name for name, (ok, _) in self.checks.items() if not ok]


def _decreasing(v, strict=True):
    d = np.diff(v)
    return bool(np.all(d < 0)) if strict else bool(np.all(d <= 0))


def validate_schedule(s: Schedule, kmax: int) -> ScheduleReport:
    """Finite-range checks of positivity, monotonicity and the ratio trends."""
    if kmax <= s.k0:
        raise ValueError("kmax must exceed k0")
    if s.mode == "free":
        kmax = min(kmax, s.kmax)
    ks = np.arange(s.k0, kmax + 1)
    ent = [schedule_at(s, int(k)) for k in ks]
    eps = np.array([e.eps for e in ent])
    mu = np.array([e.mu for e in ent])
    r = np.array([e.r for e in ent])
    checks = {}
    checks["positive"] = (bool(np.all(eps > 0) and np.all(mu > 0) and np.all(r > 0)), None)
    checks["eps_decreasing"] = (_decreasing(eps), None)
    checks["mu_decreasing"] = (_decreasing(mu), None)
    checks["r_decreasing"] = (_decreasing(r, strict=(s.mode == "power")), None)
    if s.mode == "power":
        # r_k = o(k^-2) and mu_k = o(r_k^3), tested as decreasing ratios
        rk2 = r * ks.astype(float) ** 2
        checks["r_k_times_k2"] = (_decreasing(rk2), rk2.tolist())
        if s.n != 6:
            m3 = mu / r ** 3
            checks["mu_over_r3"] = (_decreasing(m3), m3.tolist())
    if s.n == 6:
        delta = np.array([e.delta for e in ent])
        dm = delta / mu
        mr = mu / r ** 2
        checks["delta_over_mu"] = (_decreasing(dm), dm.tolist())
        checks["mu_over_r2"] = (_decreasing(mr), mr.tolist())
    ok = all(v[0] for v in checks.values())
    return ScheduleReport(ok, checks)


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to build coefficients and ansatz on the unit sphere."""
    n: int
    schedule: Schedule
    M: float = 20.0
    lcf: bool = True
    weyl_sq: float = 0.0
    eps_trunc: float = 0.1

    @property
    def consts(self) -> DimensionConstants:
        return dimension_constants(self.n)

    @property
    def base(self) -> BaseData:
        return base_data(self.n, self.eps_trunc)


def free_config(n: int, eps_values, r: float = 1.0, M: float = 20.0, mu_exp=None,
                eps_trunc: float = 0.1) -> ModelConfig:
    """Convenience constructor for an eps ladder with a single bump per rung."""
    sched = Schedule(n=n, k0=1, mode="free", eps_values=tuple(float(e) for e in eps_values),
                     r_free=r, mu_exp=mu_exp)
    return ModelConfig(n=n, schedule=sched, M=M, eps_trunc=eps_trunc)

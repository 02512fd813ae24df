"""Vertex-centred finite volumes for radial functions on S^n.

Nodes 0 = theta_0 < ... < theta_N = pi include both poles.  Cell i spans the
midpoints around theta_i and carries its exact volume, so sums of cell volumes
reproduce |S^n| to rounding.  The stiffness matrix is symmetric, has zero row
sums and needs no special pole closure: the pole faces simply have sin = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize, special

from .model import sphere_volume


def sin_power_integral(a, b, m: int):
    """int_a^b sin^m(s) ds for 0 <= a <= b <= pi, elementwise and cancellation-aware."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * special.beta((m + 1) / 2.0, 0.5)

    def F(x):
        # int_0^x sin^m for x in [0, pi/2]
        return half * special.betainc((m + 1) / 2.0, 0.5, np.sin(x) ** 2)

    hp = math.pi / 2
    out = np.empty(np.broadcast(a, b).shape)
    lo = b <= hp
    hi = a >= hp
    mid = ~(lo | hi)
    out[lo] = F(b[lo]) - F(a[lo])
    out[hi] = F(math.pi - a[hi]) - F(math.pi - b[hi])
    out[mid] = (half - F(a[mid])) + (half - F(math.pi - b[mid]))
    return out


def grading_rate(theta_min: float, nodes: int) -> float:
    """kappa for which theta(s) = pi expm1(kappa s)/expm1(kappa) has first spacing theta_min.

    Returns 0 when a uniform grid is already fine enough.
    """
    N = int(nodes)
    if theta_min >= math.pi / N:
        return 0.0

    def first(kap):
        return math.pi * math.expm1(kap / N) / math.expm1(kap) - theta_min

    return optimize.brentq(first, 1e-8, 700.0, xtol=1e-14)


def graded_grid(theta_min: float | None, nodes: int = 20000, kappa: float | None = None) -> np.ndarray:
    """theta(s) = pi (exp(k s) - 1)/(exp(k) - 1) on s = i/nodes.

    With kappa given, theta_min is ignored; doubling nodes at fixed kappa nests
    the coarse grid inside the fine one.
    """
    N = int(nodes)
    if N < 8:
        raise ValueError("need at least 8 nodes")
    kap = grading_rate(theta_min, N) if kappa is None else float(kappa)
    s = np.arange(N + 1) / N
    if kap == 0.0:
        th = math.pi * s
    else:
        th = math.pi * np.expm1(kap * s) / math.expm1(kap)
    th[0] = 0.0
    th[-1] = math.pi
    return th


def geometric_grid(theta_min: float, nodes: int = 20000) -> np.ndarray:
    """0 followed by theta_min q^i, i = 0..nodes-1, ending exactly at pi.

    Away from the pole node the grid is invariant under theta -> q theta, so a
    bubble of scale delta sees the same relative mesh for every delta; this is
    what keeps the discrete dilation mode free of spurious forces.
    """
    N = int(nodes)
    if N < 8:
        raise ValueError("need at least 8 nodes")
    if not 0 < theta_min < math.pi:
        raise ValueError("theta_min must lie in (0, pi)")
    th = np.empty(N + 1)
    th[0] = 0.0
    th[1:] = theta_min * np.exp(np.arange(N) * (math.log(math.pi / theta_min) / (N - 1)))
    th[-1] = math.pi
    return th


def refine_geometric(theta) -> np.ndarray:
    """Halve the log spacing of a geometric grid; the old nodes are kept."""
    th = np.asarray(theta, dtype=float)
    g = th[1:]
    mid = np.sqrt(g[1:] * g[:-1])
    out = np.empty(2 * g.size)
    out[0] = 0.0
    out[1::2] = g
    out[2::2] = mid
    return out


def bubble_grid(delta: float, nodes: int = 20000, pole_ratio: float = 1e-3) -> np.ndarray:
    """Geometric grid starting at pole_ratio * delta (thousands of nodes per bubble scale)."""
    return geometric_grid(delta * pole_ratio, nodes)


@dataclass(frozen=True)
class RadialField:
    theta: np.ndarray
    values: np.ndarray
    n: int
    symmetry: str = "radial"

    def __post_init__(self):
        if self.theta.shape != self.values.shape:
            raise ValueError("grid and values differ in shape")
        if np.any(np.diff(self.theta) <= 0):
            raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class FVGrid:
    theta: np.ndarray
    n: int
    volumes: np.ndarray
    off: np.ndarray  # face conductances between i and i+1 (positive)

    @property
    def size(self) -> int:
        return self.theta.size

    def stiffness_apply(self, u):
        du = np.diff(u)
        flux = self.off * du
        out = np.zeros_like(u, dtype=float)
        out[:-1] -= flux
        out[1:] += flux
        return out

    def stiffness_banded(self):
        """(diag, offdiag) of the symmetric tridiagonal stiffness matrix."""
        d = np.zeros(self.size)
        d[:-1] += self.off
        d[1:] += self.off
        return d, -self.off

    def laplacian_apply(self, u):
        return self.stiffness_apply(u) / self.volumes

    def same_grid(self, theta) -> bool:
        return theta.shape == self.theta.shape and np.array_equal(theta, self.theta)


def fv_grid(theta, n: int) -> FVGrid:
    th = np.asarray(theta, dtype=float)
    if th[0] != 0.0 or abs(th[-1] - math.pi) > 1e-15:
        raise ValueError("grid must run from 0 to pi")
    if np.any(np.diff(th) <= 0):
        raise ValueError("grid must be strictly increasing")
    om = sphere_volume(n - 1)
    mid = 0.5 * (th[1:] + th[:-1])
    edges = np.concatenate([[0.0], mid, [math.pi]])
    vol = om * sin_power_integral(edges[:-1], edges[1:], n - 1)
    off = om * np.sin(mid) ** (n - 1) / np.diff(th)
    return FVGrid(th, n, vol, off)

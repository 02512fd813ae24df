"""Vectorized adaptive Gauss-Kronrod quadrature and the whole-space integrals.

scipy.integrate.quad works one point at a time, which is too slow for the
many-scale sphere integrals here; this rule evaluates all pending panels in a
single numpy call and sums contributions with math.fsum.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .model import dimension_constants, sphere_volume

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

# full 15-point abscissae on [-1, 1] and matching weights
_X15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_g_idx = [1, 3, 5, 7]
for _i, _w in zip(_g_idx, _WG):
    _W7[_i] = _w
    _W7[14 - _i] = _w


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    intervals: int
    converged: bool


def _eval_chunked(f, x, chunk):
    flat = x.ravel()
    if flat.size <= chunk:
        return np.asarray(f(flat), dtype=float).reshape(x.shape)
    parts = [np.asarray(f(flat[i:i + chunk]), dtype=float) for i in range(0, flat.size, chunk)]
    return np.concatenate(parts).reshape(x.shape)


def gk_adaptive(f, breaks, rtol: float = 1e-12, atol: float = 0.0, max_rounds: int = 60,
                max_intervals: int = 50000, chunk: int = 300000, stall_rounds: int = 8) -> QuadResult:
    """Integrate a vectorized f over the union of [breaks[i], breaks[i+1]].

    Panels are bisected greedily until the summed |K15 - G7| estimate drops
    below max(atol, rtol*|value|).  If the estimate stops improving (an error
    floor the bisection cannot remove) the result is returned unconverged.
    """
    b = np.asarray(sorted(set(float(x) for x in breaks)))
    if b.size < 2:
        return QuadResult(0.0, 0.0, 0, True)
    lo, hi = b[:-1].copy(), b[1:].copy()
    done_val, done_err = [], []
    converged = False
    history = []
    for _ in range(max_rounds):
        c = 0.5 * (lo + hi)
        hw = 0.5 * (hi - lo)
        x = c[:, None] + hw[:, None] * _X15[None, :]
        fx = _eval_chunked(f, x, chunk)
        k = hw * (fx @ _W15)
        g = hw * (fx @ _W7)
        err = np.abs(k - g)
        if not np.all(np.isfinite(k)):
            raise FloatingPointError("non-finite integrand value")
        total = math.fsum(done_val) + math.fsum(k)
        tol = max(atol, rtol * abs(total))
        etot = math.fsum(done_err) + float(np.sum(err))
        if etot <= tol:
            done_val.extend(k.tolist())
            done_err.extend(err.tolist())
            converged = True
            break
        history.append(etot)
        if len(history) > stall_rounds and etot > 0.5 * history[-stall_rounds - 1]:
            done_val.extend(k.tolist())
            done_err.extend(err.tolist())
            break
        # bisect the worst panels until the untouched ones fit in half the budget
        order = np.argsort(err)[::-1]
        budget = 0.5 * tol - math.fsum(done_err)
        csum = np.cumsum(err[order][::-1])[::-1]  # error of panels from position i on
        keep_from = np.searchsorted(-csum, -max(budget, 0.0))
        split = np.zeros(err.size, bool)
        split[order[:max(keep_from, 1)]] = True
        # panels too small to split further are accepted as-is
        tiny = hw <= 4 * np.finfo(float).eps * np.maximum(np.abs(c), 1e-300)
        accept = ~split | tiny
        done_val.extend(k[accept].tolist())
        done_err.extend(err[accept].tolist())
        sp = split & ~tiny
        if not np.any(sp) or len(done_val) + 2 * sp.sum() > max_intervals:
            converged = False
            if np.any(sp):
                done_val.extend(k[sp].tolist())
                done_err.extend(err[sp].tolist())
            break
        l2, h2, c2 = lo[sp], hi[sp], c[sp]
        lo = np.concatenate([l2, c2])
        hi = np.concatenate([c2, h2])
    else:
        done_val.extend(k.tolist())
        done_err.extend(err.tolist())
    return QuadResult(math.fsum(done_val), math.fsum(done_err), len(done_val), converged)


def integrate(f, breaks, rtol: float = 1e-12, atol: float = 0.0) -> QuadResult:
    """Like gk_adaptive but allows breaks[-1] = inf via x = R/s on the tail."""
    br = sorted(float(x) for x in breaks)
    if math.isinf(br[-1]):
        R = br[-2]
        if R <= 0:
            raise ValueError("need a positive finite breakpoint before inf")
        head = gk_adaptive(f, br[:-1], rtol, atol)

        def tail(s):
            s = np.asarray(s)
            out = np.zeros_like(s)
            m = s > 0
            out[m] = f(R / s[m]) * R / s[m] ** 2
            return out

        tl = gk_adaptive(tail, [0.0, 0.5, 1.0], rtol, max(atol, rtol * abs(head.value)))
        return QuadResult(head.value + tl.value, head.error + tl.error,
                          head.intervals + tl.intervals, head.converged and tl.converged)
    return gk_adaptive(f, br, rtol, atol)


def integrate_halfline(g, scale: float, rtol: float = 1e-13) -> float:
    """Integral of g over [0, inf) with panels graded around the length scale."""
    br = [0.0] + [scale * 2.0**j for j in range(-3, 6)] + [math.inf]
    return integrate(g, br, rtol).value


def geometric_breaks(lo: float, hi: float, per_octave: int = 1, extra=()):
    """0, then dyadic points from lo to hi, plus extra points inside (0, hi]."""
    pts = [0.0]
    if lo < hi:
        m = int(math.ceil(math.log2(hi / lo) * per_octave))
        pts.extend(lo * 2.0 ** (np.arange(m + 1) / per_octave))
    pts.append(hi)
    pts.extend(x for x in extra if 0 < x < hi)
    return sorted(set(float(p) for p in pts if p <= hi))


# ------------------------------------------------------------- A_n oracle

def whole_space_moment_closed(n: int, f_xi0: float = 1.0) -> float:
    """A_n = int |y|^2 (1 + f|y|^2/(n(n-2)))^-n dy in closed Beta form."""
    c = f_xi0 / (n * (n - 2))
    om = dimension_constants(n).omega_nm1
    return om * c ** (-(n + 2) / 2.0) * special.beta(n / 2.0 + 1, n / 2.0 - 1) / 2.0


def whole_space_moment_quad(n: int, f_xi0: float = 1.0, rtol: float = 1e-13) -> float:
    """Same integral by adaptive radial quadrature (no Beta functions)."""
    c = f_xi0 / (n * (n - 2))
    om = sphere_volume(n - 1)

    def g(r):
        return r ** (n + 1) * (1.0 + c * r * r) ** (-n)

    return om * integrate_halfline(g, 1.0 / math.sqrt(c), rtol)


def bubble_mass(n: int) -> float:
    """int over R^n of U^(2*-1) for U = (1 + |y|^2/(n(n-2)))^(1-n/2).

    Equals (n-2)^(n/2) n^((n-2)/2) omega_{n-1} by the flux identity.
    """
    c = dimension_constants(n)
    return c.alpha_n * c.omega_nm1


# ------------------------------------------------------------- 2-D rule

def gauss_panels(a: float, b: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    hw = 0.5 * np.diff(edges)
    c = 0.5 * (edges[1:] + edges[:-1])
    nodes = (c[:, None] + hw[:, None] * x[None, :]).ravel()
    weights = (hw[:, None] * w[None, :]).ravel()
    return nodes, weights


def axisym_integrate(f, breaks, n: int, rtol: float = 1e-11, phi_panels: int = 24,
                     atol: float = 0.0) -> QuadResult:
    """Integrate f(rho, phi) rho-adaptively against sin^(n-2)(phi) dphi * omega_{n-2}.

    f receives rho of shape (m, 1) and phi of shape (1, q).  The radial volume
    weight (rho^(n-1) or sin^(n-1)) is the caller's job.
    """
    ph, wph = gauss_panels(0.0, math.pi, phi_panels)
    wph = wph * np.sin(ph) ** (n - 2) * sphere_volume(n - 2)

    def F(r):
        return np.asarray(f(r[:, None], ph[None, :])) @ wph

    return gk_adaptive(F, breaks, rtol, atol, chunk=max(1000, 300000 // ph.size))

"""Dimensionless membrane Ezrin kinetics and the steady states of the reaction law.

All rate functions are vectorized over numpy arrays.  ``w`` is the local
tangential flow speed; only its magnitude enters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import brentq


@dataclass(frozen=True)
class KineticsParams:
    C1: float = 50.0
    C2: float = 0.1
    C3: float = 5.0
    alpha: float = 1.0
    zeta: float = 2.0

    def __post_init__(self):
        if not self.C1 > 0:
            raise ValueError("C1 must be > 0")
        if not self.C2 >= 0:
            raise ValueError("C2 must be >= 0")
        if not self.C3 > 0:
            raise ValueError("C3 must be > 0")
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")
        if not self.zeta > 1:
            raise ValueError("zeta must be > 1")


def desorption_rate(w, params: KineticsParams):
    """Flow-dependent prefactor ``C1 |w| + C2``."""
    return params.C1 * np.abs(w) + params.C2


def desorption(w, u, params: KineticsParams):
    u = np.asarray(u, dtype=float)
    k = desorption_rate(w, params)
    z = params.zeta
    # clip before the power so the unused branch never sees negative bases
    sat = (np.maximum(u, 1.0) ** z + z - 1.0) / z
    return k * np.where(u <= 1.0, u, sat)


def adsorption(u, v, params: KineticsParams):
    u = np.asarray(u, dtype=float)
    below = np.clip(u, 0.0, 1.0)
    # u < 0 keeps the u <= 1 formula; alpha may be non-integer so sign-preserve the power
    ua = np.where(u >= 0, below**params.alpha, -(np.abs(u) ** params.alpha))
    return np.where(u <= 1.0, params.C3 * ua * (1.0 - u) * v, 0.0)


def potential_prime(u, w, params: KineticsParams):
    """``W'(u) = d(w, u) - a(u, 1)``."""
    return desorption(w, u, params) - adsorption(u, 1.0, params)


def potential(u, w, params: KineticsParams):
    """Antiderivative of :func:`potential_prime` normalized to ``W(1) = 0``."""
    u = np.asarray(u, dtype=float)
    k = desorption_rate(w, params)
    a, z, C3 = params.alpha, params.zeta, params.C3
    ul = np.minimum(u, 1.0)
    if a == int(a):
        ua1, ua2 = ul ** (a + 1), ul ** (a + 2)
    else:
        ua1 = np.sign(ul) * np.abs(ul) ** (a + 1)
        ua2 = np.sign(ul) * np.abs(ul) ** (a + 2)
    low = 0.5 * k * (ul**2 - 1.0) - C3 * ((ua1 - 1.0) / (a + 1) - (ua2 - 1.0) / (a + 2))
    uh = np.maximum(u, 1.0)
    high = k / z * ((uh ** (z + 1) - 1.0) / (z + 1) + (z - 1.0) * (uh - 1.0))
    return np.where(u <= 1.0, low, high)


def reaction(u, w, params: KineticsParams):
    """Right-hand side of the pointwise reaction ODE, ``a(u, 1) - d(w, u)``."""
    return -potential_prime(u, w, params)


@dataclass(frozen=True)
class SteadyState:
    u: float
    stable: bool


@dataclass(frozen=True)
class PhaseReport:
    threshold: float
    w: float
    states: tuple

    @property
    def stable_roots(self) -> list:
        return [s.u for s in self.states if s.stable]

    @property
    def unstable_roots(self) -> list:
        return [s.u for s in self.states if not s.stable]


def critical_speed(params: KineticsParams) -> float:
    """Bifurcation threshold of the flow speed."""
    a = params.alpha
    if a == 1:
        return (params.C3 - params.C2) / params.C1
    return params.C3 / params.C1 * (1 - 1 / a) ** (a - 1) / a - params.C2 / params.C1


def classify_phases(w, params: KineticsParams, *, xtol: float = 1e-12) -> PhaseReport:
    w = abs(float(w))
    wbar = critical_speed(params)
    C1, C2, C3, a = params.C1, params.C2, params.C3, params.alpha
    if w >= wbar:
        return PhaseReport(wbar, w, (SteadyState(0.0, True),))
    if a == 1:
        upper = (C3 - C2 - C1 * w) / C3
        return PhaseReport(wbar, w, (SteadyState(0.0, False), SteadyState(upper, True)))

    # Nonzero roots solve g(u) = C3 u^(a-1) (1-u) - k = 0; g peaks at (a-1)/a.
    k = C1 * w + C2
    peak = (a - 1) / a

    def g(u):
        return C3 * u ** (a - 1) * (1 - u) - k

    hi = 1.0 - C2 / C3
    stable = brentq(g, peak, max(hi, peak), xtol=xtol) if g(hi) < 0 else hi
    # with no desorption at all, small positive u grows, so 0 loses stability
    states = [SteadyState(0.0, k > 0)]
    if k > 0:
        unstable = brentq(g, 0.0, peak, xtol=xtol)
        states.append(SteadyState(unstable, False))
    states.append(SteadyState(stable, True))
    return PhaseReport(wbar, w, tuple(states))


def interface_width(params: KineticsParams, epsilon: float) -> float:
    """Order-of-magnitude width of a diffuse Ezrin interface (alpha = 1 scaling)."""
    return math.sqrt(epsilon / params.C3) * (1 - params.C2 / params.C3) ** -1.5


def bifurcation_table(params: KineticsParams, speeds) -> list[dict]:
    rows = []
    for w in speeds:
        rep = classify_phases(w, params)
        rows.append({"w": float(w), "stable_roots": rep.stable_roots, "unstable_roots": rep.unstable_roots})
    return rows


def integrate_reaction_ode(u0, w, params, *, dt: float = 1e-3, t_end: float = 200.0):
    """Classical RK4 for ``du/dt = a(u,1) - d(w,u)``.

    ``u0``, ``w`` and ``params`` (a :class:`KineticsParams` or a sequence of
    them) broadcast against each other; every trajectory is integrated
    independently with fixed step ``dt``.
    """
    plist = [params] if isinstance(params, KineticsParams) else list(params)
    u0 = np.asarray(u0, dtype=float)
    w = np.asarray(w, dtype=float)
    shape = np.broadcast_shapes(u0.shape, w.shape, (len(plist),) if len(plist) > 1 else ())
    fields = {
        name: np.broadcast_to(np.array([getattr(p, name) for p in plist], dtype=float).reshape(
            (len(plist),) if len(plist) > 1 else ()), shape).ravel()
        for name in ("C1", "C2", "C3", "alpha", "zeta")
    }
    k = fields["C1"] * np.abs(np.broadcast_to(w, shape).ravel()) + fields["C2"]
    u = np.ascontiguousarray(np.broadcast_to(u0, shape).ravel())
    n = int(round(t_end / dt))
    out = _rk4_batch(u.copy(), k, fields["C3"], fields["alpha"], fields["zeta"], dt, n)
    return out.reshape(shape)


@njit(cache=True)
def _ipow(x, p):
    if p == 1.0:
        return x
    if p == 2.0:
        return x * x
    if p == 3.0:
        return x * x * x
    return x**p


@njit(cache=True)
def _rate(u, k, C3, alpha, zeta):
    if u <= 1.0:
        if u >= 0.0:
            ua = _ipow(u, alpha)
        else:
            ua = -_ipow(-u, alpha)
        return C3 * ua * (1.0 - u) - k * u
    return -k * (_ipow(u, zeta) + zeta - 1.0) / zeta


@njit(cache=True)
def _rk4_batch(u, k, C3, alpha, zeta, dt, n):
    for i in range(u.shape[0]):
        x = u[i]
        for _ in range(n):
            k1 = _rate(x, k[i], C3[i], alpha[i], zeta[i])
            k2 = _rate(x + 0.5 * dt * k1, k[i], C3[i], alpha[i], zeta[i])
            k3 = _rate(x + 0.5 * dt * k2, k[i], C3[i], alpha[i], zeta[i])
            k4 = _rate(x + dt * k3, k[i], C3[i], alpha[i], zeta[i])
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u[i] = x
    return u

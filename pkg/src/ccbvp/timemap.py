"""Time map of the model problem and derived spectral quantities.

``T_lam(alpha)`` is half the width of an arch of amplitude ``alpha`` of
``-u'' = g_lam(u)``:

    T_lam(alpha) = int_0^1 sqrt(p q alpha^(2-q) / (2 p lam (1-s^q) + 2 q alpha^(p-q) (1-s^p))) ds.

For ``lam > 0`` it is unimodal with maximiser ``alpha_lam``; for ``lam < 0``
it is defined on ``[c_lam, inf)`` and decreasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from . import _backend
from ._pykernels import GL_W, GL_X
from .errors import DomainError, NoSolution
from .params import Exponents, c_lambda

LOWER = "lower"
UPPER = "upper"

_ROOT_RTOL = 1e-15


def _k():
    return _backend.kernels


def _check(exp: Exponents, lam, alpha):
    if not (math.isfinite(lam) and math.isfinite(alpha)):
        raise DomainError("non-finite time-map query")
    if alpha <= 0.0:
        raise DomainError("amplitude must be positive")
    if lam < 0.0:
        c = c_lambda(exp, lam)
        if alpha < c * (1.0 - 1e-13):
            raise DomainError(f"alpha={alpha!r} below c_lambda={c!r}")
        return max(alpha, c)
    return alpha


def time_map(exp: Exponents, lam: float, alpha: float) -> float:
    alpha = _check(exp, lam, alpha)
    return _k().time_map(exp.p, exp.q, float(lam), float(alpha))


def time_map_many(exp: Exponents, lam, alpha) -> np.ndarray:
    lam_a, alpha_a = np.broadcast_arrays(np.asarray(lam, float), np.asarray(alpha, float))
    for lv, av in zip(lam_a.ravel(), alpha_a.ravel()):
        _check(exp, lv, av)
    return _k().time_map_many(exp.p, exp.q, lam_a, alpha_a)


def time_map_derivative(exp: Exponents, lam: float, alpha: float) -> float:
    """T'_lam(alpha), exposed for lam > 0."""
    if not lam > 0.0:
        raise DomainError("time-map derivative is exposed for lambda > 0 only")
    alpha = _check(exp, lam, alpha)
    return _k().time_map_deriv(exp.p, exp.q, float(lam), float(alpha))


def two_sided_bound(exp: Exponents, lam: float, alpha: float):
    """(m_p B, m_q B) with B = sqrt(p q alpha^(2-q) / (2 lam p + 2 q alpha^(p-q))), lam >= 0."""
    p, q = exp.p, exp.q
    B = math.sqrt(p * q * alpha ** (2 - q) / (2 * lam * p + 2 * q * alpha ** (p - q)))
    return singular_moment(p) * B, singular_moment(q) * B


# ---------------------------------------------------------------------------
# singular integrals

def _gl_composite(f, breaks):
    x = np.asarray(GL_X)
    w = np.asarray(GL_W)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        total += (b - a) * float(np.dot(w, f(a + (b - a) * x)))
    return total


@lru_cache(maxsize=None)
def singular_moment(x: float) -> float:
    """m_x = int_0^1 (1 - s^x)^(-1/2) ds for x > 0."""
    x = float(x)
    # s^x is not smooth at 0: grade the panels geometrically
    lb = [0.0] + [0.5 * 4.0 ** -i for i in range(16, -1, -1)]
    left = _gl_composite(lambda s: 1.0 / np.sqrt(1.0 - s ** x), lb)

    def right(t):
        # s = 1 - t^2
        a = -np.expm1(x * np.log1p(-t * t)) / (t * t)
        return 2.0 / np.sqrt(a)

    br = [0.0, 0.2, 0.4, 0.55, 0.65, math.sqrt(0.5)]
    return left + _gl_composite(right, br)


@lru_cache(maxsize=None)
def threshold_integral(p: float, q: float) -> float:
    """I = int_0^1 (t^q - t^p)^(-1/2) dt.

    Near 0 the substitution ``t = tau^k``, ``k = 2/(2-q)``, turns the
    ``t^(-q/2)`` singularity into a smooth integrand; near 1 ``t = 1 - u^2``.
    """
    k = 2.0 / (2.0 - q)
    tau_h = 0.5 ** (1.0 / k)

    def left(tau):
        return k / np.sqrt(1.0 - tau ** (k * (p - q)))

    def right(u):
        t = 1.0 - u * u
        a = -np.expm1((p - q) * np.log1p(-u * u)) / (u * u)
        return 2.0 * t ** (-q / 2.0) / np.sqrt(a)

    # panel breaks graded in t, mapped to tau
    lb = [0.0] + [(0.5 * 2.0 ** -i) ** (1.0 / k) for i in range(12, -1, -1)]
    br = [0.0, 0.2, 0.4, 0.55, 0.65, math.sqrt(0.5)]
    return _gl_composite(left, lb) + _gl_composite(right, br)


# ---------------------------------------------------------------------------
# constants for the maximiser and the maximal value


def alpha_bracket(exp: Exponents, lam: float):
    p, q = exp.p, exp.q
    lo = (lam * (2 - q) / (p - 2)) ** (1 / (p - q))
    hi = (lam * p * (2 - q) / (q * (p - 2))) ** (1 / (p - q))
    return lo, hi


def peak_constants(exp: Exponents):
    """Scale-free bounds ``c3 <= X <= C3`` for both ``alpha_lam / lam^(1/(p-q))``
    and ``T_lam(alpha_lam) / lam^((2-p)/(2(p-q)))``.

    Returns a dict with the individual constants and the unified pair.
    """
    p, q = exp.p, exp.q
    mp_, mq_ = singular_moment(p), singular_moment(q)
    ca = ((2 - q) / (p - 2)) ** (1 / (p - q))
    Ca = (p * (2 - q) / (q * (p - 2))) ** (1 / (p - q))
    pref = math.sqrt(q * (p - 2) / (2 * (p - q))) * (p * (2 - q) / (q * (p - 2))) ** ((2 - q) / (2 * (p - q)))
    cT = pref * mp_
    CT = pref * mq_
    return {
        "c3_alpha": ca, "C3_alpha": Ca, "c3_T": cT, "C3_T": CT,
        "c3": min(ca, cT), "C3": max(Ca, CT, 1.0),
    }


@dataclass(frozen=True)
class TimeMapProfile:
    lam: float
    alpha_star: float
    T_star: float
    bracket: tuple

    def branch_of(self, alpha):
        return LOWER if alpha <= self.alpha_star else UPPER


def alpha_star(exp: Exponents, lam: float) -> TimeMapProfile:
    """Locate the maximiser of T_lam by root-finding on T'_lam (lam > 0)."""
    if not lam > 0.0:
        raise DomainError("alpha_star needs lambda > 0")
    return _alpha_star_cached(exp.p, exp.q, float(lam))


@lru_cache(maxsize=4096)
def _alpha_star_cached(p, q, lam):
    exp = Exponents(p, q)
    lo, hi = alpha_bracket(exp, lam)
    k = _k()
    f = lambda a: k.time_map_deriv(p, q, lam, a)
    flo, fhi = f(lo), f(hi)
    while flo <= 0.0:
        lo *= 0.5
        flo = f(lo)
    while fhi >= 0.0:
        hi *= 2.0
        fhi = f(hi)
    a = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=200)
    return TimeMapProfile(lam, a, k.time_map(p, q, lam, a), (lo, hi))


def sup_time_map(exp: Exponents, lam: float) -> float:
    """sup_alpha T_lam(alpha): T(alpha_lam) for lam > 0, T(c_lam) for lam < 0, inf at 0."""
    if lam > 0:
        return alpha_star(exp, lam).T_star
    if lam == 0:
        return math.inf
    return time_map(exp, lam, c_lambda(exp, lam))


def invert_time_map(exp: Exponents, lam: float, target: float, branch: str = UPPER) -> float:
    """Solve T_lam(alpha) = target on the requested monotone branch."""
    if not (target > 0.0 and math.isfinite(target)):
        raise DomainError("target must be positive")
    if branch not in (LOWER, UPPER):
        raise DomainError(f"unknown branch {branch!r}")
    p, q = exp.p, exp.q
    k = _k()
    T = lambda a: k.time_map(p, q, lam, a) - target
    if lam > 0:
        prof = alpha_star(exp, lam)
        if prof.T_star < target:
            raise NoSolution(f"T_lambda <= {prof.T_star!r} < target {target!r}")
        if prof.T_star == target:
            return prof.alpha_star
        if branch == LOWER:
            lo = prof.alpha_star
            while T(lo) > 0.0:
                lo *= 0.25
            return optimize.brentq(T, lo, prof.alpha_star, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=200)
        hi = prof.alpha_star
        while T(hi) > 0.0:
            hi *= 4.0
        return optimize.brentq(T, prof.alpha_star, hi, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=200)
    if branch == LOWER:
        from .errors import BranchUnavailable
        raise BranchUnavailable("only the Upper branch exists for lambda <= 0")
    if lam == 0:
        # T_0(alpha) = sqrt(p/2) m_p alpha^((2-p)/2): bracket from a closed-form guess
        guess = (target / (math.sqrt(p / 2) * singular_moment(p))) ** (2 / (2 - p))
        lo, hi = 0.5 * guess, 2.0 * guess
    else:
        c = c_lambda(exp, lam)
        Tc = T(c)
        if abs(Tc) <= 1e-12 * target:
            # boundary root (threshold case)
            return c
        if Tc < 0.0:
            raise NoSolution(f"T_lambda(c_lambda) < target {target!r}")
        lo, hi = c, 2.0 * c
    while T(lo) < 0.0:
        lo *= 0.5
    while T(hi) > 0.0:
        hi *= 2.0
    return optimize.brentq(T, lo, hi, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=200)


# ---------------------------------------------------------------------------
# spectral sequences


def lambda_j_star(exp: Exponents, j: int) -> float:
    """Dead-core threshold: negative lambda at which 2 T_lam(c_lam) = 1/(j+1)."""
    if j < 0:
        raise DomainError("j >= 0 required")
    p, q = exp.p, exp.q
    I = threshold_integral(p, q)
    base = math.sqrt(2 * q) * (p / q) ** ((2 - q) / (2 * (p - q))) * I
    return -(base * (j + 1)) ** exp.scale_power


def dead_core_length(exp: Exponents, lam: float, j: int = 0, check=True) -> float:
    """l(lam) = 2 T_lam(c_lam), lam < 0.

    The closed form ``(1/(j+1)) (|lam_j*|/|lam|)^((p-2)/(2(p-q)))`` is returned;
    with ``check`` it is compared against the quadrature value.
    """
    if not lam < 0:
        raise DomainError("dead-core length needs lambda < 0")
    p, q = exp.p, exp.q
    ls = lambda_j_star(exp, j)
    closed = (1.0 / (j + 1)) * (ls / lam) ** ((p - 2) / (2 * (p - q)))
    if check:
        quad = 2.0 * time_map(exp, lam, c_lambda(exp, lam))
        if abs(quad - closed) > 1e-9 * closed:
            raise RuntimeError(f"dead-core length mismatch: {quad!r} vs {closed!r}")
    return closed


def Lambda_j(exp: Exponents, j: int) -> float:
    """Fold value: the lambda > 0 with T_lam(alpha_lam) = 1/(2j+2)."""
    if j < 0:
        raise DomainError("j >= 0 required")
    return _Lambda_cached(exp.p, exp.q, int(j))


@lru_cache(maxsize=None)
def _Lambda_cached(p, q, j):
    exp = Exponents(p, q)
    c = peak_constants(exp)
    target = 1.0 / (2 * j + 2)
    e = exp.scale_power
    lo = (c["c3_T"] / target) ** e * 0.5
    hi = (c["C3_T"] / target) ** e * 2.0
    f = lambda ll: alpha_star(exp, math.exp(ll)).T_star - target
    a, b = math.log(lo), math.log(hi)
    while f(a) < 0:
        a -= 1.0
    while f(b) > 0:
        b += 1.0
    return math.exp(optimize.brentq(f, a, b, xtol=1e-15, rtol=_ROOT_RTOL, maxiter=200))

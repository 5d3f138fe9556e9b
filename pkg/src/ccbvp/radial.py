"""Reduction of radial annulus problems to the unit interval.

For the annulus ``rho1 < |x| < rho2`` in R^N the map ``phi: [0,1] -> [rho1, rho2]``

    phi(r) = rho1^(1-r) rho2^r                                     (N = 2)
    phi(r) = (rho1^(2-N) + r (rho2^(2-N) - rho1^(2-N)))^(1/(2-N))  (N != 2)

satisfies ``phi'' = (phi')^2 (N-1)/phi``, so ``w`` solves the radial equation
``-w'' - (N-1)/s w' = f(s, w, |w'|)`` iff ``v = w o phi`` solves
``-v'' = h(r, v, |v'|)`` with ``h(r, z, xi) = phi'(r)^2 f(phi(r), z, xi/phi'(r))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import NonlinearitySpec, PinchingBounds, g_eval


@dataclass(frozen=True)
class AnnulusGeometry:
    dim_N: int
    rho1: float
    rho2: float

    def __post_init__(self):
        if int(self.dim_N) != self.dim_N or self.dim_N < 1:
            raise DomainError("dimension must be an integer >= 1")
        if not (0.0 < self.rho1 < self.rho2 and math.isfinite(self.rho2)):
            raise DomainError("need 0 < rho1 < rho2")
        object.__setattr__(self, "dim_N", int(self.dim_N))


@dataclass(frozen=True)
class TransformConstants:
    m2: float
    M2: float
    m_eff: float
    M_eff: float
    phi2_sup: float


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > 1.0) or not np.all(np.isfinite(r)):
        raise DomainError("r must lie in [0, 1]")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def phi(geom: AnnulusGeometry, r):
    r = _check_r(r)
    N, a, b = geom.dim_N, geom.rho1, geom.rho2
    if N == 2:
        return _out(a ** (1.0 - r) * b ** r)
    e = 2.0 - N
    return _out((a ** e + r * (b ** e - a ** e)) ** (1.0 / e))


def phi_prime(geom: AnnulusGeometry, r):
    r = _check_r(r)
    N, a, b = geom.dim_N, geom.rho1, geom.rho2
    f = np.asarray(phi(geom, r))
    if N == 2:
        return _out(f * math.log(b / a))
    e = 2.0 - N
    return _out((b ** e - a ** e) / e * f ** (N - 1))


def phi_second(geom: AnnulusGeometry, r):
    """phi'' = (phi')^2 (N-1)/phi."""
    d = np.asarray(phi_prime(geom, r))
    return _out(d * d * (geom.dim_N - 1) / np.asarray(phi(geom, r)))


def phi_inverse(geom: AnnulusGeometry, s):
    s = np.asarray(s, dtype=float)
    N, a, b = geom.dim_N, geom.rho1, geom.rho2
    tol = 1e-14 * b
    if np.any(s < a - tol) or np.any(s > b + tol):
        raise DomainError("radius outside [rho1, rho2]")
    s = np.clip(s, a, b)
    if N == 2:
        r = np.log(s / a) / math.log(b / a)
    else:
        e = 2.0 - N
        r = (s ** e - a ** e) / (b ** e - a ** e)
    return _out(np.clip(r, 0.0, 1.0))


def transform_constants(geom: AnnulusGeometry, m1=1.0, M1=1.0, n_grid=10001) -> TransformConstants:
    N, a, b = geom.dim_N, geom.rho1, geom.rho2
    if N == 2:
        L = math.log(b / a)
        m2, M2 = a * L, b * L
    else:
        m2 = a / (N - 2) * (1.0 - (a / b) ** (N - 2))
        M2 = b / (N - 2) * ((b / a) ** (N - 2) - 1.0)
    # no closed form for sup|phi''| is used; sample it
    phi2_sup = float(np.max(np.abs(phi_second(geom, np.linspace(0.0, 1.0, n_grid)))))
    return TransformConstants(m2, M2, m1 * m2 * m2, M1 * M2 * M2, phi2_sup)


def transform_nonlinearity(geom: AnnulusGeometry, f_spec: NonlinearitySpec,
                           m1=None, M1=None) -> NonlinearitySpec:
    """Interval nonlinearity h(r, z, xi) = phi'(r)^2 f(phi(r), z, xi/phi'(r)).

    ``f_spec`` is read as a nonlinearity over ``s in [rho1, rho2]``; its
    pinching bounds supply ``m1, M1`` and ``K1``.
    """
    m1 = f_spec.bounds.m_small if m1 is None else m1
    M1 = f_spec.bounds.M_big if M1 is None else M1
    tc = transform_constants(geom, m1, M1)
    K1 = f_spec.bounds.k_bound
    m2, M2, p2 = tc.m2, tc.M2, tc.phi2_sup

    def K(lam, s):
        return 2.0 / m2 * p2 + (s / m2 ** 2 * p2 + 1.0 / m2 + M2) * K1(lam, s / m2)

    bounds = PinchingBounds(tc.m_eff, tc.M_eff, K)
    exp = f_spec.exp

    if f_spec.is_model:
        def h(lam, r, z, xi):
            d = phi_prime(geom, r)
            return d * d * g_eval(exp, lam, z)

        def dh_dr(lam, r, z, xi):
            return 2.0 * phi_prime(geom, r) * phi_second(geom, r) * g_eval(exp, lam, z)

        def dh_dxi(lam, r, z, xi):
            return 0.0
    else:
        f = f_spec.h

        def h(lam, r, z, xi):
            d = phi_prime(geom, r)
            return d * d * f(lam, phi(geom, r), z, xi / d)

        dh_dr = dh_dxi = None
        if f_spec.dh_dr is not None and f_spec.dh_dxi is not None:
            fr, fx = f_spec.dh_dr, f_spec.dh_dxi

            def dh_dr(lam, r, z, xi):
                d, d2, s = phi_prime(geom, r), phi_second(geom, r), phi(geom, r)
                return (2.0 * d * d2 * f(lam, s, z, xi / d) + d ** 3 * fr(lam, s, z, xi / d)
                        - d2 * xi * fx(lam, s, z, xi / d))

            def dh_dxi(lam, r, z, xi):
                d = phi_prime(geom, r)
                return d * fx(lam, phi(geom, r), z, xi / d)

    weight = (geom.dim_N, geom.rho1, geom.rho2) if f_spec.is_model else None
    return NonlinearitySpec.general(exp, h, bounds, dh_dr=dh_dr, dh_dxi=dh_dxi,
                                    variational=f_spec.variational, check=False, weight=weight)


@dataclass(frozen=True)
class RadialProfile:
    s: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    residual: np.ndarray
    sup_norm: float
    sign_changes: int

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residual)))


def _sign_changes(y, tol):
    sgn = np.sign(np.where(np.abs(y) > tol, y, 0.0))
    sgn = sgn[sgn != 0]
    return int(np.count_nonzero(sgn[1:] != sgn[:-1]))


def pullback_solution(geom: AnnulusGeometry, v, f_spec: NonlinearitySpec, lam: float,
                      n_grid=2049) -> RadialProfile:
    """Radial profile w(s) = v(phi^-1(s)) and its radial-equation residual.

    ``v`` is a solution on [0, 1] with an evaluator (``v.evaluate``) and
    segment ``breakpoints``. The residual at interior grid points is

        R(s) = (w(s+h) - 2w(s) + w(s-h))/h^2
               + (1/h^2) int (h - |t|) [(N-1)/(s+t) w'(s+t) + f(s+t, w, |w'|)] dt,

    which vanishes identically for solutions; the tent integral is graded
    towards the images of the zeros of v. ``sup_norm`` includes the images
    of the arch apexes, where |v| peaks.
    """
    from .solutions import tent_rule

    a, b = geom.rho1, geom.rho2
    s = np.linspace(a, b, n_grid)
    h = (b - a) / (n_grid - 1)
    N = geom.dim_N

    def W(pts):
        r = phi_inverse(geom, np.clip(pts, a, b))
        u, du = v.evaluate(r)
        return u, du / phi_prime(geom, r)

    def F(pts, w, dw):
        if f_spec.is_model:
            f = g_eval(f_spec.exp, lam, w)
        else:
            f = np.array([f_spec(lam, sv, wv, abs(dv)) for sv, wv, dv in zip(pts, w, dw)])
        return (N - 1) / pts * dw + f

    si = s[1:-1]
    zeros = phi(geom, np.asarray(v.breakpoints, dtype=float)) if len(v.breakpoints) else []
    nodes, wts, own = tent_rule(si, h, np.atleast_1d(zeros), 2.0 / (2.0 - f_spec.exp.q))
    # one evaluation pass: shooting evaluators then share a single trajectory,
    # so the second differences do not pick up step-sequence noise
    n = n_grid
    wall, dwall = W(np.concatenate([s, si - h, si + h, nodes]))
    w, dw = wall[:n], dwall[:n]
    wm, wp = wall[n:2 * n - 2], wall[2 * n - 2:3 * n - 4]
    wn, dwn = wall[3 * n - 4:], dwall[3 * n - 4:]
    tent = np.bincount(own, weights=wts * F(nodes, wn, dwn), minlength=si.size)
    res = np.zeros(n_grid)
    res[1:-1] = (wp - 2.0 * w[1:-1] + wm) / h ** 2 + tent
    sup = float(np.max(np.abs(w)))
    apexes = getattr(v, "apexes", None)
    if apexes:
        wa, _ = W(phi(geom, np.asarray(apexes, dtype=float)))
        sup = max(sup, float(np.max(np.abs(wa))))
    return RadialProfile(s, w, dw, res, sup, _sign_changes(w, 1e-9 * max(sup, 1e-300)))

"""Problem parameters, the model nonlinearity and general nonlinearity specs.

The model nonlinearity is

    g_lam(z) = lam |z|^(q-2) z + |z|^(p-2) z,    G_lam(z) = lam |z|^q / q + |z|^p / p

with ``1 < q < 2 < p``. A general spec wraps a callable ``h(lam, r, z, xi)``
together with pinching constants ``m <= M`` such that

    m (lam |z|^q + |z|^p) <= z h(lam, r, z, xi) <= M (lam |z|^q + |z|^p).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError


@dataclass(frozen=True)
class Exponents:
    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (math.isfinite(p) and math.isfinite(q)):
            raise DomainError("exponents must be finite")
        if not (1.0 < q < 2.0 < p):
            raise DomainError(f"need 1 < q < 2 < p, got p={p}, q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def scale_power(self):
        """Exponent 2(p-q)/(p-2) of the spectral scaling in j+1."""
        return 2.0 * (self.p - self.q) / (self.p - 2.0)


@dataclass(frozen=True)
class ParamPoint:
    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise DomainError("lambda must be finite")


def _unit_k(lam, s):
    return 1.0


@dataclass(frozen=True)
class PinchingBounds:
    m_small: float = 1.0
    M_big: float = 1.0
    k_bound: Callable[[float, float], float] = _unit_k

    def __post_init__(self):
        if not (0.0 < self.m_small <= self.M_big and math.isfinite(self.M_big)):
            raise DomainError("need 0 < m <= M < inf")


@dataclass(frozen=True)
class NonlinearitySpec:
    """Model ``g_lam`` or a general ``h(lam, r, z, xi)`` with pinching bounds.

    Use :meth:`model` and :meth:`general` rather than the raw constructor.
    """

    variant: str
    exp: Exponents
    h: Optional[Callable] = None
    bounds: PinchingBounds = field(default_factory=PinchingBounds)
    dh_dr: Optional[Callable] = None
    dh_dxi: Optional[Callable] = None
    variational: bool = True
    # (N, rho1, rho2) when h = phi'(r)^2 g_lam(z) for the annulus map phi;
    # lets the integrator evaluate h without calling back into Python
    weight: Optional[tuple] = None

    @classmethod
    def model(cls, exp: Exponents) -> "NonlinearitySpec":
        return cls("model", exp, None, PinchingBounds(1.0, 1.0), None, None, True)

    @classmethod
    def general(cls, exp, h, bounds, dh_dr=None, dh_dxi=None, variational=False,
                check=True, weight=None) -> "NonlinearitySpec":
        spec = cls("general", exp, h, bounds, dh_dr, dh_dxi, bool(variational), weight)
        if check and variational and not xi_independent(spec):
            raise DomainError("variational spec depends on xi")
        return spec

    @property
    def is_model(self):
        return self.variant == "model"

    def __call__(self, lam, r, z, xi=0.0):
        if self.is_model:
            return g_eval(self.exp, lam, z)
        return self.h(lam, r, z, xi)

    def shooting_rhs(self, lam):
        """Callable ``(r, v, xi) -> h`` for the integrator, or None when the
        kernel evaluates h itself (the model, possibly weighted)."""
        if self.is_model or self.weight is not None:
            return None
        h = self.h
        return lambda r, v, xi: float(h(lam, r, v, xi))

    def as_general(self) -> "NonlinearitySpec":
        """Model spec rewrapped as a general one (m = M = 1)."""
        if not self.is_model:
            return self
        exp = self.exp
        return NonlinearitySpec.general(
            exp, lambda lam, r, z, xi: g_eval(exp, lam, z), PinchingBounds(1.0, 1.0),
            dh_dr=lambda lam, r, z, xi: 0.0, dh_dxi=lambda lam, r, z, xi: 0.0,
            variational=True)


def weight_values(weight, r):
    """phi'(r)^2 for the annulus weight ``(N, rho1, rho2)`` (vectorised)."""
    from ._pykernels import weight_coefficients
    mode, K2, a, d, pw = weight_coefficients(weight)
    r = np.asarray(r, dtype=float)
    if mode == 1:
        return K2 * np.exp(2.0 * (a + r * d))
    return K2 * np.power(a + r * d, pw)


def _check_finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite input")


def g_eval(exp: Exponents, lam, z):
    """g_lam(z); |0|^(q-2) * 0 is taken as 0 (q > 1)."""
    _check_finite(lam, z)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    out = np.sign(z) * (lam * a ** (exp.q - 1.0) + a ** (exp.p - 1.0))
    return float(out) if out.ndim == 0 else out


def G_eval(exp: Exponents, lam, z):
    _check_finite(lam, z)
    a = np.abs(np.asarray(z, dtype=float))
    out = lam * a ** exp.q / exp.q + a ** exp.p / exp.p
    return float(out) if out.ndim == 0 else out


def c_lambda(exp: Exponents, lam: float) -> float:
    """Positive root (p|lam|/q)^(1/(p-q)) of G_lam for lam <= 0."""
    _check_finite(lam)
    if lam > 0:
        raise DomainError("c_lambda needs lambda <= 0")
    return (exp.p * -lam / exp.q) ** (1.0 / (exp.p - exp.q))


def xi_independent(spec: NonlinearitySpec, lams=(-1.0, 0.0, 1.0), n=7, seed=0) -> bool:
    """Spot check that h does not depend on xi."""
    if spec.is_model:
        return True
    rng = np.random.default_rng(seed)
    for lam in lams:
        for r, z in zip(rng.uniform(0, 1, n), rng.uniform(-3, 3, n)):
            ref = spec.h(lam, r, z, 0.0)
            for xi in (0.5, 2.0, 10.0):
                val = spec.h(lam, r, z, xi)
                if abs(val - ref) > 1e-12 * (1.0 + abs(ref)):
                    return False
    return True


def pinching_spot_check(spec: NonlinearitySpec, lams, zs, rs=(0.0, 0.5, 1.0), xis=(0.0, 1.0),
                        rtol=1e-12):
    """Worst relative slack of m*P <= z h <= M*P with P = lam|z|^q + |z|^p.

    Returns ``(ok, worst)`` where ``worst`` is the most negative slack seen.
    """
    exp = spec.exp
    m, M = spec.bounds.m_small, spec.bounds.M_big
    worst = math.inf
    for lam in lams:
        for z in zs:
            P = lam * abs(z) ** exp.q + abs(z) ** exp.p
            for r in rs:
                for xi in xis:
                    zh = z * spec(lam, r, z, xi)
                    lo = m * P if P >= 0 else M * P
                    hi = M * P if P >= 0 else m * P
                    sc = 1.0 + abs(P)
                    worst = min(worst, (zh - lo) / sc, (hi - zh) / sc)
    return worst >= -rtol, worst


def k_bound_spot_check(spec: NonlinearitySpec, lams, zs, s_bound, rs=(0.0, 0.5, 1.0),
                       xis=(0.0, 1.0)):
    """Check |dh/dr|, |dh/dxi| <= K(lam, s) |h| for |z| + |xi| <= s on samples.

    Returns None (with a warning) when derivative callables are absent.
    """
    if spec.is_model:
        return True
    if spec.dh_dr is None or spec.dh_dxi is None:
        warnings.warn("derivative callables absent; K-bound check skipped", stacklevel=2)
        return None
    K = spec.bounds.k_bound
    for lam in lams:
        k = K(lam, s_bound)
        for z in zs:
            for xi in xis:
                if abs(z) + abs(xi) > s_bound:
                    continue
                for r in rs:
                    hv = abs(spec.h(lam, r, z, xi))
                    if abs(spec.dh_dr(lam, r, z, xi)) > k * hv * (1 + 1e-12) + 1e-300:
                        return False
                    if abs(spec.dh_dxi(lam, r, z, xi)) > k * hv * (1 + 1e-12) + 1e-300:
                        return False
    return True


def energy_density(spec: NonlinearitySpec, lam, r, z):
    """H_lam(r, z) = int_0^z h_lam(r, s) ds."""
    if not spec.variational:
        raise DomainError("energy undefined for xi-dependent h")
    if spec.is_model:
        return G_eval(spec.exp, lam, z)
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    rs = np.broadcast_to(np.asarray(r, dtype=float), zs.shape)
    out = np.empty(zs.shape)
    for i, (ri, zi) in enumerate(zip(rs, zs)):
        if zi == 0.0:
            out[i] = 0.0
            continue
        out[i] = integrate.quad(lambda s: spec.h(lam, ri, s, 0.0), 0.0, zi,
                                epsabs=1e-10, epsrel=1e-12, limit=200)[0]
    return float(out[0]) if np.ndim(z) == 0 else out


def energy(spec: NonlinearitySpec, lam, v) -> float:
    """J_lam(v) = 1/2 int v'^2 - int H_lam(r, v) over the sampled grid trace."""
    if not spec.variational:
        raise DomainError("energy undefined for xi-dependent h")
    x, u, du = v.x, v.u, v.du
    H = energy_density(spec, lam, x, u)
    return float(integrate.simpson(0.5 * du * du - H, x=x))

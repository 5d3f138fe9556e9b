"""A-priori estimates for j-nodal solutions and the constants they use.

All checks return a :class:`Report` with one :class:`Check` per inequality.
The slack of ``lhs <= rhs`` is ``(rhs - lhs) / max(|lhs|, |rhs|, tiny)`` and a
check passes when the slack is at least ``-rtol``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DomainError
from .params import Exponents, G_eval, PinchingBounds, g_eval
from .timemap import (alpha_star, peak_constants, singular_moment, time_map, time_map_many)

DEFAULT_RTOL = 1e-8


@dataclass(frozen=True)
class ConstantsTable:
    p: float
    q: float
    m: float
    M: float
    m_q: float
    m_p: float
    c3: float
    C3: float
    C1: float
    C2: float
    a: float
    d: float
    provenance: dict = field(default_factory=dict, compare=False)

    def s_j(self, j):
        return 1.0 / (self.a ** j * (j + 1))

    def t_j(self, j):
        return 1.0 - j * self.s_j(j)

    def lambda_ceiling(self, j):
        """Largest lam >= 0 compatible with j + 1 nodal intervals."""
        return (2.0 * self.C3 * (j + 1) / self.m) ** (2.0 * (self.p - self.q) / (self.p - 2.0))

    def as_dict(self):
        return _clean(asdict(self))


_PROVENANCE = {
    "m_q": "int_0^1 (1 - s^q)^(-1/2) ds by graded Gauss-Legendre; equals (1/q) B(1/q, 1/2)",
    "m_p": "int_0^1 (1 - s^p)^(-1/2) ds by graded Gauss-Legendre; equals (1/p) B(1/p, 1/2)",
    "c3": "min of the lower bounds for alpha_lam / lam^(1/(p-q)) (derivative sign bracket) and "
          "T_lam(alpha_lam) / lam^((2-p)/(2(p-q))) (m_p times the two-sided time-map bound)",
    "C3": "max of 1 and the matching upper bounds (bracket end; m_q in place of m_p)",
    "C1": "(m_q/m_p)^((8-2q)/(2-q)) (1 + (q/p) C3^(p-q))^(2/(2-q))",
    "C2": "(m_q/m_p)^(2p/(p-2)) (1 + (p/q) c3^(q-p))^(2/(p-2))",
    "a": "max{(M/m)^(1/q) (C1 C2)^((2-q)/(2q)), (M/m)^((p-1)/p) (C1 C2)^((p-2)/(2p))}",
    "d": "pi^(2/(p-2)) M^(-1/(p-2)) / (1 + pi^(2/(p-2)) m^(-1/(p-q)) M^((q-2)/((p-2)(p-q))))",
}


def build_constants(exp: Exponents, bounds: Optional[PinchingBounds] = None) -> ConstantsTable:
    bounds = bounds or PinchingBounds()
    p, q = exp.p, exp.q
    m, M = bounds.m_small, bounds.M_big
    mq, mp = singular_moment(q), singular_moment(p)
    pc = peak_constants(exp)
    c3, C3 = pc["c3"], pc["C3"]
    C1 = (mq / mp) ** ((8 - 2 * q) / (2 - q)) * (1 + (q / p) * C3 ** (p - q)) ** (2 / (2 - q))
    C2 = (mq / mp) ** (2 * p / (p - 2)) * (1 + (p / q) * c3 ** (q - p)) ** (2 / (p - 2))
    a = max((M / m) ** (1 / q) * (C1 * C2) ** ((2 - q) / (2 * q)),
            (M / m) ** ((p - 1) / p) * (C1 * C2) ** ((p - 2) / (2 * p)))
    k = math.pi ** (2 / (p - 2))
    d = k * M ** (-1 / (p - 2)) / (1 + k * m ** (-1 / (p - q)) * M ** ((q - 2) / ((p - 2) * (p - q))))
    prov = dict(_PROVENANCE)
    prov["peak_constants"] = {k_: v for k_, v in pc.items()}
    return ConstantsTable(p, q, m, M, mq, mp, c3, C3, C1, C2, a, d, prov)


@dataclass
class Check:
    name: str
    lhs: Optional[float]
    rhs: Optional[float]
    slack: float
    passed: bool
    assertable: bool = True
    detail: str = ""


@dataclass
class Report:
    name: str
    checks: List[Check] = field(default_factory=list)
    monitors: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.assertable)

    @property
    def min_slack(self):
        s = [c.slack for c in self.checks if c.assertable]
        return min(s) if s else math.inf

    def add(self, name, lhs, rhs, rtol=DEFAULT_RTOL, assertable=True, detail=""):
        sl = _slack(lhs, rhs)
        self.checks.append(Check(name, float(lhs), float(rhs), sl, bool(sl >= -rtol),
                                 assertable, detail))

    def as_dict(self):
        """Plain JSON-safe dict; non-finite numbers become None."""
        return _clean({
            "name": self.name,
            "passed": self.passed,
            "min_slack": self.min_slack,
            "checks": [asdict(c) for c in self.checks],
            "monitors": self.monitors,
            "counterexamples": self.counterexamples,
        })


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _slack(lhs, rhs):
    """Relative slack of lhs <= rhs."""
    den = max(abs(lhs), abs(rhs), 1e-300)
    return (rhs - lhs) / den


def _table(exp, bounds, constants):
    return constants or build_constants(exp, bounds)


def check_lemma_I(exp: Exponents, bounds: Optional[PinchingBounds], lam: float, candidate,
                  constants: Optional[ConstantsTable] = None, rtol=DEFAULT_RTOL) -> Report:
    """Lower bounds and the slope bound for lam <= 0; the D_j upper bound is monitored."""
    if lam > 0:
        raise DomainError("Lemma I concerns lambda <= 0")
    C = _table(exp, bounds, constants)
    p, q = exp.p, exp.q
    rep = Report("lemma_I")
    j = candidate.node_count
    sup = candidate.sup_norm
    la = abs(lam) ** (1.0 / (p - q))
    rep.add("global lower bound", C.d * ((j + 1) ** (2.0 / (p - 2)) + la), sup, rtol)
    rep.add("slope bound", candidate.slope_norm, C.M * g_eval(exp, abs(lam), sup), rtol)
    for i, seg in enumerate(candidate.arches):
        rep.add(f"interval {i} lower bound",
                C.d * (seg.width ** (-2.0 / (p - 2)) + la), seg.alpha, rtol)
    rep.monitors["D_j_ratio"] = sup / (1.0 + la)
    rep.monitors["j"] = j
    return rep


def check_lemma_II(exp: Exponents, bounds: Optional[PinchingBounds], lam: float, candidate,
                   constants: Optional[ConstantsTable] = None, rtol=DEFAULT_RTOL) -> Report:
    """Ceiling on lam, the time-map window, the slope bound and per-interval relations."""
    if lam < 0:
        raise DomainError("Lemma II concerns lambda >= 0")
    C = _table(exp, bounds, constants)
    rep = Report("lemma_II")
    j = candidate.node_count
    sup = candidate.sup_norm
    rm, rM = math.sqrt(C.m), math.sqrt(C.M)
    rep.add("lambda ceiling", lam, C.lambda_ceiling(j), rtol)
    T = time_map(exp, lam, sup)
    rep.add("window lower", rm * C.s_j(j) / 2.0, T, rtol)
    rep.add("window upper", T, rM * C.t_j(j) / 2.0, rtol)
    rep.add("slope bound", candidate.slope_norm, math.sqrt(2.0 * C.M * G_eval(exp, lam, sup)), rtol)
    arches = candidate.arches
    for i, seg in enumerate(arches):
        T2 = 2.0 * time_map(exp, lam, seg.alpha)
        rep.add(f"interval {i} lower", rm * seg.width, T2, rtol)
        rep.add(f"interval {i} upper", T2, rM * seg.width, rtol)
    for i in range(len(arches) - 1):
        li, ln = arches[i].width, arches[i + 1].width
        rep.add(f"length ratio {i} lower", ln / C.a, li, rtol)
        rep.add(f"length ratio {i} upper", li, C.a * ln, rtol)
    rep.monitors["j"] = j
    rep.monitors["T_sup"] = T
    return rep


REGIMES = ("below", "above", "mixed")


def sample_ratio_inputs(exp: Exponents, n=10_000, lams=(0.1, 1.0, 10.0), seed=0, spread=4.0):
    """Random (lam, beta1, beta2) per regime, beta = alpha_lam * 10^U.

    ``below``: both betas in (0, alpha_lam]; ``above``: both >= alpha_lam;
    ``mixed``: beta1 <= alpha_lam <= beta2. Exponents U are uniform on
    ``[-spread, 0]`` or ``[0, spread]``.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for reg in REGIMES:
        lam = rng.choice(np.asarray(lams, dtype=float), size=n)
        u1 = rng.uniform(0.0, spread, n)
        u2 = rng.uniform(0.0, spread, n)
        if reg == "below":
            e1, e2 = -u1, -u2
        elif reg == "above":
            e1, e2 = u1, u2
        else:
            e1, e2 = -u1, u2
        out[reg] = (lam, e1, e2)
    return out


def check_ratio_inequalities(exp: Exponents, bounds: Optional[PinchingBounds] = None,
                             samples=None, constants: Optional[ConstantsTable] = None,
                             rtol=1e-10, n=10_000, seed=0) -> Report:
    """The three G/T ratio inequalities on random samples.

    ``samples`` is the output of :func:`sample_ratio_inputs` (built with
    ``n`` and ``seed`` when omitted). Each violation is recorded with its
    inputs.
    """
    C = _table(exp, bounds, constants)
    p, q = exp.p, exp.q
    samples = samples or sample_ratio_inputs(exp, n, seed=seed)
    ea, eb = 2 * q / (2 - q), 2 * p / (p - 2)
    rep = Report("ratio_inequalities")
    for reg, (lam, e1, e2) in samples.items():
        worst = math.inf
        count = 0
        for lv in np.unique(lam):
            idx = np.nonzero(lam == lv)[0]
            prof = alpha_star(exp, float(lv))
            b1 = prof.alpha_star * 10.0 ** e1[idx]
            b2 = prof.alpha_star * 10.0 ** e2[idx]
            # the sampled endpoints of the regimes coincide with alpha_lam itself
            if reg == "below":
                b1, b2 = np.minimum(b1, prof.alpha_star), np.minimum(b2, prof.alpha_star)
            elif reg == "above":
                b1, b2 = np.maximum(b1, prof.alpha_star), np.maximum(b2, prof.alpha_star)
            T1 = time_map_many(exp, float(lv), b1)
            T2 = time_map_many(exp, float(lv), b2)
            lhs = G_eval(exp, float(lv), b1) / G_eval(exp, float(lv), b2)
            if reg == "below":
                rhs = C.C1 * (T1 / T2) ** ea
            elif reg == "above":
                rhs = C.C2 * (T2 / T1) ** eb
            else:
                Ts = prof.T_star
                rhs = C.C1 * C.C2 * np.minimum((T1 / Ts) ** ea, (T2 / Ts) ** eb)
            sl = (rhs - lhs) / np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
            bad = np.nonzero(sl < -rtol)[0]
            for k in bad[:20]:
                rep.counterexamples.append({"regime": reg, "lambda": float(lv),
                                            "beta1": float(b1[k]), "beta2": float(b2[k]),
                                            "lhs": float(lhs[k]), "rhs": float(rhs[k])})
            worst = min(worst, float(np.min(sl)))
            count += idx.size
        rep.checks.append(Check(f"regime {reg}", None, None, worst, bool(worst >= -rtol),
                                True, f"{count} samples"))
    return rep

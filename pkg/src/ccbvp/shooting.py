"""Shooting for -v'' = h_lam(r, v, |v'|), v(0) = v(1) = 0.

Trajectories start at ``v(0) = 0, v'(0) = s`` and are integrated by an
embedded Runge-Kutta 5(4) pair with dense output. Nodal solutions are found by
matching the phase angle ``theta(1)`` (continuous in ``s``, equal to ``n pi``
when ``v(1) = 0`` after ``n - 1`` interior zeros) against ``(j + 1) pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import optimize

from . import _backend
from .errors import DeadCoreRegime, DomainError, Escaped
from .green import residual_operator  # noqa: F401  (re-exported)
from .params import NonlinearitySpec
from .solutions import ArchSegment, PiecewiseSolution
from .timemap import lambda_j_star

DEFAULT_RTOL = 1e-10
DEFAULT_CEILING = 1e12
# zeros this close to r = 1 are the boundary zero: branch points converge to
# |F| <= 1e-8, which puts the last crossing up to ~1e-8 before the endpoint
END_TOL = 1e-6


@dataclass
class ShootResult:
    slope0: float
    r_end: float
    v_end: float
    w_end: float
    theta: float
    status: int
    crossings: np.ndarray
    apex_r: np.ndarray
    apex_v: np.ndarray
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    max_abs_w: float
    nsteps: int

    @property
    def sign_changes(self):
        """Zero crossings strictly inside (0, 1)."""
        c = self.crossings
        return int(np.count_nonzero((c > 0.0) & (c < 1.0 - END_TOL)))


def _atol(slope, atol):
    return 1e-11 * min(1.0, abs(slope)) if atol is None else atol


def _raw(spec, lam, slope0, grid, stop_after=-1, rtol=DEFAULT_RTOL, atol=None,
         ceiling=DEFAULT_CEILING):
    exp = spec.exp
    return _backend.kernels.shoot(exp.p, exp.q, float(lam), float(slope0), grid, int(stop_after),
                                  float(rtol), _atol(slope0, atol), float(ceiling),
                                  spec.shooting_rhs(lam), weight=spec.weight)


def shoot(spec: NonlinearitySpec, lam: float, slope0: float, grid=None, rtol=DEFAULT_RTOL,
          atol=None, ceiling=DEFAULT_CEILING, stop_after=-1) -> ShootResult:
    """Integrate the initial value problem from r = 0 with v'(0) = slope0.

    ``grid`` defaults to 1025 uniform points. Raises :class:`Escaped` when
    ``|v|`` or ``|v'|`` exceeds ``ceiling``.
    """
    if not slope0 or not math.isfinite(slope0):
        raise DomainError("slope0 must be finite and nonzero")
    x = np.linspace(0.0, 1.0, 1025) if grid is None else np.asarray(grid, dtype=float)
    out = _raw(spec, lam, slope0, x, stop_after, rtol, atol, ceiling)
    if out["status"] == 2:
        raise Escaped(out["r"])
    return ShootResult(float(slope0), out["r"], out["v"], out["w"], out["theta"], out["status"],
                       out["crossings"], out["apex_r"], out["apex_v"], x, out["grid_v"],
                       out["grid_w"], out["max_abs_w"], out["nsteps"])


def matching(spec, lam, slope0, j, rtol=DEFAULT_RTOL, ceiling=DEFAULT_CEILING):
    """min(theta(1), (j+2) pi) - (j+1) pi; zero exactly at solutions with j nodes."""
    out = _raw(spec, lam, slope0, np.empty(0), j + 1, rtol, None, ceiling)
    if out["status"] == 2:
        return math.pi
    return min(out["theta"], (j + 2) * math.pi) - (j + 1) * math.pi


@dataclass
class SearchConfig:
    n_per_sign: int = 400
    s_min: float = 1e-6
    s_max: float = 1e6
    scale: float = 1.0
    rtol: float = DEFAULT_RTOL
    polish_rtol: float = 1e-12
    ceiling: float = DEFAULT_CEILING
    n_grid: int = 1025
    dedupe_tol: float = 1e-6


def _evaluator(spec, lam, slope0, rtol):
    def ev(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        order = np.argsort(flat, kind="stable")
        out = _raw(spec, lam, slope0, flat[order], -1, rtol)
        u = np.empty(flat.shape)
        du = np.empty(flat.shape)
        u[order] = out["grid_v"]
        du[order] = out["grid_w"]
        return u.reshape(x.shape), du.reshape(x.shape)
    return ev


def solution_from_slope(spec: NonlinearitySpec, lam: float, slope0: float, rtol=1e-12,
                        n_grid=1025, branch=None) -> PiecewiseSolution:
    """Wrap the trajectory with initial slope ``slope0`` as a PiecewiseSolution.

    Arch boundaries are the interior zero crossings; the last arch closes at
    r = 1. Evaluation re-integrates the trajectory.
    """
    out = _raw(spec, lam, slope0, np.empty(0), -1, rtol)
    cr = [c for c in out["crossings"] if 0.0 < c < 1.0 - END_TOL]
    ends = [0.0] + cr + [1.0]
    ar, av = out["apex_r"], out["apex_v"]
    segs = []
    apexes = []
    sign = 1 if slope0 > 0 else -1
    for k in range(len(ends) - 1):
        a, b = ends[k], ends[k + 1]
        m = (ar > a) & (ar < b)
        if np.any(m):
            i = int(np.argmax(np.abs(av[m])))
            amp, apex = float(abs(av[m][i])), float(ar[m][i])
        else:
            amp, apex = 0.0, 0.5 * (a + b)
        segs.append(ArchSegment(a, b, amp, sign * (-1) ** k, float(lam)))
        apexes.append(apex)
    return PiecewiseSolution(spec.exp, lam, segs, "nodal", branch, n_grid,
                             evaluator=_evaluator(spec, lam, slope0, rtol),
                             meta={"v_end": out["v"], "shooting": True},
                             apexes=apexes, slope0=float(slope0))


def _check_regime(spec, lam, j):
    if spec.is_model:
        ls = lambda_j_star(spec.exp, j)
        if lam <= ls:
            raise DeadCoreRegime(
                f"lambda={lam!r} <= lambda_{j}*={ls!r}: dead-core regime, shooting is ill-posed; "
                "use solutions.build_dead_core")


def find_j_nodal(spec: NonlinearitySpec, lam: float, j: int, leading_sign: Optional[int] = None,
                 search_cfg: Optional[SearchConfig] = None) -> List[PiecewiseSolution]:
    """All solutions with exactly j interior nodes found by a slope scan.

    ``leading_sign`` restricts to one sign of v'(0); None scans both.
    Returns solutions sorted by initial slope; an empty list means no
    bracket was found on the scanned range.
    """
    if j < 0:
        raise DomainError("j >= 0 required")
    cfg = search_cfg or SearchConfig()
    _check_regime(spec, lam, j)
    signs = (-1, 1) if leading_sign is None else (int(leading_sign),)
    logs = np.linspace(math.log(cfg.s_min * cfg.scale), math.log(cfg.s_max * cfg.scale),
                       cfg.n_per_sign)
    found = []
    for sg in signs:
        def F(ls, sg=sg, rtol=cfg.rtol):
            return matching(spec, lam, sg * math.exp(ls), j, rtol, cfg.ceiling)

        vals = np.array([F(t) for t in logs])
        for i in range(len(logs)):
            f0 = vals[i]
            f1 = vals[i + 1] if i + 1 < len(logs) else f0
            if f0 == 0.0:
                root = logs[i]
            elif f0 * f1 < 0.0:
                root = optimize.brentq(lambda t: F(t, rtol=cfg.polish_rtol), logs[i], logs[i + 1],
                                       xtol=1e-15, rtol=4 * np.finfo(float).eps)
            else:
                continue
            found.append(sg * math.exp(root))
    found.sort()
    sols = []
    for s0 in found:
        sol = solution_from_slope(spec, lam, s0, rtol=cfg.polish_rtol, n_grid=cfg.n_grid)
        if sol.node_count != j:
            continue
        dup = False
        for other in sols:
            if np.max(np.abs(other.u - sol.u)) < cfg.dedupe_tol * (1.0 + sol.sup_norm):
                dup = True
                break
        if not dup:
            sols.append(sol)
    return sols

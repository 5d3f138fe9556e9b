"""Pseudo-arclength continuation of nodal solution branches.

The branch with j interior nodes is the zero set of the shooting matching
function F(lam, s) = theta(1) - (j + 1) pi, traced in the scaled unknowns
``y = (lam / lam_scale, log|s| / LOG_SCALE)``. The seed is the lam = 0 solution; the
branch is followed in both directions. Towards larger lam it folds at
Lambda_j and returns along the lower arm; towards smaller lam it runs until
the dead-core threshold lambda_j* (model problem) or the window edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import DomainError, NoSolution
from .params import G_eval, NonlinearitySpec, c_lambda, energy
from .shooting import SearchConfig, _raw, find_j_nodal, solution_from_slope
from .solutions import build_nodal
from .timemap import LOWER, UPPER, invert_time_map, lambda_j_star

REACHED_LAMBDA_MIN = "ReachedLambdaMin"
REACHED_LAMBDA_MAX = "ReachedLambdaMax"
DEAD_CORE_THRESHOLD = "DeadCoreThreshold"
STEP_FAILURE = "StepFailure"
MAX_STEPS = "MaxSteps"
_CONDITIONING = "conditioning"
LOG_SCALE = 5.0


@dataclass
class StepConfig:
    h0: float = 0.02
    h_min: float = 1e-6
    h_max: float = 0.1
    newton_max: int = 8
    f_tol: float = 1e-8
    fd_step: float = 1e-7
    easy_iters: int = 3
    grow_after: int = 3
    max_steps: int = 5000
    rtol: float = 1e-12
    lower_stop_fraction: float = 1e-3
    threshold_rel: float = 1e-6
    # model problem, lam < 0: shooting hands over to the time-map construction
    # once (|v|_inf - c_lam)/c_lam drops below cond_gap
    cond_gap: float = 1e-6
    tail_ratio: float = 0.5


@dataclass
class BranchPoint:
    lam: float
    slope0: float
    sup_norm: float
    c1_norm: float
    j: int
    arm: str
    energy: Optional[float] = None
    source: str = "shooting"
    _spec: Optional[NonlinearitySpec] = field(default=None, repr=False, compare=False)

    def solution(self, n_grid=1025):
        """Rebuild the solution: by shooting, or exactly for time-map points."""
        if self.source == "timemap":
            return build_nodal(self._spec.exp, self.lam, self.j, UPPER,
                               1 if self.slope0 >= 0 else -1, n_grid)
        return solution_from_slope(self._spec, self.lam, self.slope0, n_grid=n_grid,
                                   branch=self.arm)


@dataclass
class Branch:
    points: List[BranchPoint]
    j: int
    sign: int
    turning_point_lambda: Optional[float]
    end_reasons: Tuple[str, str]
    fold_slope0: Optional[float] = None

    @property
    def terminated_reason(self):
        """Reason the trace stopped at the far end (the lower arm for lam > 0)."""
        return self.end_reasons[1]

    def arrays(self):
        lam = np.array([p.lam for p in self.points])
        sup = np.array([p.sup_norm for p in self.points])
        c1 = np.array([p.c1_norm for p in self.points])
        return lam, sup, c1


class _Curve:
    """Matching function in scaled coordinates plus the point evaluation."""

    def __init__(self, spec, j, sign, lam_scale, rtol):
        self.spec = spec
        self.j = j
        self.sign = sign
        self.ls = lam_scale
        self.rtol = rtol

    def shot(self, y, stop=True):
        lam = y[0] * self.ls
        s = self.sign * math.exp(LOG_SCALE * y[1])
        return _raw(self.spec, lam, s, np.empty(0), self.j + 1 if stop else -1, self.rtol)

    def F(self, y):
        out = self.shot(y)
        if out["status"] == 2:
            return math.pi
        return min(out["theta"], (self.j + 2) * math.pi) - (self.j + 1) * math.pi

    def grad(self, y, f0, d):
        g = np.empty(2)
        for k in range(2):
            yy = np.array(y, dtype=float)
            hk = d * (1.0 + abs(y[k]))
            yy[k] += hk
            g[k] = (self.F(yy) - f0) / hk
        return g

    def point(self, y, arm):
        lam = y[0] * self.ls
        s = self.sign * math.exp(LOG_SCALE * y[1])
        out = self.shot(y, stop=False)
        av = out["apex_v"]
        sup = float(np.max(np.abs(av))) if av.size else 0.0
        c1 = sup + max(abs(s), float(out["max_abs_w"]))
        return BranchPoint(float(lam), float(s), sup, c1, self.j, arm, _spec=self.spec)

    def lam_at(self, ly, lam_guess, lam_guess2=None):
        """Solve F(lam, ly) = 0 for lam by the secant method (scaled lam)."""
        x0 = lam_guess / self.ls
        x1 = (lam_guess2 / self.ls) if lam_guess2 is not None else x0 * (1 + 1e-6) + 1e-8
        r = optimize.newton(lambda x: self.F((x, ly)), x0, x1=x1, tol=1e-14, maxiter=100)
        return r * self.ls

    def ly_at(self, lam, ly_a, ly_b):
        """Solve F(lam, ly) = 0 for ly inside [ly_a, ly_b] (a sign change is assumed)."""
        f = lambda t: self.F((lam / self.ls, t))
        fa, fb = f(ly_a), f(ly_b)
        if fa * fb > 0:
            return ly_a if abs(fa) < abs(fb) else ly_b
        return optimize.brentq(f, min(ly_a, ly_b), max(ly_a, ly_b), xtol=1e-12)


def _tangent(g, prev=None):
    t = np.array([-g[1], g[0]])
    n = np.linalg.norm(t)
    if not n > 0:
        return prev if prev is not None else np.array([1.0, 0.0])
    t /= n
    if prev is not None and np.dot(t, prev) < 0:
        t = -t
    return t


def _correct(curve, y_pred, t, cfg):
    """Newton on (F(y), t . (y - y_pred)) = 0. Returns (y, iterations) or (None, k)."""
    y = np.array(y_pred, dtype=float)
    for k in range(1, cfg.newton_max + 1):
        f = curve.F(y)
        if not math.isfinite(f) or abs(f) >= math.pi:
            return None, k
        g = curve.grad(y, f, cfg.fd_step)
        A = np.array([g, t])
        rhs = -np.array([f, np.dot(t, y - y_pred)])
        try:
            dy = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            return None, k
        y = y + dy
        # F is a phase angle of order one; its evaluation noise is ~1e-10, so
        # converge on F rather than on |dy| (y is ill-determined near lambda_j*)
        if abs(curve.F(y)) <= cfg.f_tol:
            return y, k
    return None, cfg.newton_max


def _refine_fold(curve, ya, yb):
    """Maximise lam along the branch between two points straddling the fold."""
    lo, hi = sorted((ya[1], yb[1]))
    cache = {}

    def neg_lam(ly):
        lam0 = cache.get("last", max(ya[0], yb[0]) * curve.ls)
        lam = curve.lam_at(ly, lam0, lam0 * (1 - 1e-7))
        cache["last"] = lam
        return -lam

    res = optimize.minimize_scalar(neg_lam, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-9})
    return -res.fun, res.x


def _walk(curve, y0, t0, cfg, lam_min, lam_max, stop_lam, arm0, detect_fold, ill=None):
    """Follow the curve from y0 along t0. Returns (points, reason, fold).

    Near lambda_j* the branch is nearly vertical in these coordinates and the
    lam-component of the tangent is noise, so folds are only looked for on the
    walk towards increasing lam.
    """
    pts = []
    y = np.array(y0, dtype=float)
    t = t0
    h = cfg.h0
    easy = 0
    fold = None
    arm = arm0
    steps = 0
    while True:
        steps += 1
        if steps > cfg.max_steps:
            return pts, MAX_STEPS, fold
        y_pred = y + h * t
        y_new, iters = _correct(curve, y_pred, t, cfg)
        if y_new is None:
            h *= 0.5
            easy = 0
            if h < cfg.h_min:
                return pts, STEP_FAILURE, fold
            continue
        f = curve.F(y_new)
        t_new = _tangent(curve.grad(y_new, f, cfg.fd_step), t)
        lam_new = y_new[0] * curve.ls
        if stop_lam is not None and lam_new < stop_lam:
            # land exactly on the threshold stop value
            ly = curve.ly_at(stop_lam, y[1], y_new[1])
            pts.append(curve.point((stop_lam / curve.ls, ly), arm))
            return pts, DEAD_CORE_THRESHOLD, fold
        if detect_fold and fold is None and t[0] > 0 and t_new[0] < 0:
            lam_f, ly_f = _refine_fold(curve, y, y_new)
            fold = (lam_f, ly_f)
            arm = LOWER
        pt = curve.point(y_new, arm)
        if ill is not None and ill(pt):
            return pts, _CONDITIONING, fold
        pts.append(pt)
        y, t = y_new, t_new
        if lam_new < lam_min:
            return pts, REACHED_LAMBDA_MIN, fold
        if lam_new > lam_max:
            return pts, REACHED_LAMBDA_MAX, fold
        if fold is not None and lam_new < cfg.lower_stop_fraction * fold[0]:
            return pts, REACHED_LAMBDA_MIN, fold
        if iters <= cfg.easy_iters:
            easy += 1
            if easy >= cfg.grow_after:
                h = min(2.0 * h, cfg.h_max)
                easy = 0
        else:
            easy = 0


def _threshold_tail(spec, j, sign, lam_from, lam_to, cfg):
    """Upper-arm points between the last shooting point and lam_to.

    Here the amplitude is within cond_gap of c_lam, a double-precision shot
    cannot resolve the boundary slope, and the arch is built from the time
    map instead (``T_lam(alpha) = 1/(2j+2)``, see solutions.build_nodal).
    """
    exp = spec.exp
    ls = lambda_j_star(exp, j)
    pts = []
    gap = lam_from - ls
    end_gap = lam_to - ls
    while True:
        gap *= cfg.tail_ratio
        lam = ls + gap if gap > end_gap else lam_to
        alpha = invert_time_map(exp, lam, 1.0 / (2 * j + 2), UPPER)
        slope = math.sqrt(max(2.0 * G_eval(exp, lam, alpha), 0.0))
        pts.append(BranchPoint(float(lam), sign * slope, alpha, alpha + slope, j, UPPER, None,
                               "timemap", spec))
        if lam == lam_to:
            return pts


def lam_scale(spec, j):
    return 10.0 * (j + 1) ** spec.exp.scale_power


def trace_branch(spec: NonlinearitySpec, j: int, sign: int = 1,
                 lambda_window: Tuple[Optional[float], Optional[float]] = (None, None),
                 step_cfg: Optional[StepConfig] = None, seed_slope: Optional[float] = None,
                 search_cfg: Optional[SearchConfig] = None) -> Branch:
    """Trace the j-node branch with v'(0) of the given sign.

    ``lambda_window = (lam_min, lam_max)``; None means: lam_min = lambda_j*
    for the model problem (else -lam_scale) and lam_max = infinity.
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    cfg = step_cfg or StepConfig()
    lsc = lam_scale(spec, j)
    lam_min, lam_max = lambda_window
    stop_lam = None
    if spec.is_model:
        ls = lambda_j_star(spec.exp, j)
        stop_lam = ls + cfg.threshold_rel * max(1.0, abs(ls))
    if lam_min is None:
        lam_min = stop_lam if stop_lam is not None else -lsc
    if lam_max is None:
        lam_max = math.inf
    if seed_slope is None:
        seeds = find_j_nodal(spec, 0.0, j, sign, search_cfg)
        if not seeds:
            raise NoSolution(f"no seed solution with {j} nodes at lambda = 0")
        seed_slope = seeds[0].slope0
    curve = _Curve(spec, j, sign, lsc, cfg.rtol)
    y0 = np.array([0.0, math.log(abs(seed_slope)) / LOG_SCALE])
    f0 = curve.F(y0)
    t0 = _tangent(curve.grad(y0, f0, cfg.fd_step))
    if t0[0] < 0:
        t0 = -t0
    seed_pt = curve.point(y0, UPPER)
    ill = None
    if spec.is_model:
        def ill(pt):
            if pt.lam >= 0:
                return False
            c = c_lambda(spec.exp, pt.lam)
            return pt.sup_norm - c < cfg.cond_gap * c

    back, r_back, _ = _walk(curve, y0, -t0, cfg, lam_min, lam_max, stop_lam, UPPER, False, ill)
    if r_back == _CONDITIONING:
        last = back[-1] if back else seed_pt
        back += _threshold_tail(spec, j, sign, last.lam, max(lam_min, stop_lam), cfg)
        r_back = DEAD_CORE_THRESHOLD if lam_min <= stop_lam else REACHED_LAMBDA_MIN
    fwd, r_fwd, fold = _walk(curve, y0, t0, cfg, lam_min, lam_max, stop_lam, UPPER, True)
    pts = back[::-1] + [seed_pt] + fwd
    return Branch(pts, j, sign, None if fold is None else fold[0], (r_back, r_fwd),
                  None if fold is None else sign * math.exp(LOG_SCALE * fold[1]))


def energy_along_branch(spec: NonlinearitySpec, branch: Branch, n_grid=1025):
    """(lam, J_lam) at every branch point; fills the points' energy fields."""
    if not spec.variational:
        raise DomainError("energy undefined for xi-dependent h")
    out = []
    for pt in branch.points:
        if pt.energy is None:
            pt.energy = energy(spec, pt.lam, pt.solution(n_grid))
        out.append((pt.lam, pt.energy))
    return out


def bifurcation_diagram(spec: NonlinearitySpec, j_max: int,
                        lambda_window=(None, None), step_cfg=None, signs=(1, -1),
                        with_energy=False):
    """Branches for j = 0..j_max and both signs.

    Returns ``(branches, failures)`` where ``failures`` maps (j, sign) to an
    error message; a failed branch does not abort the sweep.
    """
    if j_max < 0:
        raise DomainError("j_max >= 0 required")
    branches = {}
    failures = {}
    for j in range(j_max + 1):
        for sg in signs:
            try:
                br = trace_branch(spec, j, sg, lambda_window, step_cfg)
                if with_energy and spec.variational:
                    energy_along_branch(spec, br)
                branches[(j, sg)] = br
            except Exception as exc:  # recorded per branch, the sweep continues
                failures[(j, sg)] = f"{type(exc).__name__}: {exc}"
    return branches, failures

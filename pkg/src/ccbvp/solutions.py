"""Exact solutions of the autonomous model problem

    -u'' = g_lam(u) on (0, 1),   u(0) = u(1) = 0,

built from arches. An arch of amplitude ``alpha`` on ``[a, b]`` satisfies
``2 T_lam(alpha) = b - a`` and is the inverse of the profile
``phi(z) = int_0^z (2 (G(alpha) - G(s)))^(-1/2) ds`` measured from the nearer
endpoint. Nodal solutions use ``j + 1`` equal arches with alternating signs;
for ``lam < lam_j*`` arches of amplitude ``c_lam`` are separated by dead cores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend
from ._pykernels import GL_W, GL_X
from .errors import BranchUnavailable, DeadCoreRegime, DomainError, NoSolution
from .green import residual_operator
from .params import Exponents, G_eval, NonlinearitySpec, c_lambda, g_eval, weight_values
from .timemap import (LOWER, UPPER, Lambda_j, alpha_star, dead_core_length, invert_time_map,
                      lambda_j_star, sup_time_map, time_map)

DEFAULT_GRID = 1025


@dataclass(frozen=True)
class ArchSegment:
    a: float
    b: float
    alpha: float
    sign: int
    lam: float

    @property
    def width(self):
        return self.b - self.a

    @property
    def mid(self):
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class ZeroSegment:
    a: float
    b: float

    @property
    def width(self):
        return self.b - self.a


@dataclass(frozen=True)
class DeadCorePlacement:
    offsets: tuple
    length: float

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(float(a) for a in self.offsets))

    @property
    def j(self):
        return len(self.offsets) - 1

    def validate(self, tol=1e-12):
        """Raise DomainError naming the first violated ordering inequality."""
        a, l = self.offsets, self.length
        if not l > 0:
            raise DomainError("core length must be positive")
        if a[0] < -tol:
            raise DomainError(f"0 <= a_0 violated (a_0={a[0]!r})")
        for k in range(len(a) - 1):
            if a[k] + l > a[k + 1] + tol:
                raise DomainError(f"a_{k} + l <= a_{k + 1} violated ({a[k] + l!r} > {a[k + 1]!r})")
        if a[-1] + l > 1.0 + tol:
            raise DomainError(f"a_{len(a) - 1} + l <= 1 violated ({a[-1] + l!r} > 1)")

    @classmethod
    def evenly_spaced(cls, j, length):
        gap = (1.0 - (j + 1) * length) / (j + 2)
        return cls(tuple(gap + k * (length + gap) for k in range(j + 1)), length)

    @classmethod
    def at_nodes(cls, j, length):
        return cls(tuple(k / (j + 1) for k in range(j + 1)), length)


def _arch_eval(exp, seg: ArchSegment, x):
    x = np.asarray(x, dtype=float)
    d = np.clip(np.minimum(x - seg.a, seg.b - x), 0.0, None)
    U, DU = _backend.kernels.phi_inverse(exp.p, exp.q, seg.lam, seg.alpha, d)
    side = np.where(x <= seg.mid, 1.0, -1.0)
    return seg.sign * U, seg.sign * side * DU


class PiecewiseSolution:
    """A solution on [0, 1] as arch and zero segments plus a sampled trace.

    ``evaluate(x)`` gives ``(u, u')`` at arbitrary points; constructed
    solutions evaluate arches exactly (to quadrature accuracy), shooting
    solutions re-integrate.
    """

    def __init__(self, exp: Exponents, lam: float, segments: Sequence, kind: str,
                 branch: Optional[str] = None, n_grid: int = DEFAULT_GRID,
                 evaluator: Optional[Callable] = None, meta: Optional[dict] = None,
                 apexes: Optional[Sequence[float]] = None, slope0: Optional[float] = None):
        self.exp = exp
        self.lam = float(lam)
        self.segments = tuple(segments)
        self.kind = kind
        self.branch = branch
        self.meta = dict(meta or {})
        self.slope0 = slope0
        self._evaluator = evaluator
        self.arches = tuple(s for s in self.segments if isinstance(s, ArchSegment))
        self.node_count = len(self.arches) - 1
        self.sign_pattern = tuple(s.sign for s in self.arches)
        self.apexes = tuple(apexes) if apexes is not None else tuple(s.mid for s in self.arches)
        self._check_tiling()
        self.x = np.linspace(0.0, 1.0, n_grid)
        self.u, self.du = self.evaluate(self.x)

    def _check_tiling(self):
        pos = 0.0
        for s in self.segments:
            if abs(s.a - pos) > 1e-12:
                raise DomainError("segments do not tile [0, 1]")
            pos = s.b
        if abs(pos - 1.0) > 1e-12:
            raise DomainError("segments do not tile [0, 1]")

    @property
    def breakpoints(self):
        """Segment endpoints in (0, 1) where the solution is only finitely smooth."""
        pts = sorted({s.a for s in self.segments} | {s.b for s in self.segments})
        return np.array([t for t in pts if 0.0 < t < 1.0])

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self._evaluator is not None:
            return self._evaluator(x)
        flat = x.ravel()
        u = np.zeros(flat.shape)
        du = np.zeros(flat.shape)
        ends = np.array([s.b for s in self.segments])
        idx = np.minimum(np.searchsorted(ends, flat, side="left"), len(self.segments) - 1)
        for k, seg in enumerate(self.segments):
            if not isinstance(seg, ArchSegment):
                continue
            m = idx == k
            if np.any(m):
                u[m], du[m] = _arch_eval(self.exp, seg, flat[m])
        return u.reshape(x.shape), du.reshape(x.shape)

    @property
    def sup_norm(self):
        if self.arches:
            return max(s.alpha for s in self.arches)
        return float(np.max(np.abs(self.u)))

    @property
    def slope_norm(self):
        pts = np.concatenate([[0.0, 1.0], self.breakpoints])
        _, dend = self.evaluate(pts)
        return float(max(np.max(np.abs(self.du)), np.max(np.abs(dend))))

    @property
    def c1_norm(self):
        return self.sup_norm + self.slope_norm

    def arch_widths(self):
        return np.array([s.width for s in self.arches])

    def arch_amplitudes(self):
        return np.array([s.alpha for s in self.arches])

    def __repr__(self):
        return (f"PiecewiseSolution(kind={self.kind!r}, lam={self.lam!r}, j={self.node_count}, "
                f"branch={self.branch!r}, sup={self.sup_norm:.10g})")


# ---------------------------------------------------------------------------
# profile and arch evaluation


def phi_profile(exp: Exponents, lam: float, alpha: float, z):
    """phi_{alpha,lam}(z) = int_0^z (2 (G(alpha) - G(s)))^(-1/2) ds for z in [0, alpha]."""
    if lam < 0 and alpha < c_lambda(exp, lam) * (1 - 1e-13):
        raise DomainError("alpha below c_lambda")
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(zs < 0) or np.any(zs > alpha * (1 + 1e-15)):
        raise DomainError("z outside [0, alpha]")
    k = _backend.kernels
    out = np.array([k.phi_partial(exp.p, exp.q, lam, alpha, min(zi / alpha, 1.0)) for zi in zs])
    return float(out[0]) if np.ndim(z) == 0 else out


def arch_eval(exp: Exponents, seg: ArchSegment, x):
    """(u, u') of an arch at points of its interval."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < seg.a - 1e-15) or np.any(xs > seg.b + 1e-15):
        raise DomainError("x outside the arch")
    u, du = _arch_eval(exp, seg, xs)
    if np.ndim(x) == 0:
        return float(u), float(du)
    return u, du


# ---------------------------------------------------------------------------
# constructors


def build_nodal(exp: Exponents, lam: float, j: int, branch: str = UPPER, leading_sign: int = 1,
                n_grid: int = DEFAULT_GRID) -> PiecewiseSolution:
    """Classical solution with j interior nodes at k/(j+1)."""
    if j < 0:
        raise DomainError("j >= 0 required")
    if leading_sign not in (1, -1):
        raise DomainError("leading_sign must be +1 or -1")
    ls = lambda_j_star(exp, j)
    if lam <= 0.0 and branch == LOWER:
        raise BranchUnavailable("the lower branch exists only for lambda > 0")
    if lam < ls:
        raise DeadCoreRegime(f"lambda={lam!r} below lambda_j*={ls!r}: dead-core regime")
    if lam == ls:
        return build_threshold(exp, j, [leading_sign * (-1) ** k for k in range(j + 1)], n_grid)
    target = 1.0 / (2 * j + 2)
    if lam > 0 and sup_time_map(exp, lam) < target:
        raise NoSolution(f"lambda={lam!r} exceeds Lambda_{j}: no solution with {j + 1} nodal intervals")
    alpha = invert_time_map(exp, lam, target, branch)
    w = 1.0 / (j + 1)
    segs = [ArchSegment(k * w, 1.0 if k == j else (k + 1) * w, alpha, leading_sign * (-1) ** k, lam)
            for k in range(j + 1)]
    return PiecewiseSolution(exp, lam, segs, "nodal", branch if lam > 0 else UPPER, n_grid)


def _dead_core_segments(exp, lam, placement: DeadCorePlacement, sigma):
    c = c_lambda(exp, lam)
    l = placement.length
    segs = []
    pos = 0.0
    for a, s in zip(placement.offsets, sigma):
        a = max(a, pos)
        if a > pos:
            segs.append(ZeroSegment(pos, a))
        b = min(a + l, 1.0)
        segs.append(ArchSegment(a, b, c, int(s), lam))
        pos = b
    if pos < 1.0:
        segs.append(ZeroSegment(pos, 1.0))
    return segs


def build_threshold(exp: Exponents, j: int, sigma: Sequence[int],
                    n_grid: int = DEFAULT_GRID) -> PiecewiseSolution:
    """Solution at lambda = lambda_j*: arches of width 1/(j+1), zero slope at nodes."""
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != j + 1 or any(s not in (1, -1) for s in sigma):
        raise DomainError("sigma must hold j+1 entries of +-1")
    lam = lambda_j_star(exp, j)
    placement = DeadCorePlacement.at_nodes(j, 1.0 / (j + 1))
    segs = _dead_core_segments(exp, lam, placement, sigma)
    return PiecewiseSolution(exp, lam, segs, "threshold", None, n_grid,
                             meta={"placement": placement})


def build_dead_core(exp: Exponents, lam: float, placement: DeadCorePlacement,
                    sigma: Sequence[int], n_grid: int = DEFAULT_GRID) -> PiecewiseSolution:
    """Arches of width l(lam) and amplitude c_lam at the given offsets, zero elsewhere."""
    j = placement.j
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != j + 1 or any(s not in (1, -1) for s in sigma):
        raise DomainError("sigma must hold j+1 entries of +-1")
    ls = lambda_j_star(exp, j)
    if not lam < ls:
        raise DomainError(f"dead cores need lambda < lambda_j*={ls!r}")
    l = dead_core_length(exp, lam, j)
    if abs(placement.length - l) > 1e-12 * l:
        placement = DeadCorePlacement(placement.offsets, l)
    placement.validate()
    segs = _dead_core_segments(exp, lam, placement, sigma)
    return PiecewiseSolution(exp, lam, segs, "dead_core", None, n_grid,
                             meta={"placement": placement})


# ---------------------------------------------------------------------------
# residual on the grid


def _graded_panel(c, d, sing_c, sing_d, k):
    """Nodes/weights on [c, d] clustered (t = sigma^k) towards singular ends."""
    x = np.asarray(GL_X)
    w = np.asarray(GL_W)
    h = d - c
    if sing_c and sing_d:
        m = 0.5 * (c + d)
        x1, w1 = _graded_panel(c, m, True, False, k)
        x2, w2 = _graded_panel(m, d, False, True, k)
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])
    if sing_c:
        return c + h * x ** k, h * w * k * x ** (k - 1)
    if sing_d:
        return d - h * x ** k, h * w * k * x ** (k - 1)
    return c + h * x, h * w


def tent_rule(centres, dlt, bps, k):
    """Quadrature for ``(1/d^2) int_{-d}^{d} (d - |t|) f(x_i + t) dt`` at every centre.

    Panels are split at the points ``bps`` and graded towards them with
    exponent ``k``. Returns ``(nodes, weights, owner)``; the integral at
    centre i is ``sum(weights[owner == i] * f(nodes[owner == i]))``.
    """
    bps = np.asarray(bps, dtype=float)
    all_pts = []
    all_w = []
    owner = []
    for i, x0 in enumerate(centres):
        for c, d in ((x0 - dlt, x0), (x0, x0 + dlt)):
            inside = bps[(bps > c) & (bps < d)]
            cuts = np.concatenate([[c], inside, [d]])
            for cc, dd in zip(cuts[:-1], cuts[1:]):
                sc = np.any(np.abs(bps - cc) < 1e-14)
                sd = np.any(np.abs(bps - dd) < 1e-14)
                nodes, wts = _graded_panel(cc, dd, sc, sd, k)
                tent = (dlt - np.abs(nodes - x0)) / dlt ** 2
                all_pts.append(nodes)
                all_w.append(wts * tent)
                owner.append(np.full(nodes.size, i))
    if not all_pts:
        return np.empty(0), np.empty(0), np.empty(0, dtype=int)
    return np.concatenate(all_pts), np.concatenate(all_w), np.concatenate(owner)


def grid_residual(sol: PiecewiseSolution, spec: Optional[NonlinearitySpec] = None,
                  points=None):
    """Local residual of -u'' = h(x, u, |u'|) at grid points.

    Uses the identity ``u(x+d) - 2u(x) + u(x-d) = int_{-d}^{d} (d - |t|) u''(x+t) dt``,
    which holds for C^2 functions, so the residual

        R(x) = (u(x+d) - 2u(x) + u(x-d))/d^2 + (1/d^2) int (d - |t|) h(x+t, u, |u'|) dt

    vanishes for exact solutions without any truncation error. The tent
    integral is split at segment endpoints and graded towards them, which
    copes with the Hoelder-continuous q-term at zeros of u.

    Returns ``(max_abs, scale, R)`` with ``scale = 1 + ||u||^(p-1)``; ``R``
    holds the interior points ``x`` with ``[x - d, x + d]`` inside [0, 1]
    (``sol.x[1:-1]`` by default).
    """
    exp = sol.exp
    spec = spec or NonlinearitySpec.model(exp)
    x = sol.x if points is None else np.asarray(points, dtype=float)
    dlt = float(sol.x[1] - sol.x[0])
    xi = x[(x - dlt >= -1e-15) & (x + dlt <= 1 + 1e-15)]
    xi = xi[(xi > 0) & (xi < 1)]
    pts, wts, own = tent_rule(xi, dlt, sol.breakpoints, 2.0 / (2.0 - exp.q))
    n = xi.size
    uall, duall = sol.evaluate(np.concatenate([xi, xi - dlt, xi + dlt, pts]))
    u0, um, uq = uall[:n], uall[n:2 * n], uall[2 * n:3 * n]
    up, dup = uall[3 * n:], duall[3 * n:]
    if spec.is_model:
        f = g_eval(exp, sol.lam, up)
    elif spec.weight is not None:
        f = weight_values(spec.weight, pts) * g_eval(exp, sol.lam, up)
    else:
        f = np.array([spec(sol.lam, r, z, abs(s)) for r, z, s in zip(pts, up, dup)])
    tent_int = np.bincount(own, weights=wts * f, minlength=xi.size)
    R = (uq - 2.0 * u0 + um) / dlt ** 2 + tent_int
    scale = 1.0 + sol.sup_norm ** (exp.p - 1.0)
    return float(np.max(np.abs(R))) if R.size else 0.0, scale, R


def arch_symmetry(sol: PiecewiseSolution, n=64):
    """max |u(xi + t) - u(xi - t)| over the arches, xi the apex."""
    worst = 0.0
    for seg, apex in zip(sol.arches, sol.apexes):
        half = min(apex - seg.a, seg.b - apex)
        t = np.linspace(0.0, half, n)
        up, _ = sol.evaluate(apex + t)
        um, _ = sol.evaluate(apex - t)
        worst = max(worst, float(np.max(np.abs(up - um))))
    return worst


def slope_zeros_per_arch(sol: PiecewiseSolution):
    """Number of sign changes of u' inside each arch on the grid."""
    out = []
    for seg in sol.arches:
        m = (sol.x > seg.a) & (sol.x < seg.b)
        d = sol.du[m]
        d = d[np.abs(d) > 1e-12 * (1 + np.max(np.abs(d)) if d.size else 1)]
        out.append(int(np.count_nonzero(np.sign(d[1:]) != np.sign(d[:-1]))))
    return out


# ---------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    kind: str
    j: Optional[int] = None
    branch: Optional[str] = None
    placement: Optional[DeadCorePlacement] = None
    sign_pattern: tuple = ()
    amplitudes: tuple = ()
    residual: Optional[float] = None
    reason: str = ""
    diagnostics: dict = field(default_factory=dict)


def _apex(x, y, i):
    """Parabolic refinement of a discrete extremum of |y| at index i."""
    if 0 < i < len(y) - 1:
        a, b, c = abs(y[i - 1]), abs(y[i]), abs(y[i + 1])
        den = a - 2 * b + c
        if den < 0:
            t = 0.5 * (a - c) / den
            h = x[1] - x[0]
            return x[i] + t * h, b - 0.25 * (a - c) * t
    return x[i], abs(y[i])


def classify(exp: Exponents, lam: float, trace, spec: Optional[NonlinearitySpec] = None,
             residual_tol: float = 1e-5, match_tol: float = 1e-4) -> Classification:
    """Identify the type of a sampled candidate solution of the model problem."""
    spec = spec or NonlinearitySpec.model(exp)
    x = np.asarray(trace.x, dtype=float)
    u = np.asarray(trace.u, dtype=float)
    sup = float(np.max(np.abs(u))) if u.size else 0.0
    if sup == 0.0:
        return Classification("invalid", reason="trivial function")
    thr = 1e-9 * sup
    sgn = np.where(np.abs(u) > thr, np.sign(u), 0.0)
    runs = []
    i = 0
    n = len(u)
    while i < n:
        s = sgn[i]
        k = i
        while k + 1 < n and sgn[k + 1] == s:
            k += 1
        runs.append((int(s), i, k))
        i = k + 1
    arches = [r for r in runs if r[0] != 0]
    flats = [r for r in runs if r[0] == 0 and r[2] - r[1] >= 1 and 0 < r[1] and r[2] < n - 1]
    j = len(arches) - 1
    h = x[1] - x[0]
    amps, apexes, bounds = [], [], []
    for s, a, b in arches:
        im = a + int(np.argmax(np.abs(u[a:b + 1])))
        xa, ya = _apex(x, u, im)
        amps.append(ya)
        apexes.append(xa)

        def cross(i0, i1):
            if sgn[i0] * sgn[i1] < 0 or u[i0] == 0.0 or u[i1] == 0.0:
                return x[i0] + (x[i1] - x[i0]) * u[i0] / (u[i0] - u[i1]) if u[i0] != u[i1] else x[i0]
            return None

        left = 0.0 if a == 0 else cross(a - 1, a)
        right = 1.0 if b == n - 1 else cross(b, b + 1)
        bounds.append((left, right))
    res = residual_operator(spec, lam, trace)
    diag = {"amplitudes": amps, "apexes": apexes, "residual": res}
    pattern = tuple(s for s, _, _ in arches)
    if res > residual_tol * (1.0 + sup):
        return Classification("invalid", j, sign_pattern=pattern, amplitudes=tuple(amps),
                              residual=res, reason=f"residual {res:.3e} too large", diagnostics=diag)
    if lam < 0:
        c = c_lambda(exp, lam)
        if all(abs(b - c) <= 1e-6 * c for b in amps):
            l = 2.0 * time_map(exp, lam, c)
            offsets = tuple(ap - 0.5 * l for ap in apexes)
            placement = DeadCorePlacement(offsets, l)
            # near the nodes of a threshold solution |u| ~ dist^(2/(2-q)) dips below the
            # sign threshold on a few grid points, so flats are not a usable signal here
            if abs((j + 1) * l - 1.0) <= 1e-6:
                return Classification("threshold", j, sign_pattern=pattern, amplitudes=tuple(amps),
                                      residual=res, placement=placement, diagnostics=diag)
            return Classification("dead_core", j, sign_pattern=pattern, amplitudes=tuple(amps),
                                  residual=res, placement=placement, diagnostics=diag)
    if flats:
        return Classification("invalid", j, sign_pattern=pattern, amplitudes=tuple(amps), residual=res,
                              reason="flat segments without dead-core amplitude", diagnostics=diag)
    for (left, right), b in zip(bounds, amps):
        if left is None or right is None:
            return Classification("invalid", j, sign_pattern=pattern, residual=res,
                                  reason="arch boundary not a transversal zero", diagnostics=diag)
        width = right - left
        T2 = 2.0 * time_map(exp, lam, b)
        if abs(T2 - width) > match_tol + 2 * h * 1e-3:
            return Classification("invalid", j, sign_pattern=pattern, residual=res,
                                  reason=f"arch width {width:.6g} != 2T(beta)={T2:.6g}",
                                  diagnostics=diag)
    branch = UPPER
    if lam > 0:
        a_star = alpha_star(exp, lam).alpha_star
        br = {LOWER if b < a_star else UPPER for b in amps}
        if len(br) != 1:
            return Classification("invalid", j, sign_pattern=pattern, residual=res,
                                  reason="mixed-branch arches", diagnostics=diag)
        branch = br.pop()
    return Classification("nodal", j, branch, sign_pattern=pattern, amplitudes=tuple(amps),
                          residual=res, diagnostics=diag)

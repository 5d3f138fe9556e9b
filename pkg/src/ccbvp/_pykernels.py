"""Pure-Python implementation of the numerical hot paths.

This module mirrors ``_ckernels.pyx`` function by function and is used when
the compiled extension is unavailable (or when ``CCBVP_PURE_PYTHON=1``).
Both backends run the same algorithms with the same nodes, so results agree
to rounding for the quadratures and to integrator tolerance for shooting.

Time-map integrand
------------------
With ``A = alpha**(p-q)`` and ``D(s) = 2 p lam (1-s**q) + 2 q A (1-s**p)``,

    T(alpha) = int_0^1 sqrt(p q alpha**(2-q) / D(s)) ds.

``[0, 1/2]`` is split into panels graded geometrically towards 0. When
``D(0) > 0`` all panels use ``s`` directly and the grading resolves the
scale ``s_eps`` where ``D(0)`` and the ``s**q`` term balance. When
``D(0) = 0`` (dead-core amplitude) the innermost panel uses
``s = tau**k``, ``k = 2/(2-q)``, which removes the ``s**(-q/2)`` endpoint
singularity. ``[1/2, 1]`` is integrated in ``t`` with ``s = 1 - t**2``.
Every panel uses 16-point Gauss-Legendre.
"""
import math

import numpy as np

NODES = 16
_x, _w = np.polynomial.legendre.leggauss(NODES)
GL_X = ((_x + 1.0) / 2.0).tolist()
GL_W = (_w / 2.0).tolist()
del _x, _w

RIGHT_BREAKS = (0.0, 0.2, 0.4, 0.55, 0.65, math.sqrt(0.5))
MIN_LEVELS = 6
MAX_LEVELS = 60
SNAP = 64 * 2.220446049250313e-16

# Dormand-Prince 5(4) tableau with the 4th-order continuous extension.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

BACKEND = "python"


def _gl(f, a, b):
    h = b - a
    if h == 0.0:
        return 0.0
    s = 0.0
    for x, w in zip(GL_X, GL_W):
        s += w * f(a + h * x)
    return s * h


class _Ctx:
    """Panel layout and cumulative integrals for one ``(lam, alpha)``."""

    __slots__ = ("p", "q", "lam", "alpha", "A", "C0", "D0", "k", "tau_inner",
                 "sbreaks", "left_cum", "right_cum", "left_total", "total")

    def __init__(self, p, q, lam, alpha):
        if not alpha > 0.0:
            raise ValueError("amplitude must be positive")
        self.p, self.q, self.lam, self.alpha = p, q, lam, alpha
        self.A = alpha ** (p - q)
        self.C0 = p * q * alpha ** (2.0 - q)
        self.k = 2.0 / (2.0 - q)
        D0 = 2.0 * p * lam + 2.0 * q * self.A
        den = abs(D0) + abs(2.0 * p * lam) + 2.0 * q * self.A
        if D0 < -1e-12 * den:
            raise ValueError("amplitude below the positive root of G_lambda")
        if D0 < SNAP * den:
            # within rounding of the dead-core amplitude; T is not Lipschitz there
            D0 = 0.0
        self.D0 = D0
        levels = MIN_LEVELS
        if D0 > 0.0 and lam < 0.0:
            s_eps = (D0 / (-2.0 * p * lam)) ** (1.0 / q)
            need = int(math.ceil(math.log(0.5e3 / s_eps) / math.log(4.0)))
            levels = min(max(levels, need), MAX_LEVELS)
        self.tau_inner = D0 == 0.0
        # left panels in s, ascending: 0, s_min, 4 s_min, ..., 1/2
        self.sbreaks = [0.0] + [0.5 * 4.0 ** (-i) for i in range(levels, -1, -1)]
        cum = [0.0]
        for i in range(len(self.sbreaks) - 1):
            cum.append(cum[-1] + self.left_piece(i, self.sbreaks[i + 1]))
        self.left_cum = cum
        rc = [0.0]
        for a, b in zip(RIGHT_BREAKS[:-1], RIGHT_BREAKS[1:]):
            rc.append(rc[-1] + _gl(self.fR, a, b))
        self.right_cum = rc
        self.left_total = cum[-1]
        self.total = cum[-1] + rc[-1]

    def D(self, s):
        d = self.D0 - 2.0 * self.p * self.lam * s ** self.q - 2.0 * self.q * self.A * s ** self.p
        return d if d > 0.0 else 0.0

    def E(self, t):
        # D(1 - t^2) / t^2 without cancellation
        lt = math.log1p(-t * t)
        t2 = t * t
        aq = -math.expm1(self.q * lt) / t2
        ap = -math.expm1(self.p * lt) / t2
        return 2.0 * self.p * self.lam * aq + 2.0 * self.q * self.A * ap

    def fS(self, s):
        d = self.D(s)
        return math.sqrt(self.C0 / d) if d > 0.0 else 0.0

    def fT(self, tau):
        d = self.D(tau ** self.k)
        if d <= 0.0:
            return 0.0
        return math.sqrt(self.C0 / d) * self.k * tau ** (self.k - 1.0)

    def fR(self, t):
        return 2.0 * math.sqrt(self.C0 / self.E(t))

    def uses_tau(self, i):
        return i == 0 and self.tau_inner

    def left_piece(self, i, s):
        """Integral over ``[sbreaks[i], s]`` inside left panel ``i``."""
        a = self.sbreaks[i]
        if self.uses_tau(i):
            return _gl(self.fT, 0.0, s ** (1.0 / self.k))
        return _gl(self.fS, a, s)


def time_map(p, q, lam, alpha):
    return _Ctx(p, q, lam, alpha).total


def time_map_many(p, q, lam, alpha):
    lam = np.asarray(lam, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    lam, alpha = np.broadcast_arrays(lam, alpha)
    out = np.empty(lam.shape)
    for i in range(lam.size):
        out.flat[i] = _Ctx(p, q, float(lam.flat[i]), float(alpha.flat[i])).total
    return out


def left_right_split(p, q, lam, alpha):
    c = _Ctx(p, q, lam, alpha)
    return c.left_total, c.total - c.left_total


def time_map_deriv(p, q, lam, alpha):
    c = _Ctx(p, q, lam, alpha)
    a1 = lam * p * (2.0 - q)
    a2 = q * (p - 2.0) * c.A

    def fS(s):
        d = c.D(s)
        return (a1 * (1.0 - s ** q) - a2 * (1.0 - s ** p)) / d ** 1.5

    def fT(tau):
        s = tau ** c.k
        d = c.D(s)
        n = a1 * (1.0 - s ** q) - a2 * (1.0 - s ** p)
        return n / d ** 1.5 * c.k * tau ** (c.k - 1.0)

    def fR(t):
        lt = math.log1p(-t * t)
        t2 = t * t
        aq = -math.expm1(q * lt) / t2
        ap = -math.expm1(p * lt) / t2
        e = 2.0 * p * lam * aq + 2.0 * q * c.A * ap
        return 2.0 * (a1 * aq - a2 * ap) / e ** 1.5

    if c.tau_inner:
        # T' is infinite at the dead-core amplitude
        return math.inf
    total = 0.0
    for a, b in zip(c.sbreaks[:-1], c.sbreaks[1:]):
        total += _gl(fS, a, b)
    for a, b in zip(RIGHT_BREAKS[:-1], RIGHT_BREAKS[1:]):
        total += _gl(fR, a, b)
    return math.sqrt(p * q) * alpha ** (-q / 2.0) * total


def _panel(cum, target):
    # index i with cum[i] <= target <= cum[i+1]
    n = len(cum) - 1
    for i in range(n):
        if target <= cum[i + 1]:
            return i
    return n - 1


def _solve_in_panel(f, a, b, base, top, target):
    """Find x in [a, b] with base + int_a^x f = target (f > 0)."""
    lo, hi = a, b
    if top > base:
        x = a + (b - a) * (target - base) / (top - base)
    else:
        x = 0.5 * (a + b)
    for _ in range(100):
        val = base + _gl(f, a, x) - target
        if val > 0.0:
            hi = x
        else:
            lo = x
        fx = f(x)
        xn = x - val / fx if fx > 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 4e-16 * b or hi - lo <= 4e-16 * b:
            return xn
        x = xn
    return x


def phi_partial(p, q, lam, alpha, x):
    """int_0^x F(sigma) d sigma for x in [0, 1] (distance covered up to u = alpha x)."""
    c = _Ctx(p, q, lam, alpha)
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return c.total
    if x <= 0.5:
        i = _panel(c.sbreaks, x)
        return c.left_cum[i] + c.left_piece(i, x)
    t = math.sqrt(1.0 - x)
    i = _panel(RIGHT_BREAKS, t)
    return c.total - (c.right_cum[i] + _gl(c.fR, RIGHT_BREAKS[i], t))


def phi_inverse(p, q, lam, alpha, dist):
    """Invert the arch profile: amplitude u and slope |u'| at each distance."""
    c = _Ctx(p, q, lam, alpha)
    dist = np.asarray(dist, dtype=float)
    u = np.empty(dist.shape)
    du = np.empty(dist.shape)
    pq = p * q
    aq = alpha ** q
    for idx in range(dist.size):
        d = float(dist.flat[idx])
        if d <= 0.0:
            u.flat[idx] = 0.0
            du.flat[idx] = math.sqrt(aq * c.D0 / pq)
        elif d >= c.total:
            u.flat[idx] = alpha
            du.flat[idx] = 0.0
        elif d <= c.left_total:
            i = _panel(c.left_cum, d)
            if c.uses_tau(i):
                tau = _solve_in_panel(c.fT, 0.0, c.sbreaks[1] ** (1.0 / c.k),
                                      0.0, c.left_cum[1], d)
                s = tau ** c.k
            else:
                s = _solve_in_panel(c.fS, c.sbreaks[i], c.sbreaks[i + 1],
                                    c.left_cum[i], c.left_cum[i + 1], d)
            u.flat[idx] = alpha * s
            du.flat[idx] = math.sqrt(aq * c.D(s) / pq)
        else:
            r = c.total - d
            i = _panel(c.right_cum, r)
            t = _solve_in_panel(c.fR, RIGHT_BREAKS[i], RIGHT_BREAKS[i + 1],
                                c.right_cum[i], c.right_cum[i + 1], r)
            u.flat[idx] = alpha * (1.0 - t * t)
            du.flat[idx] = t * math.sqrt(aq * c.E(t) / pq)
    return u, du


# ---------------------------------------------------------------------------
# shooting


def _dense(y0, h, K, th):
    th2 = th * th
    th3 = th2 * th
    th4 = th3 * th
    out = [y0[0], y0[1]]
    for i in range(7):
        P = _P[i]
        qi = P[0] * th + P[1] * th2 + P[2] * th3 + P[3] * th4
        if qi != 0.0:
            out[0] += h * K[i][0] * qi
            out[1] += h * K[i][1] * qi
    return out


def _locate(y0, h, K, comp, f0):
    """Root in (0, 1] of component ``comp`` of the dense interpolant (Illinois)."""
    a, fa = 0.0, f0
    b = 1.0
    fb = _dense(y0, h, K, 1.0)[comp]
    if fb == 0.0:
        return 1.0
    side = 0
    for _ in range(200):
        x = (a * fb - b * fa) / (fb - fa)
        fx = _dense(y0, h, K, x)[comp]
        if fx == 0.0 or (b - a) < 1e-15:
            return x
        if (fx > 0.0) == (fb > 0.0):
            b, fb = x, fx
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = x, fx
            if side == 1:
                fb *= 0.5
            side = 1
    return 0.5 * (a + b)


def _model_rhs(p, q, lam):
    q1 = q - 1.0
    p1 = p - 1.0

    def h(r, v, xi):
        if v > 0.0:
            return lam * v ** q1 + v ** p1
        if v < 0.0:
            a = -v
            return -(lam * a ** q1 + a ** p1)
        return 0.0

    return h


def weight_coefficients(weight):
    """(mode, K2, a, d, power) for the annulus weight phi'(r)^2, weight = (N, rho1, rho2).

    N = 2:  phi'^2 = K2 exp(2 (a + r d)) with a = log rho1, d = log(rho2/rho1), K2 = d^2.
    N != 2: phi'^2 = K2 (a + r d)^power with e = 2 - N, a = rho1^e, d = rho2^e - rho1^e,
            K2 = (d/e)^2 and power = 2 (N - 1)/e.
    """
    N, r1, r2 = weight
    if N == 2:
        d = math.log(r2 / r1)
        return 1, d * d, math.log(r1), d, 0.0
    e = 2.0 - N
    d = r2 ** e - r1 ** e
    return 2, (d / e) ** 2, r1 ** e, d, 2.0 * (N - 1) / e


def _weighted_rhs(p, q, lam, weight):
    mode, K2, a, d, pw = weight_coefficients(weight)
    h = _model_rhs(p, q, lam)
    if mode == 1:
        return lambda r, v, xi: K2 * math.exp(2.0 * (a + r * d)) * h(r, v, xi)
    return lambda r, v, xi: K2 * math.pow(a + r * d, pw) * h(r, v, xi)


def shoot(p, q, lam, slope, grid, stop_after, rtol, atol, ceiling, rhs=None,
          r_end=1.0, hmax=0.05, weight=None):
    """Integrate -v'' = h(r, v, |v'|), v(0)=0, v'(0)=slope up to ``r_end``.

    Returns a dict with the end state, the phase angle ``theta``, zero
    crossings, interior extrema and the state sampled at ``grid``. A step
    that straddles a zero of v is redone so that it ends on the zero: the
    q-term is only Hoelder continuous there and straddling steps carry an
    error the embedded estimate does not see.

    With ``rhs=None`` the model ``g_lam`` is used, multiplied by the annulus
    weight ``phi'(r)^2`` when ``weight = (N, rho1, rho2)`` is given.
    """
    if rhs is None:
        rhs = _model_rhs(p, q, lam) if weight is None else _weighted_rhs(p, q, lam, weight)
    grid = np.asarray(grid, dtype=float)
    ng = grid.size
    gv = np.full(ng, np.nan)
    gw = np.full(ng, np.nan)
    gi = 0
    while gi < ng and grid[gi] <= 0.0:
        gv[gi] = 0.0
        gw[gi] = slope
        gi += 1

    r = 0.0
    v, w = 0.0, float(slope)
    crossings = []
    apex_r = []
    apex_v = []
    max_w = abs(w)
    status = 0
    h = 1e-4 * r_end
    k1 = (w, -rhs(r, v, abs(w)))
    nsteps = 0
    to_cross = False
    h_cross = 0.0
    while r < r_end:
        target = grid[gi] if gi < ng else r_end
        if target > r_end:
            target = r_end
        if to_cross and h_cross < target - r:
            hs = h_cross
            landing = False
        else:
            to_cross = False
            hs = min(h, hmax, target - r)
            landing = hs == target - r
        K = [k1]
        for s in range(1, 6):
            a = _A[s]
            yv = v
            yw = w
            for j in range(s):
                yv += hs * a[j] * K[j][0]
                yw += hs * a[j] * K[j][1]
            K.append((yw, -rhs(r + _C[s] * hs, yv, abs(yw))))
        nv = v
        nw = w
        for j in range(6):
            nv += hs * _B[j] * K[j][0]
            nw += hs * _B[j] * K[j][1]
        k7 = (nw, -rhs(r + hs, nv, abs(nw)))
        K.append(k7)
        ev = 0.0
        ew = 0.0
        for j in range(7):
            ev += _E[j] * K[j][0]
            ew += _E[j] * K[j][1]
        ev *= hs
        ew *= hs
        sv = atol + rtol * max(abs(v), abs(nv))
        sw = atol + rtol * max(abs(w), abs(nw))
        err = max(abs(ev) / sv, abs(ew) / sw)
        nsteps += 1
        if nsteps > 2_000_000:
            raise RuntimeError("step limit exceeded in shooting integrator")
        if err > 1.0 or not math.isfinite(err):
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = hs * fac
            to_cross = False
            if h < 1e-15 * r_end:
                raise RuntimeError("step size underflow in shooting integrator")
            continue
        y0 = (v, w)
        if not to_cross and ((v > 0.0 and nv < 0.0) or (v < 0.0 and nv > 0.0)):
            th = _locate(y0, hs, K, 0, v)
            if th < 1.0 and th * hs > 1e-14 * r_end:
                # redo the step so that it ends on the zero of v
                h_cross = th * hs
                to_cross = True
                continue
        stop_here = False
        # apex: interior extremum of v (sign change of w)
        if (w > 0.0 and nw <= 0.0) or (w < 0.0 and nw >= 0.0):
            th = _locate(y0, hs, K, 1, w)
            ya = _dense(y0, hs, K, th)
            apex_r.append(r + th * hs)
            apex_v.append(ya[0])
        crossed = False
        if to_cross:
            # the step ends on the zero; the interpolation error in v is dropped
            th = 1.0
            nv = 0.0
            crossed = True
        elif (v > 0.0 and nv <= 0.0) or (v < 0.0 and nv >= 0.0):
            th = _locate(y0, hs, K, 0, v)
            crossed = True
        if crossed:
            rc = r + th * hs
            crossings.append(rc)
            if stop_after >= 0 and len(crossings) > stop_after:
                yc = _dense(y0, hs, K, th)
                r, v, w = rc, 0.0, yc[1]
                status = 1
                stop_here = True
        if stop_here:
            max_w = max(max_w, abs(w))
            break
        r = r + hs if not landing else target
        v, w = nv, nw
        k1 = k7
        was_cross = to_cross
        if to_cross:
            k1 = (w, -rhs(r, 0.0, abs(w)))
            to_cross = False
        max_w = max(max_w, abs(w))
        if landing and gi < ng:
            while gi < ng and grid[gi] <= r:
                gv[gi] = v
                gw[gi] = w
                gi += 1
        if abs(v) > ceiling or abs(w) > ceiling:
            status = 2
            break
        fac = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
        h = min(max(h, hs) * fac if (landing or was_cross) else hs * fac, hmax)

    n = len(crossings)
    sigma = (1.0 if slope > 0 else -1.0) * (1.0 if n % 2 == 0 else -1.0)
    ws = abs(slope)
    if status == 1:
        theta = n * math.pi
    else:
        beta = math.atan2(sigma * v, sigma * w / ws)
        if beta <= -0.5 * math.pi:
            beta += 2.0 * math.pi
        theta = n * math.pi + beta
    return {
        "r": r, "v": v, "w": w, "theta": theta, "status": status,
        "crossings": np.array(crossings), "apex_r": np.array(apex_r),
        "apex_v": np.array(apex_v), "grid_v": gv, "grid_w": gw,
        "max_abs_w": max_w, "nsteps": nsteps,
    }

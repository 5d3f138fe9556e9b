# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the time-map quadrature, arch-profile inversion and
shooting integrator. The algorithms and node sets match ``_pykernels``."""
from libc.math cimport sqrt, pow, exp, log, log1p, expm1, fabs, ceil, atan2, M_PI, INFINITY, isfinite
import numpy as np

from ccbvp import _pykernels as _py

BACKEND = "cython"

cdef enum:
    NODES = 16
    MAXB = 64

cdef double GLX[NODES]
cdef double GLW[NODES]
for _i in range(NODES):
    GLX[_i] = _py.GL_X[_i]
    GLW[_i] = _py.GL_W[_i]

cdef double RB[6]
for _i in range(6):
    RB[_i] = _py.RIGHT_BREAKS[_i]

cdef int MIN_LEVELS = _py.MIN_LEVELS
cdef int MAX_LEVELS = _py.MAX_LEVELS
cdef double SNAP = _py.SNAP

cdef struct Ctx:
    double p, q, lam, alpha, A, C0, D0, k
    double a1, a2
    int tau_inner
    int nb
    double sb[MAXB]
    double lc[MAXB]
    double rc[6]
    double left_total, total

# integrand kinds
cdef enum:
    K_S = 0
    K_T = 1
    K_R = 2
    K_DS = 3
    K_DR = 4


cdef inline double _D(Ctx* c, double s) nogil:
    cdef double d = c.D0 - 2.0 * c.p * c.lam * pow(s, c.q) - 2.0 * c.q * c.A * pow(s, c.p)
    return d if d > 0.0 else 0.0


cdef inline void _aqp(Ctx* c, double t, double* aq, double* ap) nogil:
    cdef double lt = log1p(-t * t)
    cdef double t2 = t * t
    aq[0] = -expm1(c.q * lt) / t2
    ap[0] = -expm1(c.p * lt) / t2


cdef inline double _E(Ctx* c, double t) nogil:
    cdef double aq, ap
    _aqp(c, t, &aq, &ap)
    return 2.0 * c.p * c.lam * aq + 2.0 * c.q * c.A * ap


cdef double _f(Ctx* c, int kind, double x) nogil:
    cdef double d, s, aq, ap, e
    if kind == K_S:
        d = _D(c, x)
        return sqrt(c.C0 / d) if d > 0.0 else 0.0
    elif kind == K_T:
        d = _D(c, pow(x, c.k))
        if d <= 0.0:
            return 0.0
        return sqrt(c.C0 / d) * c.k * pow(x, c.k - 1.0)
    elif kind == K_R:
        return 2.0 * sqrt(c.C0 / _E(c, x))
    elif kind == K_DS:
        d = _D(c, x)
        return (c.a1 * (1.0 - pow(x, c.q)) - c.a2 * (1.0 - pow(x, c.p))) / (d * sqrt(d))
    else:
        _aqp(c, x, &aq, &ap)
        e = 2.0 * c.p * c.lam * aq + 2.0 * c.q * c.A * ap
        return 2.0 * (c.a1 * aq - c.a2 * ap) / (e * sqrt(e))


cdef double _gl(Ctx* c, int kind, double a, double b) nogil:
    cdef double h = b - a
    cdef double s = 0.0
    cdef int i
    if h == 0.0:
        return 0.0
    for i in range(NODES):
        s += GLW[i] * _f(c, kind, a + h * GLX[i])
    return s * h


cdef double _left_piece(Ctx* c, int i, double s) nogil:
    if i == 0 and c.tau_inner:
        return _gl(c, K_T, 0.0, pow(s, 1.0 / c.k))
    return _gl(c, K_S, c.sb[i], s)


cdef int _init(Ctx* c, double p, double q, double lam, double alpha) except -1:
    cdef double D0, den, s_eps
    cdef int levels, need, i
    if not alpha > 0.0:
        raise ValueError("amplitude must be positive")
    c.p = p
    c.q = q
    c.lam = lam
    c.alpha = alpha
    c.A = pow(alpha, p - q)
    c.C0 = p * q * pow(alpha, 2.0 - q)
    c.k = 2.0 / (2.0 - q)
    c.a1 = lam * p * (2.0 - q)
    c.a2 = q * (p - 2.0) * c.A
    D0 = 2.0 * p * lam + 2.0 * q * c.A
    den = fabs(D0) + fabs(2.0 * p * lam) + 2.0 * q * c.A
    if D0 < -1e-12 * den:
        raise ValueError("amplitude below the positive root of G_lambda")
    if D0 < SNAP * den:
        D0 = 0.0
    c.D0 = D0
    levels = MIN_LEVELS
    if D0 > 0.0 and lam < 0.0:
        s_eps = pow(D0 / (-2.0 * p * lam), 1.0 / q)
        need = <int>ceil(log(0.5e3 / s_eps) / log(4.0))
        if need > levels:
            levels = need
        if levels > MAX_LEVELS:
            levels = MAX_LEVELS
    c.tau_inner = 1 if D0 == 0.0 else 0
    c.nb = levels + 2
    c.sb[0] = 0.0
    for i in range(levels + 1):
        c.sb[i + 1] = 0.5 * pow(4.0, -(levels - i))
    c.lc[0] = 0.0
    for i in range(c.nb - 1):
        c.lc[i + 1] = c.lc[i] + _left_piece(c, i, c.sb[i + 1])
    c.rc[0] = 0.0
    for i in range(5):
        c.rc[i + 1] = c.rc[i] + _gl(c, K_R, RB[i], RB[i + 1])
    c.left_total = c.lc[c.nb - 1]
    c.total = c.left_total + c.rc[5]
    return 0


def time_map(double p, double q, double lam, double alpha):
    cdef Ctx c
    _init(&c, p, q, lam, alpha)
    return c.total


def time_map_many(double p, double q, lam, alpha):
    lam_a, alpha_a = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(alpha, dtype=float))
    out = np.empty(lam_a.shape)
    cdef double[::1] lv = np.ascontiguousarray(lam_a).ravel()
    cdef double[::1] av = np.ascontiguousarray(alpha_a).ravel()
    cdef double[::1] ov = out.reshape(-1)
    cdef Ctx c
    cdef Py_ssize_t i
    for i in range(lv.shape[0]):
        _init(&c, p, q, lv[i], av[i])
        ov[i] = c.total
    return out


def left_right_split(double p, double q, double lam, double alpha):
    cdef Ctx c
    _init(&c, p, q, lam, alpha)
    return c.left_total, c.total - c.left_total


def time_map_deriv(double p, double q, double lam, double alpha):
    cdef Ctx c
    cdef double total = 0.0
    cdef int i
    _init(&c, p, q, lam, alpha)
    if c.tau_inner:
        return INFINITY
    for i in range(c.nb - 1):
        total += _gl(&c, K_DS, c.sb[i], c.sb[i + 1])
    for i in range(5):
        total += _gl(&c, K_DR, RB[i], RB[i + 1])
    return sqrt(p * q) * pow(alpha, -q / 2.0) * total


cdef int _panel(double* cum, int n, double target) nogil:
    cdef int i
    for i in range(n - 1):
        if target <= cum[i + 1]:
            return i
    return n - 2


cdef double _solve(Ctx* c, int kind, double a, double b, double base, double top, double target) nogil:
    cdef double lo = a, hi = b, x, val, fx, xn
    cdef int it
    if top > base:
        x = a + (b - a) * (target - base) / (top - base)
    else:
        x = 0.5 * (a + b)
    for it in range(100):
        val = base + _gl(c, kind, a, x) - target
        if val > 0.0:
            hi = x
        else:
            lo = x
        fx = _f(c, kind, x)
        if fx > 0.0:
            xn = x - val / fx
        else:
            xn = 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= 4e-16 * b or hi - lo <= 4e-16 * b:
            return xn
        x = xn
    return x


def phi_partial(double p, double q, double lam, double alpha, double x):
    cdef Ctx c
    cdef int i
    cdef double t
    _init(&c, p, q, lam, alpha)
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return c.total
    if x <= 0.5:
        i = _panel(c.sb, c.nb, x)
        return c.lc[i] + _left_piece(&c, i, x)
    t = sqrt(1.0 - x)
    i = _panel(RB, 6, t)
    return c.total - (c.rc[i] + _gl(&c, K_R, RB[i], t))


def phi_inverse(double p, double q, double lam, double alpha, dist):
    cdef Ctx c
    _init(&c, p, q, lam, alpha)
    darr = np.asarray(dist, dtype=float)
    u = np.empty(darr.shape)
    du = np.empty(darr.shape)
    cdef double[::1] dv = np.ascontiguousarray(darr).ravel()
    cdef double[::1] uv = u.reshape(-1)
    cdef double[::1] duv = du.reshape(-1)
    cdef double pq = p * q
    cdef double aq = pow(alpha, q)
    cdef double d, s, tau, r, t
    cdef Py_ssize_t idx
    cdef int i
    for idx in range(dv.shape[0]):
        d = dv[idx]
        if d <= 0.0:
            uv[idx] = 0.0
            duv[idx] = sqrt(aq * c.D0 / pq)
        elif d >= c.total:
            uv[idx] = alpha
            duv[idx] = 0.0
        elif d <= c.left_total:
            i = _panel(c.lc, c.nb, d)
            if i == 0 and c.tau_inner:
                tau = _solve(&c, K_T, 0.0, pow(c.sb[1], 1.0 / c.k), 0.0, c.lc[1], d)
                s = pow(tau, c.k)
            else:
                s = _solve(&c, K_S, c.sb[i], c.sb[i + 1], c.lc[i], c.lc[i + 1], d)
            uv[idx] = alpha * s
            duv[idx] = sqrt(aq * _D(&c, s) / pq)
        else:
            r = c.total - d
            i = _panel(c.rc, 6, r)
            t = _solve(&c, K_R, RB[i], RB[i + 1], c.rc[i], c.rc[i + 1], r)
            uv[idx] = alpha * (1.0 - t * t)
            duv[idx] = t * sqrt(aq * _E(&c, t) / pq)
    return u, du


# ---------------------------------------------------------------------------
# shooting

cdef double DC[6]
cdef double DA[6][5]
cdef double DB[6]
cdef double DE[7]
cdef double DP[7][4]
for _i in range(6):
    DC[_i] = _py._C[_i]
    DB[_i] = _py._B[_i]
    for _j in range(5):
        DA[_i][_j] = _py._A[_i][_j] if _j < len(_py._A[_i]) else 0.0
for _i in range(7):
    DE[_i] = _py._E[_i]
    for _j in range(4):
        DP[_i][_j] = _py._P[_i][_j]


cdef struct Model:
    double lam, q1, p1
    int general
    int wmode
    double wK2, wa, wd, wpow


cdef inline double _model_h(Model* m, double v) nogil:
    cdef double a
    if v > 0.0:
        return m.lam * pow(v, m.q1) + pow(v, m.p1)
    if v < 0.0:
        a = -v
        return -(m.lam * pow(a, m.q1) + pow(a, m.p1))
    return 0.0


cdef inline double _weight(Model* m, double r) nogil:
    if m.wmode == 1:
        return m.wK2 * exp(2.0 * (m.wa + r * m.wd))
    if m.wmode == 2:
        return m.wK2 * pow(m.wa + r * m.wd, m.wpow)
    return 1.0


cdef inline double _rhs(Model* m, object h, double r, double v, double w) except? -1e308:
    if m.general:
        return -<double>h(r, v, fabs(w))
    if m.wmode:
        return -_weight(m, r) * _model_h(m, v)
    return -_model_h(m, v)


cdef inline void _dense(double y0v, double y0w, double h, double K[7][2], double th,
                        double* ov, double* ow) nogil:
    cdef double th2 = th * th
    cdef double th3 = th2 * th
    cdef double th4 = th3 * th
    cdef double qi
    cdef int i
    ov[0] = y0v
    ow[0] = y0w
    for i in range(7):
        qi = DP[i][0] * th + DP[i][1] * th2 + DP[i][2] * th3 + DP[i][3] * th4
        if qi != 0.0:
            ov[0] += h * K[i][0] * qi
            ow[0] += h * K[i][1] * qi


cdef double _locate(double y0v, double y0w, double h, double K[7][2], int comp, double f0) nogil:
    cdef double a = 0.0, fa = f0, b = 1.0, fb, x, fx, ov, ow
    cdef int side = 0, it
    _dense(y0v, y0w, h, K, 1.0, &ov, &ow)
    fb = ov if comp == 0 else ow
    if fb == 0.0:
        return 1.0
    for it in range(200):
        x = (a * fb - b * fa) / (fb - fa)
        _dense(y0v, y0w, h, K, x, &ov, &ow)
        fx = ov if comp == 0 else ow
        if fx == 0.0 or (b - a) < 1e-15:
            return x
        if (fx > 0.0) == (fb > 0.0):
            b = x
            fb = fx
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a = x
            fa = fx
            if side == 1:
                fb *= 0.5
            side = 1
    return 0.5 * (a + b)


def shoot(double p, double q, double lam, double slope, grid, int stop_after,
          double rtol, double atol, double ceiling, rhs=None,
          double r_end=1.0, double hmax=0.05, weight=None):
    cdef Model m
    m.lam = lam
    m.q1 = q - 1.0
    m.p1 = p - 1.0
    m.general = 0 if rhs is None else 1
    m.wmode = 0
    if weight is not None and rhs is None:
        m.wmode, m.wK2, m.wa, m.wd, m.wpow = _py.weight_coefficients(weight)
    garr = np.ascontiguousarray(np.asarray(grid, dtype=float))
    cdef double[::1] g = garr
    cdef Py_ssize_t ng = g.shape[0]
    gv_a = np.full(ng, np.nan)
    gw_a = np.full(ng, np.nan)
    cdef double[::1] gv = gv_a
    cdef double[::1] gw = gw_a
    cdef Py_ssize_t gi = 0
    while gi < ng and g[gi] <= 0.0:
        gv[gi] = 0.0
        gw[gi] = slope
        gi += 1
    crossings = []
    apex_r = []
    apex_v = []
    cdef double r = 0.0, v = 0.0, w = slope
    cdef double max_w = fabs(w)
    cdef int status = 0
    cdef double h = 1e-4 * r_end
    cdef double K[7][2]
    cdef double target, hs, yv, yw, nv, nw, ev, ew, sv, sw, err, fac, th, ov, ow, rc
    cdef int landing, s, j, stop_here, crossed, was_cross
    cdef int to_cross = 0
    cdef double h_cross = 0.0
    cdef long nsteps = 0
    K[0][0] = w
    K[0][1] = _rhs(&m, rhs, r, v, w)
    while r < r_end:
        target = g[gi] if gi < ng else r_end
        if target > r_end:
            target = r_end
        if to_cross and h_cross < target - r:
            hs = h_cross
            landing = 0
        else:
            to_cross = 0
            hs = h
            if hmax < hs:
                hs = hmax
            if target - r < hs:
                hs = target - r
            landing = hs == target - r
        for s in range(1, 6):
            yv = v
            yw = w
            for j in range(s):
                yv += hs * DA[s][j] * K[j][0]
                yw += hs * DA[s][j] * K[j][1]
            K[s][0] = yw
            K[s][1] = _rhs(&m, rhs, r + DC[s] * hs, yv, yw)
        nv = v
        nw = w
        for j in range(6):
            nv += hs * DB[j] * K[j][0]
            nw += hs * DB[j] * K[j][1]
        K[6][0] = nw
        K[6][1] = _rhs(&m, rhs, r + hs, nv, nw)
        ev = 0.0
        ew = 0.0
        for j in range(7):
            ev += DE[j] * K[j][0]
            ew += DE[j] * K[j][1]
        ev *= hs
        ew *= hs
        sv = atol + rtol * (fabs(v) if fabs(v) > fabs(nv) else fabs(nv))
        sw = atol + rtol * (fabs(w) if fabs(w) > fabs(nw) else fabs(nw))
        err = fabs(ev) / sv
        if fabs(ew) / sw > err:
            err = fabs(ew) / sw
        nsteps += 1
        if nsteps > 2000000:
            raise RuntimeError("step limit exceeded in shooting integrator")
        if err > 1.0 or not isfinite(err):
            if not isfinite(err):
                fac = 0.2
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac < 0.2:
                    fac = 0.2
            h = hs * fac
            to_cross = 0
            if h < 1e-15 * r_end:
                raise RuntimeError("step size underflow in shooting integrator")
            continue
        if not to_cross and ((v > 0.0 and nv < 0.0) or (v < 0.0 and nv > 0.0)):
            th = _locate(v, w, hs, K, 0, v)
            if th < 1.0 and th * hs > 1e-14 * r_end:
                h_cross = th * hs
                to_cross = 1
                continue
        stop_here = 0
        if (w > 0.0 and nw <= 0.0) or (w < 0.0 and nw >= 0.0):
            th = _locate(v, w, hs, K, 1, w)
            _dense(v, w, hs, K, th, &ov, &ow)
            apex_r.append(r + th * hs)
            apex_v.append(ov)
        crossed = 0
        if to_cross:
            th = 1.0
            nv = 0.0
            crossed = 1
        elif (v > 0.0 and nv <= 0.0) or (v < 0.0 and nv >= 0.0):
            th = _locate(v, w, hs, K, 0, v)
            crossed = 1
        if crossed:
            rc = r + th * hs
            crossings.append(rc)
            if stop_after >= 0 and len(crossings) > stop_after:
                _dense(v, w, hs, K, th, &ov, &ow)
                r = rc
                v = 0.0
                w = ow
                status = 1
                stop_here = 1
        if stop_here:
            if fabs(w) > max_w:
                max_w = fabs(w)
            break
        if landing:
            r = target
        else:
            r = r + hs
        v = nv
        w = nw
        K[0][0] = K[6][0]
        K[0][1] = K[6][1]
        was_cross = to_cross
        if to_cross:
            K[0][1] = _rhs(&m, rhs, r, 0.0, w)
            to_cross = 0
        if fabs(w) > max_w:
            max_w = fabs(w)
        if landing and gi < ng:
            while gi < ng and g[gi] <= r:
                gv[gi] = v
                gw[gi] = w
                gi += 1
        if fabs(v) > ceiling or fabs(w) > ceiling:
            status = 2
            break
        if err == 0.0:
            fac = 10.0
        else:
            fac = 0.9 * pow(err, -0.2)
            if fac > 10.0:
                fac = 10.0
        if landing or was_cross:
            h = (h if h > hs else hs) * fac
        else:
            h = hs * fac
        if h > hmax:
            h = hmax

    cdef int n = len(crossings)
    cdef double sigma = (1.0 if slope > 0 else -1.0) * (1.0 if n % 2 == 0 else -1.0)
    cdef double beta, theta
    if status == 1:
        theta = n * M_PI
    else:
        beta = atan2(sigma * v, sigma * w / fabs(slope))
        if beta <= -0.5 * M_PI:
            beta += 2.0 * M_PI
        theta = n * M_PI + beta
    return {
        "r": r, "v": v, "w": w, "theta": theta, "status": status,
        "crossings": np.array(crossings), "apex_r": np.array(apex_r),
        "apex_v": np.array(apex_v), "grid_v": gv_a, "grid_w": gw_a,
        "max_abs_w": max_w, "nsteps": nsteps,
    }

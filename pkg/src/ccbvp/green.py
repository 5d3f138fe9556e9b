"""Green's-function form of the Dirichlet problem on [0, 1].

    S_lam(v)(x) = v(x) - int_0^1 G(x, s) h_lam(s, v(s), |v'(s)|) ds,
    G(x, s) = x (1 - s) for x <= s,  s (1 - x) for s <= x.

With ``B(x) = int_0^x f`` and ``C(x) = int_0^x s f`` the integral equals
``(1 - x) C(x) + x [(B(1) - B(x)) - (C(1) - C(x))]``.
"""
import numpy as np
from scipy import integrate


def green_apply(x, f):
    """int_0^1 G(x_i, s) f(s) ds on a grid by cumulative Simpson."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    B = integrate.cumulative_simpson(f, x=x, initial=0.0)
    C = integrate.cumulative_simpson(x * f, x=x, initial=0.0)
    return (1.0 - x) * C + x * ((B[-1] - B) - (C[-1] - C))


def residual_operator(spec, lam, trace, return_field=False):
    """sup-norm of S_lam(v) for a sampled trace with attributes ``x, u, du``."""
    x, u, du = trace.x, trace.u, trace.du
    if spec.is_model:
        f = spec(lam, x, u)
    else:
        f = np.array([spec(lam, xi, ui, abs(di)) for xi, ui, di in zip(x, u, du)])
    S = u - green_apply(x, f)
    val = float(np.max(np.abs(S)))
    return (val, S) if return_field else val

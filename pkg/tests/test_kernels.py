"""The compiled kernels and the pure-Python fallback compute the same numbers."""
import os
import subprocess
import sys

import numpy as np
import pytest

from ccbvp import _backend

pytestmark = pytest.mark.skipif(_backend.ckernels is None, reason="extension not built")

P, Q = 4.0, 1.5
C, PY = _backend.ckernels, _backend.pykernels


@pytest.mark.parametrize("lam,alpha", [(0.0, 2.0), (1.0, 0.3), (1.0, 5.0), (-1.0, 1.4804286899486134),
                                       (-1.0, 3.0), (50.0, 3.2), (-20.0, 10.0)])
def test_time_map_agrees(lam, alpha):
    assert C.time_map(P, Q, lam, alpha) == pytest.approx(PY.time_map(P, Q, lam, alpha), rel=1e-14)
    assert C.time_map_deriv(P, Q, lam, alpha) == pytest.approx(
        PY.time_map_deriv(P, Q, lam, alpha), rel=1e-12)


def test_time_map_many_agrees():
    lam = np.array([0.0, 1.0, 10.0, -5.0])
    alpha = np.array([1.0, 2.0, 0.5, 4.0])
    np.testing.assert_allclose(C.time_map_many(P, Q, lam, alpha), PY.time_map_many(P, Q, lam, alpha),
                               rtol=1e-14)


def test_phi_inverse_agrees():
    d = np.linspace(0, 0.3, 31)
    for a, b in zip(C.phi_inverse(P, Q, 1.0, 2.0, d), PY.phi_inverse(P, Q, 1.0, 2.0, d)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("lam,slope,weight", [(0.0, 7.4, None), (1.0, 30.0, None), (-5.0, 3.0, None),
                                              (1.0, 9.0, (2, 1.0, 2.0)), (0.0, 5.0, (3, 1.0, 2.0))])
def test_shoot_bit_identical(lam, slope, weight):
    grid = np.linspace(0, 1, 257)
    a = C.shoot(P, Q, lam, slope, grid, -1, 1e-11, 1e-12, 1e12, None, weight=weight)
    b = PY.shoot(P, Q, lam, slope, grid, -1, 1e-11, 1e-12, 1e12, None, weight=weight)
    assert a["nsteps"] == b["nsteps"]
    for k in ("v", "w", "theta", "r"):
        assert a[k] == b[k]
    np.testing.assert_array_equal(a["grid_v"], b["grid_v"])
    np.testing.assert_array_equal(np.asarray(a["crossings"]), np.asarray(b["crossings"]))


def test_shoot_python_callback_agrees_with_model():
    grid = np.linspace(0, 1, 65)
    h = PY._model_rhs(P, Q, 2.0)
    a = C.shoot(P, Q, 2.0, 20.0, grid, -1, 1e-11, 1e-12, 1e12, h)
    b = C.shoot(P, Q, 2.0, 20.0, grid, -1, 1e-11, 1e-12, 1e12, None)
    assert a["v"] == pytest.approx(b["v"], abs=1e-12)


def test_fallback_selected_by_environment():
    env = dict(os.environ, CCBVP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ccbvp; print(ccbvp.backend_name(), ccbvp.COMPILED)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "False"]

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccbvp import DomainError, Exponents, NonlinearitySpec, PinchingBounds, G_eval, c_lambda, g_eval
from ccbvp.params import (ParamPoint, energy_density, k_bound_spot_check, pinching_spot_check,
                          weight_values, xi_independent)


@pytest.mark.parametrize("p,q", [(2.0, 1.5), (4.0, 1.0), (4.0, 2.0), (1.5, 1.2), (math.inf, 1.5)])
def test_exponent_ranges_rejected(p, q):
    with pytest.raises(DomainError):
        Exponents(p, q)


def test_param_point_finite():
    with pytest.raises(DomainError):
        ParamPoint(math.nan)


def test_pinching_bounds_order():
    with pytest.raises(DomainError):
        PinchingBounds(2.0, 1.0)


def test_g_at_zero_and_odd(exp):
    assert g_eval(exp, -3.0, 0.0) == 0.0
    z = np.linspace(-3, 3, 13)
    assert np.array_equal(g_eval(exp, 1.0, -z), -g_eval(exp, 1.0, z))


def test_c_lambda_is_root_of_G(exp):
    for lam in (-0.2, -1.0, -20.0):
        c = c_lambda(exp, lam)
        assert abs(G_eval(exp, lam, c)) < 1e-13 * c ** exp.p
    assert c_lambda(exp, -1.0) == pytest.approx((8.0 / 3.0) ** 0.4, rel=1e-15)
    with pytest.raises(DomainError):
        c_lambda(exp, 0.5)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(-50, 50), z=st.floats(0.01, 20))
def test_G_is_antiderivative(lam, z):
    e = Exponents(4.0, 1.5)
    h = 1e-6 * z
    d = (G_eval(e, lam, z + h) - G_eval(e, lam, z - h)) / (2 * h)
    assert d == pytest.approx(g_eval(e, lam, z), rel=1e-6, abs=1e-6)


def test_model_spot_checks(model):
    ok, worst = pinching_spot_check(model, [-1.0, 0.0, 2.0], [-2.0, 0.5, 3.0])
    assert ok and worst >= 0.0
    assert xi_independent(model)
    assert k_bound_spot_check(model, [1.0], [1.0, 2.0], 5.0) is True


def test_general_spec_rejects_xi_dependence(exp):
    with pytest.raises(DomainError):
        NonlinearitySpec.general(exp, lambda lam, r, z, xi: z * xi, PinchingBounds(),
                                 variational=True)


def test_energy_density_general_matches_model(exp, model):
    gen = model.as_general()
    for z in (0.3, 1.7):
        assert energy_density(gen, 1.5, 0.2, z) == pytest.approx(G_eval(exp, 1.5, z), rel=1e-10)


@pytest.mark.parametrize("N", [2, 3, 5])
def test_weight_values_match_phi_prime(N):
    from ccbvp.radial import AnnulusGeometry, phi_prime
    g = AnnulusGeometry(N, 1.0, 2.0)
    r = np.linspace(0, 1, 11)
    np.testing.assert_allclose(weight_values((N, 1.0, 2.0), r), phi_prime(g, r) ** 2, rtol=1e-13)

import dataclasses

import numpy as np
import pytest

from ccbvp import (AnnulusGeometry, DomainError, NonlinearitySpec, find_j_nodal,
                   pullback_solution, shoot, transform_nonlinearity)
from ccbvp.radial import phi, phi_inverse, phi_prime, phi_second, transform_constants

GEOMS = [AnnulusGeometry(2, 1.0, 2.0), AnnulusGeometry(3, 1.0, 2.0), AnnulusGeometry(5, 0.5, 3.0)]


@pytest.mark.parametrize("geom", GEOMS)
def test_phi_maps_interval(geom):
    r = np.linspace(0, 1, 101)
    s = phi(geom, r)
    assert s[0] == pytest.approx(geom.rho1) and s[-1] == pytest.approx(geom.rho2)
    assert np.all(np.diff(s) > 0)
    np.testing.assert_allclose(phi_inverse(geom, s), r, atol=1e-14)
    h = 1e-6
    rr = r[1:-1]
    fd = (phi(geom, rr + h) - phi(geom, rr - h)) / (2 * h)
    np.testing.assert_allclose(phi_prime(geom, rr), fd, rtol=1e-8)
    fd2 = (phi_prime(geom, rr + h) - phi_prime(geom, rr - h)) / (2 * h)
    np.testing.assert_allclose(phi_second(geom, rr), fd2, rtol=1e-7)
    # s^(1-N) phi'(r) is constant (flux form of the radial Laplacian)
    k = s ** (1 - geom.dim_N) * phi_prime(geom, r)
    np.testing.assert_allclose(k, k[0], rtol=1e-12)


@pytest.mark.parametrize("geom", GEOMS)
def test_transform_constants(geom):
    tc = transform_constants(geom)
    d = phi_prime(geom, np.linspace(0, 1, 1001))
    assert tc.m2 == pytest.approx(d.min(), rel=1e-12)
    assert tc.M2 == pytest.approx(d.max(), rel=1e-12)


def test_geometry_errors():
    with pytest.raises(DomainError):
        AnnulusGeometry(2, 2.0, 1.0)
    with pytest.raises(DomainError):
        AnnulusGeometry(0, 1.0, 2.0)
    with pytest.raises(DomainError):
        phi(GEOMS[0], 1.5)
    with pytest.raises(DomainError):
        phi_inverse(GEOMS[0], 3.0)


def test_weighted_kernel_matches_callback(exp):
    spec = transform_nonlinearity(GEOMS[1], NonlinearitySpec.model(exp))
    slow = dataclasses.replace(spec, weight=None)
    a = shoot(spec, 1.0, 2.0, rtol=1e-12)
    b = shoot(slow, 1.0, 2.0, rtol=1e-12)
    np.testing.assert_allclose(a.v, b.v, rtol=1e-9, atol=1e-11)


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("lam,j", [(0.0, 0), (0.0, 1), (1.0, 1), (-2.0, 0)])
def test_pullback_solves_radial_problem(exp, N, lam, j):
    geom = AnnulusGeometry(N, 1.0, 2.0)
    f = NonlinearitySpec.model(exp)
    sols = find_j_nodal(transform_nonlinearity(geom, f), lam, j, 1)
    assert sols
    for v in sols:
        prof = pullback_solution(geom, v, f, lam)
        assert prof.max_residual <= 1e-5 * (1 + prof.sup_norm ** (exp.p - 1))
        assert prof.sup_norm == pytest.approx(v.sup_norm, rel=1e-12)
        assert prof.sign_changes == j
        assert prof.w[0] == 0.0 and abs(prof.w[-1]) <= 1e-8 * prof.sup_norm

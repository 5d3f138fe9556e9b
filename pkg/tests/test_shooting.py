import math

import numpy as np
import pytest
from scipy import special

from ccbvp import (DeadCoreRegime, DomainError, Escaped, Lambda_j, NonlinearitySpec,
                   PinchingBounds, build_nodal, find_j_nodal, grid_residual, invert_time_map,
                   lambda_j_star, shoot, LOWER, UPPER)
from ccbvp.shooting import matching, solution_from_slope
from ccbvp.solutions import arch_symmetry

from conftest import LAMBDA_J


def zeta_sup(p, j):
    m_p = special.beta(1 / p, 0.5) / p
    return ((j + 1) * math.sqrt(2 * p) * m_p) ** (2 / (p - 2))


def test_shoot_energy_conservation(model, exp):
    # v'^2/2 + G_1(v) is a first integral
    r = shoot(model, 1.0, 3.0, rtol=1e-12)
    E = 0.5 * r.w ** 2 + np.abs(r.v) ** 1.5 / 1.5 + np.abs(r.v) ** 4 / 4
    assert np.ptp(E) <= 1e-9 * E[0]


def test_shoot_errors(model):
    with pytest.raises(DomainError):
        shoot(model, 1.0, 0.0)
    with pytest.raises(Escaped):
        shoot(model, 1.0, 1e7, ceiling=1e6)


@pytest.mark.parametrize("j", range(4))
def test_lambda_zero_recovers_zeta(model, exp, j):
    sols = find_j_nodal(model, 0.0, j, 1)
    assert len(sols) == 1
    assert sols[0].sup_norm == pytest.approx(zeta_sup(exp.p, j), rel=1e-8)
    assert sols[0].node_count == j


def test_four_solutions_below_fold(model, exp):
    sols = find_j_nodal(model, 0.5 * LAMBDA_J[1], 1)
    assert len(sols) == 4
    amps = sorted({round(s.sup_norm, 6) for s in sols})
    ref = sorted(invert_time_map(exp, 0.5 * LAMBDA_J[1], 0.25, b) for b in (LOWER, UPPER))
    np.testing.assert_allclose(amps, ref, rtol=1e-6)
    assert find_j_nodal(model, 1.1 * LAMBDA_J[1], 1) == []


def test_shooting_matches_construction(model, exp):
    s, = find_j_nodal(model, 2.0, 1, 1)[1:] or find_j_nodal(model, 2.0, 1, 1)
    for br in (LOWER, UPPER):
        ref = build_nodal(exp, 2.0, 1, br)
        if abs(ref.sup_norm - s.sup_norm) < 1e-3 * ref.sup_norm:
            assert np.max(np.abs(ref.u - s.u)) <= 1e-8 * ref.sup_norm
            break
    else:
        pytest.fail("shooting solution matches neither branch")
    res, scale, _ = grid_residual(s)
    assert res <= 1e-6 * scale
    assert arch_symmetry(s) <= 1e-9 * s.sup_norm


def test_matching_zero_at_solution(model, exp):
    s = build_nodal(exp, 0.0, 2)
    slope = s.du[0]
    assert abs(matching(model, 0.0, slope, 2, rtol=1e-12)) <= 1e-7
    sol = solution_from_slope(model, 0.0, slope)
    assert sol.node_count == 2


def test_dead_core_regime_refused(model, exp):
    with pytest.raises(DeadCoreRegime):
        find_j_nodal(model, 1.1 * lambda_j_star(exp, 0), 0)


def test_general_spec_callback(exp):
    # 2 g_lam: every solution of -v'' = 2 g(v) is v(x) with amplitude scaled by 2^(-1/(p-2)) at lam = 0
    spec = NonlinearitySpec.general(exp, lambda lam, r, z, xi: 2.0 * (lam * abs(z) ** 0.5 * np.sign(z) + z ** 3),
                                    PinchingBounds(2.0, 2.0), variational=True)
    sol, = find_j_nodal(spec, 0.0, 0, 1)
    assert sol.sup_norm == pytest.approx(zeta_sup(exp.p, 0) * 2 ** (-1 / (exp.p - 2)), rel=1e-8)

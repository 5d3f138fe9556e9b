import math

import numpy as np
import pytest

from ccbvp import (BranchUnavailable, DeadCorePlacement, DeadCoreRegime, DomainError, LOWER,
                   NoSolution, UPPER, build_dead_core, build_nodal, build_threshold, c_lambda,
                   classify, dead_core_length, grid_residual, lambda_j_star, time_map)
from ccbvp.solutions import ArchSegment, arch_eval, arch_symmetry, slope_zeros_per_arch


@pytest.mark.parametrize("lam,j,branch", [(0.0, 0, UPPER), (1.0, 2, LOWER), (1.0, 2, UPPER),
                                          (-5.0, 1, UPPER), (20.0, 1, LOWER)])
def test_nodal_residual_and_shape(exp, lam, j, branch):
    sol = build_nodal(exp, lam, j, branch)
    res, scale, R = grid_residual(sol)
    assert R.size == sol.x.size - 2
    assert res <= 1e-7 * scale
    assert sol.node_count == j
    assert arch_symmetry(sol) <= 1e-9 * sol.sup_norm
    assert slope_zeros_per_arch(sol) == [1] * (j + 1)
    assert sol.u[0] == 0.0 and abs(sol.u[-1]) <= 1e-12 * sol.sup_norm
    for k in range(1, j + 1):
        assert sol.evaluate(k / (j + 1))[0] == pytest.approx(0.0, abs=1e-10 * sol.sup_norm)


def test_sign_pattern_and_mirror(exp):
    a = build_nodal(exp, 1.0, 2, UPPER, 1)
    b = build_nodal(exp, 1.0, 2, UPPER, -1)
    assert a.sign_pattern == (1, -1, 1)
    assert np.array_equal(a.u, -b.u)


def test_arch_width_is_twice_time_map(exp):
    sol = build_nodal(exp, 3.0, 1, LOWER)
    for seg in sol.arches:
        assert 2 * time_map(exp, 3.0, seg.alpha) == pytest.approx(seg.width, rel=1e-12)


def test_arch_eval_endpoints(exp):
    seg = ArchSegment(0.0, 2 * time_map(exp, 0.0, 2.0), 2.0, 1, 0.0)
    u, du = arch_eval(exp, seg, np.array([seg.a, seg.mid, seg.b]))
    assert u[0] == pytest.approx(0.0, abs=1e-14) and u[2] == pytest.approx(0.0, abs=1e-12)
    assert u[1] == pytest.approx(2.0, rel=1e-12)
    assert du[1] == pytest.approx(0.0, abs=1e-6)
    assert du[0] == pytest.approx(math.sqrt(2 * 2.0 ** 4 / 4), rel=1e-12)
    with pytest.raises(DomainError):
        arch_eval(exp, seg, seg.b + 0.1)


def test_nodal_errors(exp):
    with pytest.raises(BranchUnavailable):
        build_nodal(exp, -1.0, 0, LOWER)
    with pytest.raises(DeadCoreRegime):
        build_nodal(exp, 2 * lambda_j_star(exp, 0), 0)
    with pytest.raises(NoSolution):
        build_nodal(exp, 10.0, 0)
    with pytest.raises(DomainError):
        build_nodal(exp, 1.0, -1)


def test_threshold(exp):
    sol = build_threshold(exp, 1, [1, 1])
    c = c_lambda(exp, sol.lam)
    assert sol.sup_norm == pytest.approx(c, rel=1e-12)
    # zero slope at the node, both sides
    assert abs(sol.evaluate(0.5)[1]) <= 1e-9 * c
    res, scale, _ = grid_residual(sol)
    assert res <= 1e-6 * scale
    with pytest.raises(DomainError):
        build_threshold(exp, 1, [1])


@pytest.mark.parametrize("factor", [1.5, 3.0, 10.0])
def test_dead_core(exp, factor):
    j = 2
    lam = factor * lambda_j_star(exp, j)
    l = dead_core_length(exp, lam, j)
    sol = build_dead_core(exp, lam, DeadCorePlacement.evenly_spaced(j, l), [1, -1, 1])
    c = c_lambda(exp, lam)
    assert max(a.alpha for a in sol.arches) == pytest.approx(c, rel=1e-14)
    assert sol.sup_norm == pytest.approx(c, rel=1e-10)
    for seg in sol.arches:
        assert seg.width == pytest.approx(l, rel=1e-12)
        for x in (seg.a, seg.b):
            assert abs(sol.evaluate(x)[1]) <= 1e-7 * (1 + c)
    res, scale, _ = grid_residual(sol)
    assert res <= 1e-6 * scale


def test_placement_validation():
    with pytest.raises(DomainError, match="a_0 \\+ l <= a_1"):
        DeadCorePlacement((0.0, 0.1), 0.2).validate()
    with pytest.raises(DomainError, match="<= 1"):
        DeadCorePlacement((0.0, 0.9), 0.2).validate()
    with pytest.raises(DomainError, match="0 <= a_0"):
        DeadCorePlacement((-0.1,), 0.2).validate()
    DeadCorePlacement.evenly_spaced(3, 0.1).validate()


def test_dead_core_requires_regime(exp):
    with pytest.raises(DomainError):
        build_dead_core(exp, -1.0, DeadCorePlacement((0.1,), 0.5), [1])


def test_classify_round_trips(exp):
    for br in (LOWER, UPPER):
        c = classify(exp, 1.0, build_nodal(exp, 1.0, 2, br))
        assert (c.kind, c.j, c.branch) == ("nodal", 2, br)
    c = classify(exp, lambda_j_star(exp, 1), build_threshold(exp, 1, [1, -1]))
    assert (c.kind, c.j) == ("threshold", 1)
    lam = 2.0 * lambda_j_star(exp, 1)
    l = dead_core_length(exp, lam, 1)
    pl = DeadCorePlacement((0.02, 0.02 + l + 0.1), l)
    c = classify(exp, lam, build_dead_core(exp, lam, pl, [1, 1]))
    assert (c.kind, c.j) == ("dead_core", 1)
    np.testing.assert_allclose(c.placement.offsets, pl.offsets, atol=1e-3)


def test_classify_rejects_perturbed(exp):
    sol = build_nodal(exp, 1.0, 1)
    class Trace:
        x = sol.x
        u = sol.u * (1 + 0.01 * np.sin(3 * np.pi * sol.x))
        du = sol.du
    assert classify(exp, 1.0, Trace).kind == "invalid"


@pytest.mark.parametrize("j,branch,ref", [
    # J = lam (1/2 - 1/q) int|u|^q + (1/2 - 1/p) int|u|^p with the arch moments
    # 2 int_0^alpha z^k (2(G(alpha) - G(z)))^(-1/2) dz in mpmath (30 digits)
    (0, LOWER, -0.00013400265801605566),
    (8, LOWER, -2.521450870406321e-10),
    (0, UPPER, 13.355818772436251),
    (8, UPPER, 103309.34160753588),
])
def test_energy_against_moment_oracle(exp, model, j, branch, ref):
    from ccbvp import energy
    assert energy(model, 1.0, build_nodal(exp, 1.0, j, branch)) == pytest.approx(ref, rel=1e-6)

import numpy as np
import pytest

from ccbvp import (DomainError, Lambda_j, bifurcation_diagram, c_lambda, lambda_j_star,
                   trace_branch)
from ccbvp.continuation import DEAD_CORE_THRESHOLD, energy_along_branch

from conftest import LAMBDA_J


@pytest.fixture(scope="module")
def branch0(model):
    return trace_branch(model, 0, 1)


def test_fold_matches_time_map(model):
    for j in (0, 2):
        br = trace_branch(model, j, 1, lambda_window=(0.0, None))
        assert br.turning_point_lambda == pytest.approx(LAMBDA_J[j], rel=1e-8)


def test_full_branch_reaches_threshold(branch0, exp):
    assert branch0.end_reasons[0] == DEAD_CORE_THRESHOLD
    ls = lambda_j_star(exp, 0)
    first = branch0.points[0]
    assert first.lam == pytest.approx(ls, rel=1e-5)
    assert first.sup_norm == pytest.approx(c_lambda(exp, first.lam), rel=1e-5)
    lam, sup, c1 = branch0.arrays()
    assert np.all(sup > 0) and np.all(c1 >= sup)
    assert lam.max() <= LAMBDA_J[0] * (1 + 1e-10)


def test_branch_points_are_solutions(branch0):
    for pt in branch0.points[::40]:
        sol = pt.solution()
        assert sol.node_count == 0
        assert sol.sup_norm == pytest.approx(pt.sup_norm, rel=1e-6)


def test_mirror_symmetry(model):
    a = trace_branch(model, 1, 1, lambda_window=(0.0, None))
    b = trace_branch(model, 1, -1, lambda_window=(0.0, None))
    la, sa, _ = a.arrays()
    lb, sb, _ = b.arrays()
    np.testing.assert_allclose(la, lb, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(sa, sb, rtol=1e-12)


def test_energy_along_branch(model):
    br = trace_branch(model, 0, 1, lambda_window=(0.0, None))
    out = energy_along_branch(model, br)
    assert len(out) == len(br.points)
    assert all(pt.energy is not None for pt in br.points)


def test_diagram_records_failures(model):
    with pytest.raises(DomainError):
        bifurcation_diagram(model, -1)
    branches, failures = bifurcation_diagram(model, 0, lambda_window=(0.0, None), signs=(1,))
    assert set(branches) == {(0, 1)} and not failures
    with pytest.raises(DomainError):
        trace_branch(model, 0, 2)

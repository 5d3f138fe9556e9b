import math

import numpy as np
import pytest
from scipy import special

from ccbvp import (DeadCorePlacement, DomainError, PinchingBounds, build_constants,
                   build_dead_core, build_nodal, check_lemma_I, check_lemma_II,
                   check_ratio_inequalities, dead_core_length, lambda_j_star, LOWER, UPPER)
from ccbvp.apriori import REGIMES, sample_ratio_inputs


def test_constants_frozen(exp):
    C = build_constants(exp)
    assert C.m_p == pytest.approx(special.beta(1 / 4, 0.5) / 4, rel=1e-13)
    assert C.m_q == pytest.approx(special.beta(1 / 1.5, 0.5) / 1.5, rel=1e-13)
    assert C.c3 == pytest.approx(0.5743491774985174, rel=1e-10)
    assert C.C3 == pytest.approx(1.2828918935689755, rel=1e-10)
    assert C.C1 == pytest.approx(129.400, rel=1e-4)
    assert C.C2 == pytest.approx(34.946, rel=1e-4)
    assert C.a == pytest.approx(8.2003, rel=1e-4)
    assert C.d == pytest.approx(0.75855, rel=1e-4)
    assert C.s_j(0) == 1.0 and C.t_j(0) == 1.0
    assert C.s_j(2) == pytest.approx(1 / (3 * C.a ** 2))
    d = C.as_dict()
    assert set(d["provenance"]) >= {"C1", "C2", "a", "d", "c3", "C3"}


def test_constants_scale_with_bounds(exp):
    C1 = build_constants(exp)
    C2 = build_constants(exp, PinchingBounds(0.5, 2.0))
    assert C2.a > C1.a and C2.d != C1.d
    assert C2.lambda_ceiling(1) > C1.lambda_ceiling(1)


@pytest.mark.parametrize("lam", [0.0, -1.0, -10.0])
@pytest.mark.parametrize("j", [0, 1, 3])
def test_lemma_I_on_nodal(exp, lam, j):
    rep = check_lemma_I(exp, None, lam, build_nodal(exp, lam, j))
    assert rep.passed, [c for c in rep.checks if not c.passed]
    assert "D_j_ratio" in rep.monitors


def test_lemma_I_on_dead_core(exp):
    lam = 3 * lambda_j_star(exp, 1)
    l = dead_core_length(exp, lam, 1)
    sol = build_dead_core(exp, lam, DeadCorePlacement.evenly_spaced(1, l), [1, -1])
    assert check_lemma_I(exp, None, lam, sol).passed


@pytest.mark.parametrize("lam", [0.0, 1.0, 5.0])
@pytest.mark.parametrize("j", [0, 2])
@pytest.mark.parametrize("branch", [LOWER, UPPER])
def test_lemma_II_on_nodal(exp, lam, j, branch):
    if lam == 0.0 and branch == LOWER:
        return
    rep = check_lemma_II(exp, None, lam, build_nodal(exp, lam, j, branch))
    assert rep.passed, [c for c in rep.checks if not c.passed]
    # m = M = 1 makes the per-interval relations equalities
    eq = [c for c in rep.checks if c.name.startswith("interval")]
    assert eq and all(abs(c.slack) <= 1e-10 for c in eq)


def test_lemma_domains(exp):
    with pytest.raises(DomainError):
        check_lemma_I(exp, None, 1.0, build_nodal(exp, 1.0, 0))
    with pytest.raises(DomainError):
        check_lemma_II(exp, None, -1.0, build_nodal(exp, -1.0, 0))


def test_lemma_I_detects_violation(exp):
    sol = build_nodal(exp, -1.0, 0)

    class Fake:
        node_count = 0
        sup_norm = 1e-3
        slope_norm = sol.slope_norm
        arches = sol.arches
    assert not check_lemma_I(exp, None, -1.0, Fake).passed


def test_sampler_regimes(exp):
    s = sample_ratio_inputs(exp, n=200, seed=3)
    assert set(s) == set(REGIMES)
    lam, e1, e2 = s["mixed"]
    assert np.all(e1 <= 0) and np.all(e2 >= 0)
    lam, e1, e2 = s["below"]
    assert np.all(e1 <= 0) and np.all(e2 <= 0)
    again = sample_ratio_inputs(exp, n=200, seed=3)
    assert all(np.array_equal(a, b) for a, b in zip(s["above"], again["above"]))


def test_ratio_inequalities(exp):
    rep = check_ratio_inequalities(exp, n=2000, seed=1)
    assert rep.passed
    assert not rep.counterexamples
    assert len(rep.checks) == 3
    d = rep.as_dict()
    assert d["passed"] is True

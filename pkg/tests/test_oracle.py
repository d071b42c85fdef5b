import numpy as np
import pytest

from softquant.objective import INFINITE_DIVERGENCE, entropy, kl_divergence
from softquant.oracle import (
    ConvergenceError,
    DiscreteInstance,
    TransportPlan,
    brute_force_solve,
    brute_force_value,
    closed_form_value,
    entropy_form_value,
    marginal_projection_gap,
    optimal_plan,
    plan_objective,
    random_instance,
    verify_suite,
)
from softquant.softmin import softmin


def inst(n=3, m=2, lam=0.5, seed=0):
    rng = np.random.default_rng(seed)
    return DiscreteInstance(rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m)),
                            rng.uniform(0, 1, (n, m)), lam)


def north_west_corner(P, Q):
    """Vertex of the transport polytope with marginals ``P`` and ``Q``."""
    P, Q = P.copy(), Q.copy()
    pi = np.zeros((P.size, Q.size))
    i = j = 0
    while i < P.size and j < Q.size:
        t = min(P[i], Q[j])
        pi[i, j] = t
        P[i] -= t
        Q[j] -= t
        if P[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return pi


def test_singleton_instance():
    x = DiscreteInstance([1.0], [1.0], [[0.37]], 2.0)
    assert closed_form_value(x) == pytest.approx(0.37)
    assert brute_force_value(x) == pytest.approx(0.37, abs=1e-12)
    pi = TransportPlan([[1.0]])
    assert entropy(pi.matrix.ravel()) == 0
    assert entropy_form_value(pi, x) == pytest.approx(0.37)
    assert plan_objective(pi, x) == pytest.approx(0.37)


def test_constant_cost():
    x = DiscreteInstance([0.3, 0.7], [0.2, 0.5, 0.3], np.full((2, 3), 0.8), 0.1)
    assert closed_form_value(x) == pytest.approx(0.8, abs=1e-14)


def test_constant_rows_keep_the_prior():
    c = np.array([[0.2] * 3, [0.9] * 3])
    x = DiscreteInstance([0.4, 0.6], [0.2, 0.5, 0.3], c, 2.0)
    value, plan = brute_force_solve(x)
    assert value == pytest.approx(0.4 * 0.2 + 0.6 * 0.9, abs=1e-12)
    np.testing.assert_allclose(plan.matrix / x.P[:, None], np.tile(x.Q, (2, 1)), atol=1e-10)


def test_closed_form_matches_brute_force():
    x = inst(3, 2, 0.5)
    assert abs(closed_form_value(x) - brute_force_value(x)) <= 1e-6


def test_optimal_plan_properties():
    x = inst(4, 3, 0.5, seed=3)
    plan = optimal_plan(x)
    np.testing.assert_allclose(plan.row_marginal, x.P, atol=1e-12)
    assert abs(plan_objective(plan, x) - closed_form_value(x)) <= 1e-10
    sigma = np.array([softmin(c, x.Q, x.lam) for c in x.cost])
    np.testing.assert_allclose(plan.col_marginal, x.Q * (x.P @ sigma), atol=1e-14)


def test_plan_limits():
    x = inst(3, 3, 1.0, seed=5)
    huge = DiscreteInstance(x.P, x.Q, x.cost, 1e6 * x.cost.max())
    np.testing.assert_allclose(optimal_plan(huge).matrix, x.product, atol=1e-4)
    tiny = DiscreteInstance(x.P, x.Q, x.cost, 1e-4)
    rows = optimal_plan(tiny).matrix / x.P[:, None]
    np.testing.assert_allclose(rows, np.eye(3)[x.cost.argmin(axis=1)], atol=1e-10)


def test_support_containment():
    x = DiscreteInstance([0.5, 0.5], [0.6, 0.0, 0.4], [[0.9, 0.0, 0.7], [0.1, 0.0, 0.5]], 0.3)
    assert (optimal_plan(x).matrix[:, 1] == 0).all()
    value, plan = brute_force_solve(x)
    assert (plan.matrix[:, 1] == 0).all()
    assert value == pytest.approx(closed_form_value(x), abs=1e-6)


def test_projection_examples():
    P, Q = np.array([0.3, 0.7]), np.array([0.25, 0.25, 0.5])
    d_proj, d_orig = marginal_projection_gap(TransportPlan(np.outer(P, Q)), P, Q)
    assert d_proj == pytest.approx(0, abs=1e-15) and d_orig == pytest.approx(0, abs=1e-15)
    pi = TransportPlan(np.random.default_rng(1).dirichlet(np.ones(6)).reshape(2, 3))
    d_proj, d_orig = marginal_projection_gap(pi, pi.row_marginal, pi.col_marginal)
    assert d_orig - d_proj == pytest.approx(0, abs=1e-15)


def test_projection_support_violation():
    pi = TransportPlan([[0.5, 0.5]])
    d_proj, d_orig = marginal_projection_gap(pi, [1.0], [1.0, 0.0])
    assert d_orig is INFINITE_DIVERGENCE and d_proj == pytest.approx(0)


def test_entropy_offset_is_plan_independent():
    rng = np.random.default_rng(8)
    for _ in range(10):
        x = DiscreteInstance(rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3)),
                             rng.uniform(0, 1, (3, 3)), float(rng.choice([0.1, 0.5, 2.0])))
        offset = x.lam * (entropy(x.P) + entropy(x.Q))
        for pi in (x.product, north_west_corner(x.P, x.Q)):
            plan = TransportPlan(pi)
            diff = plan_objective(plan, x) - entropy_form_value(plan, x)
            assert abs(diff - offset) <= 1e-10


def test_entropy_form_checks_marginals():
    x = inst(2, 2)
    with pytest.raises(ValueError):
        entropy_form_value(TransportPlan(np.full((2, 2), 0.25)), x)


def test_convergence_error_reports_best_value():
    with pytest.raises(ConvergenceError) as err:
        brute_force_solve(inst(3, 3, 0.1), tol=0.0, max_iter=3)
    assert np.isfinite(err.value.best_value)


def test_size_limit():
    with pytest.raises(ValueError):
        brute_force_solve(inst(9, 8))


@pytest.mark.parametrize(
    "args", [([0.5, 0.6], [1.0], [[0], [0]], 1.0), ([1.0], [1.0], [[-1.0]], 1.0),
             ([1.0], [1.0], [[1.0]], 0.0), ([1.0], [1.0], [[1.0, 2.0]], 1.0)]
)
def test_invalid_instances(args):
    with pytest.raises(ValueError):
        DiscreteInstance(*args)


def test_random_instances_are_in_range():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = random_instance(rng)
        assert x.P.size <= 4 and x.Q.size <= 4 and x.lam in (0.1, 0.5, 2.0)


def test_suite_passes():
    records = verify_suite(100, seed=0)
    assert all(r["ok"] for r in records)
    assert {r["check"] for r in records} == {
        "closed_form_vs_brute_force", "plan_vs_brute_force", "marginal_projection"}


def test_mutation_is_caught():
    def no_lambda(x):
        # smooth minimum without the leading lambda factor
        return float(sum(p * -np.log(np.dot(x.Q, np.exp(-c / x.lam))) for p, c in zip(x.P, x.cost)))

    records = verify_suite(20, seed=0, closed_form=no_lambda)
    bad = [r for r in records if r["check"] == "closed_form_vs_brute_force" and not r["ok"]]
    assert len(bad) >= 10
    assert max(r["gap"] for r in bad) > 1e-3


def test_projection_identity_with_independent_kl():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pi = TransportPlan(rng.dirichlet(np.ones(6)).reshape(2, 3))
        Q = rng.dirichlet(np.ones(3))
        d_proj, d_orig = marginal_projection_gap(pi, pi.row_marginal, Q)
        pm = pi.matrix.ravel()
        ref = np.sum(pm * np.log(pm / np.outer(pi.row_marginal, Q).ravel()))
        assert d_orig == pytest.approx(ref, abs=1e-12)
        assert d_proj <= d_orig + 1e-12
        assert abs((d_orig - d_proj) - kl_divergence(pi.col_marginal, Q)) <= 1e-10

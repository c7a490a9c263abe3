"""OT solvers against enumeration oracles, plus feasibility and scaling laws."""

from __future__ import annotations

import numpy as np
import pytest

from docmbr import EntropicParams, solve_ewd, solve_la, solve_wd

from oracles import la_enumeration, random_probability_vector, wd_vertex_enumeration


def _random_instance(rng, m, n):
    C = rng.random((m, n))
    return C, random_probability_vector(rng, m), random_probability_vector(rng, n)


# --- linear assignment -------------------------------------------------------

def test_la_zero_cost_perfect_matching():
    plan = solve_la([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5], [0.5, 0.5])
    assert plan.mapping == (0, 1)
    assert plan.objective == 0.0


def test_la_single_row_picks_cheapest_column():
    plan = solve_la([[0.2, 0.9]], [1.0], [0.5, 0.5])
    assert plan.mapping == (0,)
    assert plan.objective == pytest.approx(0.2, abs=1e-12)


def test_la_injective_when_fewer_rows():
    # Both rows prefer column 0; injectivity forces them apart.
    plan = solve_la([[0.1, 0.2, 0.9], [0.1, 0.8, 0.9]], [0.5, 0.5],
                    [1 / 3] * 3)
    assert len(set(plan.mapping)) == 2
    assert plan.objective == pytest.approx(0.5 * 0.1 + 0.5 * 0.2, abs=1e-12)


def test_la_surjective_when_more_rows():
    # Col 1 is expensive for everyone but must still be covered.
    C = [[0.0, 1.0], [0.0, 1.0], [0.0, 0.5]]
    plan = solve_la(C, [1 / 3] * 3, [0.5, 0.5])
    assert set(plan.mapping) == {0, 1}
    assert plan.objective == pytest.approx((1 / 3) * 0.5, abs=1e-12)


def test_la_against_enumeration_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m, n = rng.integers(1, 6, size=2)
        C, a, b = _random_instance(rng, int(m), int(n))
        plan = solve_la(C, a, b)
        assert plan.objective == pytest.approx(la_enumeration(C, a, b), abs=1e-9)
        # The mapping realizes the objective and respects the regime.
        realized = sum(a[i] * C[i, j] for i, j in enumerate(plan.mapping))
        assert realized == pytest.approx(plan.objective, abs=1e-12)
        if m <= n:
            assert len(set(plan.mapping)) == m
        else:
            assert set(plan.mapping) == set(range(int(n)))
        # Coupling rows place full mass on one column.
        for i, j in enumerate(plan.mapping):
            assert plan.coupling[i, j] == a[i]
            assert plan.coupling[i].sum() == a[i]


# --- exact Wasserstein -------------------------------------------------------

def test_wd_identity_is_zero():
    C = np.array([[0.0, 0.7], [0.7, 0.0]])
    plan = solve_wd(C, [0.5, 0.5], [0.5, 0.5])
    assert plan.objective == 0.0


def test_wd_reorder_anti_diagonal():
    plan = solve_wd([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5], [0.5, 0.5])
    assert plan.objective == 0.0
    assert plan.coupling[0, 1] == pytest.approx(0.5) and plan.coupling[1, 0] == pytest.approx(0.5)


def test_wd_merge_instance_splits_mass():
    plan = solve_wd([[0.2, 0.2]], [1.0], [0.5, 0.5])
    assert plan.coupling.tolist() == [[0.5, 0.5]]
    assert plan.objective == pytest.approx(0.2, abs=1e-12)
    # With uneven costs WD pays the average while LA picks the cheapest.
    wd = solve_wd([[0.1, 0.3]], [1.0], [0.5, 0.5])
    la = solve_la([[0.1, 0.3]], [1.0], [0.5, 0.5])
    assert wd.objective == pytest.approx(0.2, abs=1e-12)
    assert la.objective == pytest.approx(0.1, abs=1e-12)
    assert wd.objective == pytest.approx(wd_vertex_enumeration([[0.1, 0.3]], [1.0], [0.5, 0.5]), abs=1e-9)
    assert la.objective == pytest.approx(la_enumeration([[0.1, 0.3]], [1.0], [0.5, 0.5]), abs=1e-9)


def test_wd_one_by_one_bypass():
    plan = solve_wd([[0.37]], [1.0], [1.0])
    assert plan.coupling.tolist() == [[1.0]]
    assert plan.objective == 0.37


def test_wd_against_vertex_enumeration_with_certificate():
    rng = np.random.default_rng(12)
    for _ in range(200):
        m, n = rng.integers(1, 5, size=2)
        C, a, b = _random_instance(rng, int(m), int(n))
        plan = solve_wd(C, a, b)
        assert plan.objective == pytest.approx(wd_vertex_enumeration(C, a, b), abs=1e-9)
        # Marginal feasibility.
        assert np.abs(plan.coupling.sum(axis=1) - a).max() < 1e-8
        assert np.abs(plan.coupling.sum(axis=0) - b).max() < 1e-8
        # Dual feasibility plus complementary slackness on the support.
        reduced = C - plan.dual_row[:, None] - plan.dual_col[None, :]
        assert reduced.min() > -1e-7
        support = plan.coupling > 1e-12
        if support.any():
            assert np.abs(reduced[support]).max() < 1e-7
        # Objective consistency with the coupling.
        assert plan.objective == pytest.approx(float((plan.coupling * C).sum()), abs=1e-9)


def test_wd_beats_any_handmade_feasible_plan():
    rng = np.random.default_rng(13)
    from docmbr.transport import _northwest_corner
    for _ in range(100):
        m, n = rng.integers(2, 6, size=2)
        C, a, b = _random_instance(rng, int(m), int(n))
        nw_plan, _ = _northwest_corner(a, b)
        assert solve_wd(C, a, b).objective <= float((nw_plan * C).sum()) + 1e-12


def test_wd_symmetry_under_transpose():
    rng = np.random.default_rng(14)
    for _ in range(100):
        m, n = rng.integers(1, 6, size=2)
        C, a, b = _random_instance(rng, int(m), int(n))
        fwd = solve_wd(C, a, b).objective
        bwd = solve_wd(C.T, b, a).objective
        assert fwd == pytest.approx(bwd, abs=1e-9)


def test_objective_scales_linearly_with_cost():
    rng = np.random.default_rng(15)
    for _ in range(60):
        m, n = rng.integers(1, 5, size=2)
        C, a, b = _random_instance(rng, int(m), int(n))
        base_wd = solve_wd(C, a, b).objective
        base_la = solve_la(C, a, b).objective
        for alpha in (0.25, 0.5, 2 ** -3):  # powers of two scale floats exactly
            assert solve_wd(alpha * C, a, b).objective == pytest.approx(alpha * base_wd, abs=1e-12)
            assert solve_la(alpha * C, a, b).objective == pytest.approx(alpha * base_la, abs=1e-12)


# --- entropic Wasserstein ----------------------------------------------------

def test_ewd_huge_epsilon_approaches_product_measure():
    rng = np.random.default_rng(16)
    for _ in range(20):
        C, a, b = _random_instance(rng, 4, 4)
        plan = solve_ewd(C, a, b, EntropicParams(epsilon=1e6))
        assert np.abs(plan.coupling - np.outer(a, b)).max() < 1e-6
        assert plan.kl_penalty >= 0.0


def test_ewd_small_epsilon_approaches_exact_cost():
    rng = np.random.default_rng(17)
    for _ in range(10):
        C, a, b = _random_instance(rng, 4, 4)
        exact = solve_wd(C, a, b).objective
        plan = solve_ewd(C, a, b, EntropicParams(epsilon=1e-3))
        assert abs(plan.objective - exact) < 1e-2


def test_ewd_marginals_and_kl_reporting():
    rng = np.random.default_rng(18)
    for _ in range(50):
        m, n = rng.integers(2, 6, size=2)
        C, a, b = _random_instance(rng, int(m), int(n))
        plan = solve_ewd(C, a, b, EntropicParams(epsilon=0.1))
        assert plan.converged
        assert np.abs(plan.coupling.sum(axis=1) - a).max() < 1e-8
        assert np.abs(plan.coupling.sum(axis=0) - b).max() < 1e-8
        assert plan.objective == pytest.approx(float((plan.coupling * C).sum()), abs=1e-9)
        assert plan.kl_penalty >= 0.0
        assert plan.total_objective == plan.objective + plan.kl_penalty


def test_ewd_nonconvergence_is_flagged_not_raised():
    rng = np.random.default_rng(19)
    C, a, b = _random_instance(rng, 4, 4)
    plan = solve_ewd(C, a, b, EntropicParams(epsilon=1e-4, max_iterations=3))
    assert not plan.converged
    assert plan.iterations == 3
    assert np.isfinite(plan.objective)


def test_ewd_forced_coupling_for_single_row():
    plan = solve_ewd([[0.4, 0.6]], [1.0], [0.5, 0.5], EntropicParams(epsilon=0.1))
    assert plan.coupling.tolist() == [[0.5, 0.5]]
    assert plan.objective == pytest.approx(0.5, abs=1e-12)
    assert plan.kl_penalty == 0.0


def test_entropic_params_validation():
    with pytest.raises(ValueError):
        EntropicParams(epsilon=0.0)
    with pytest.raises(ValueError):
        EntropicParams(epsilon=0.1, tolerance=0.0)
    with pytest.raises(ValueError):
        EntropicParams(epsilon=0.1, max_iterations=0)


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solve_wd([[-0.5]], [1.0], [1.0])  # negative cost
    with pytest.raises(ValueError):
        solve_wd([[0.5, 0.5]], [1.0], [0.9, 0.9])  # weights that do not sum to 1
    with pytest.raises(ValueError):
        solve_wd([[0.5]], [1.0], [0.5, 0.5])  # length mismatch
    with pytest.raises(ValueError):
        solve_wd([[np.nan]], [1.0], [1.0])

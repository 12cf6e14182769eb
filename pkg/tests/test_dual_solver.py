import math

import numpy as np
import pytest

from mmwassoc.dual_solver import (
    client_subproblem,
    convergence_bound,
    dual_value,
    duality_gap_bound,
    project_simplex,
    run_daa,
    run_daa_distributed,
    subgradient,
    trace_csv_lines,
)
from mmwassoc.exact import solve_lp_relaxation
from mmwassoc.instance import example1_instance, example2_instance, instance_from_beta, make_assignment
from oracles import brute_force, projection_kkt_violation, random_full_instance, random_subset_instance


def pair_instance():
    # client 0: betas (0.4, 0.6); client 1: betas (0.5, 0.5); both see both APs
    return instance_from_beta(2, 2, {(0, 0): 0.4, (1, 0): 0.6, (0, 1): 0.5, (1, 1): 0.5})


def test_client_subproblem_picks_cheapest_product():
    inst = pair_instance()
    assert client_subproblem(inst, np.array([0.5, 0.5]), 0) == 0  # 0.20 < 0.30


def test_client_subproblem_zero_price_wins():
    inst = pair_instance()
    assert client_subproblem(inst, np.array([0.0, 1.0]), 0) == 0


def test_client_subproblem_tie_breaks_to_smallest_index():
    inst = pair_instance()
    assert client_subproblem(inst, np.array([0.5, 0.5]), 1) == 0


def test_dual_value_sums_per_client_minima():
    inst = pair_instance()
    assert dual_value(inst, np.array([0.5, 0.5])) == pytest.approx(0.20 + 0.25, abs=1e-12)
    single = instance_from_beta(1, 1, {(0, 0): 0.5})
    assert dual_value(single, np.array([1.0])) == pytest.approx(0.5, abs=1e-12)


def test_dual_value_at_vertex_counts_only_pinned_clients():
    # client 0 pinned to AP 0; clients 1, 2 see both APs
    inst = instance_from_beta(
        2, 3, {(0, 0): 0.7, (0, 1): 0.4, (1, 1): 0.9, (0, 2): 0.3, (1, 2): 0.8}
    )
    assert dual_value(inst, np.array([1.0, 0.0])) == pytest.approx(0.7, abs=1e-12)
    assert dual_value(inst, np.array([0.0, 1.0])) == pytest.approx(0.0, abs=1e-12)


def test_subgradient_is_negative_load():
    inst = instance_from_beta(2, 2, {(0, 0): 0.3, (0, 1): 0.2, (1, 1): 0.9})
    a = make_assignment(inst, [0, 0])
    u = subgradient(inst, a)
    assert u == pytest.approx([-0.5, 0.0], abs=1e-12)
    # -u recomputed per AP equals the per-AP utilization of the assignment
    assert (-u).max() == pytest.approx(a.objective, abs=1e-12)


def test_project_simplex_fixes_members():
    v = np.array([0.2, 0.5, 0.3])
    assert project_simplex(v) == pytest.approx(v, abs=1e-15)


def test_project_simplex_symmetry_and_clamp():
    assert project_simplex(np.array([0.6, 0.6])) == pytest.approx([0.5, 0.5], abs=1e-15)
    assert project_simplex(np.array([1.2, -0.2])) == pytest.approx([1.0, 0.0], abs=1e-15)


def test_project_simplex_kkt_idempotence_nonexpansiveness():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        v = rng.normal(0.0, 3.0, size=n)
        x = project_simplex(v)
        assert x.min() >= 0.0
        assert x.sum() == pytest.approx(1.0, abs=1e-9)
        assert projection_kkt_violation(v, x, rng) <= 1e-9
        assert project_simplex(x) == pytest.approx(x, abs=1e-12)
        w = rng.normal(0.0, 3.0, size=n)
        assert np.linalg.norm(project_simplex(v) - project_simplex(w)) <= np.linalg.norm(
            v - w
        ) + 1e-12


def test_project_simplex_rejects_bad_input():
    with pytest.raises(ValueError):
        project_simplex(np.array([np.nan, 0.5]))
    with pytest.raises(ValueError):
        project_simplex(np.array([np.inf, 0.5]))
    with pytest.raises(ValueError):
        project_simplex(np.array([]))


def test_run_daa_solves_chain_fixture():
    inst = example1_instance(3, 0.5)
    report = run_daa(inst, max_iters=2000, step_scale=1.0)
    assert report.dual_value == pytest.approx(0.5, abs=1e-3)
    assert report.primal_value == pytest.approx(0.5, abs=1e-3)
    assert report.gap_certificate >= 0.0


def test_run_daa_single_client_converges_immediately():
    inst = instance_from_beta(1, 1, {(0, 0): 0.42})
    report = run_daa(inst, max_iters=1)
    assert report.primal_value == pytest.approx(0.42, abs=1e-15)
    assert report.dual_value == pytest.approx(0.42, abs=1e-15)
    assert report.assignment.ap_of_client == (0,)


def test_run_daa_trace_sandwiches_brute_force_optimum():
    rng = np.random.default_rng(7)
    inst = random_full_instance(rng, n_lo=2, n_hi=2, m_lo=6, m_hi=6)
    p_star, _ = brute_force(inst)
    report = run_daa(inst, max_iters=300, trace=True)
    for _k, g, t_k, g_best, p_best in report.per_iteration_trace:
        assert g <= p_star + 1e-9
        assert g_best <= p_star + 1e-9
        assert t_k >= p_star - 1e-12
        assert p_best >= p_star - 1e-12


def test_run_daa_monotone_best_values():
    rng = np.random.default_rng(11)
    inst = random_subset_instance(rng)
    report = run_daa(inst, max_iters=500, trace=True)
    trace = report.per_iteration_trace
    for prev, cur in zip(trace, trace[1:]):
        assert cur[3] >= prev[3]  # g_best nondecreasing
        assert cur[4] <= prev[4]  # p_best nonincreasing
        assert cur[3] <= cur[4] + 1e-12  # weak duality along the run


def test_run_daa_validates_arguments():
    inst = example1_instance(2, 0.5)
    with pytest.raises(ValueError):
        run_daa(inst, max_iters=0)
    with pytest.raises(ValueError):
        run_daa(inst, max_iters=10, step_scale=0.0)


def test_price_scaling_leaves_subproblems_unchanged():
    rng = np.random.default_rng(13)
    inst = random_subset_instance(rng)
    prices = rng.dirichlet(np.ones(inst.n_aps))
    for scale in (0.1, 3.0, 250.0):
        for j in range(inst.n_clients):
            assert client_subproblem(inst, prices, j) == client_subproblem(
                inst, scale * prices, j
            )


def test_distributed_matches_centralized_bitwise():
    rng = np.random.default_rng(29)
    for _ in range(8):
        inst = random_subset_instance(rng)
        central = run_daa(inst, max_iters=150, trace=True, collect_prices=True)
        dist = run_daa_distributed(inst, max_iters=150, trace=True, collect_prices=True)
        assert central.per_iteration_trace == dist.report.per_iteration_trace
        assert central.assignment == dist.report.assignment
        assert len(central.price_trace) == len(dist.report.price_trace)
        for a, b in zip(central.price_trace, dist.report.price_trace):
            assert np.array_equal(a, b)


def test_distributed_message_counts():
    inst = example2_instance(2, 0.3, 2, 0.1)
    one = run_daa_distributed(inst, max_iters=1)
    assert one.messages.broadcasts == inst.n_aps
    assert one.messages.client_signals == inst.n_clients
    assert one.messages.coordination_rounds == 1
    ten = run_daa_distributed(inst, max_iters=10)
    assert ten.messages.broadcasts == 10 * inst.n_aps
    assert ten.messages.client_signals == 10 * inst.n_clients
    assert ten.messages.coordination_rounds == 10


def test_convergence_bound_decreasing_in_k():
    inst = example1_instance(4, 0.5)
    bounds = [convergence_bound(inst, 1.0, k) for k in (1, 2, 5, 10, 100, 1000)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


def test_convergence_bound_quadratic_in_utilizations():
    inst = instance_from_beta(2, 2, {(0, 0): 0.2, (1, 1): 0.3})
    doubled = instance_from_beta(2, 2, {(0, 0): 0.4, (1, 1): 0.6})
    k, a = 50, 1.3
    harmonic = sum(1.0 / l for l in range(1, k + 1))
    g_term = convergence_bound(inst, a, k) * a * harmonic - 1.0
    g_term_doubled = convergence_bound(doubled, a, k) * a * harmonic - 1.0
    assert g_term_doubled == pytest.approx(4.0 * g_term, rel=1e-9)


def test_convergence_bound_dominates_dual_suboptimality():
    rng = np.random.default_rng(37)
    for _ in range(4):
        inst = random_full_instance(rng)
        d_star = solve_lp_relaxation(inst).optimal_value
        report = run_daa(inst, max_iters=2000, step_scale=1.0, trace=True)
        for k, _g, _t, g_best, _p in report.per_iteration_trace:
            assert d_star - g_best <= convergence_bound(inst, 1.0, k) + 1e-9


def test_duality_gap_bound_examples():
    inst = instance_from_beta(2, 2, {(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): 1.0})
    assert duality_gap_bound(inst) == pytest.approx(6.0, abs=1e-12)
    single = instance_from_beta(2, 1, {(0, 0): 0.4, (1, 0): 0.6})
    assert duality_gap_bound(single) >= 0.0


def test_duality_gap_bound_certifies_random_instances():
    rng = np.random.default_rng(41)
    for _ in range(15):
        inst = random_subset_instance(rng, m_lo=3, m_hi=8)
        p_star, _ = brute_force(inst)
        d_star = solve_lp_relaxation(inst).optimal_value
        gap = p_star - d_star
        assert -1e-9 <= gap <= duality_gap_bound(inst) + 1e-9


def test_trace_csv_lines_shape():
    inst = example1_instance(2, 0.5)
    report = run_daa(inst, max_iters=5, trace=True)
    lines = trace_csv_lines(report)
    assert lines[0] == "k,g_lambda,t_k,g_best,p_best"
    assert len(lines) == 6
    assert lines[1].startswith("1,")
    plain = run_daa(inst, max_iters=5)
    with pytest.raises(ValueError):
        trace_csv_lines(plain)

"""Ground-truth oracles: exact min-max assignment and the LP relaxation.

`solve_milp_exact` minimizes the maximum AP utilization over all integral
assignments, by direct enumeration when the search space is small and by
depth-first branch-and-bound otherwise.  `solve_lp_relaxation` solves the
continuous relaxation with a two-phase dense tableau simplex (Bland's rule,
no external solver, bit-reproducible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import Assignment, Instance, make_assignment, per_ap_loads

__all__ = [
    "ExactResult",
    "NodeBudgetExceeded",
    "enumerate_assignments",
    "branch_and_bound",
    "solve_milp_exact",
    "solve_lp_relaxation",
    "lp_cs_residual",
]

ENUMERATION_LIMIT = 1_000_000  # assignments; beyond this the search branches
DEFAULT_NODE_BUDGET = 20_000_000

_RC_TOL = 1e-9  # reduced-cost tolerance
_PIV_TOL = 1e-10


@dataclass
class ExactResult:
    """Certified optimum: integral assignment (MILP) or fractional point (LP)."""

    optimal_value: float
    assignment: Assignment | None = None
    fractional: dict[tuple[int, int], float] | None = None
    nodes_explored: int = 0
    duals: np.ndarray | None = None  # LP row duals (N AP rows, then M client rows)


class NodeBudgetExceeded(RuntimeError):
    """Search budget ran out; carries the best incumbent found so far."""

    def __init__(self, incumbent: ExactResult) -> None:
        self.incumbent = incumbent
        super().__init__(
            f"node budget exhausted after {incumbent.nodes_explored} nodes; "
            f"incumbent objective {incumbent.optimal_value}"
        )


def enumerate_assignments(inst: Instance, limit: int = ENUMERATION_LIMIT) -> ExactResult:
    """Exhaustive minimum over every one-AP-per-client assignment.

    Grows a (combinations, n_aps) load table client by client; clients added
    later vary fastest, so the reported argmin is the lexicographically first
    optimum in candidate-set order.
    """
    product = inst.candidate_product()
    if product > limit:
        raise ValueError(
            f"search space {product:.3g} exceeds the enumeration limit {limit}"
        )
    count = int(round(product))
    loads = np.zeros((1, inst.n_aps))
    for j, cands in enumerate(inst.candidates_of_client):
        contrib = np.zeros((len(cands), inst.n_aps))
        for pos, i in enumerate(cands):
            contrib[pos, i] = inst.beta[(i, j)]
        loads = (loads[:, None, :] + contrib[None, :, :]).reshape(-1, inst.n_aps)
    objectives = loads.max(axis=1, initial=0.0)
    best = int(np.argmin(objectives))
    # decode the mixed-radix combination index back into per-client choices
    choice: list[int] = []
    idx = best
    for cands in reversed(inst.candidates_of_client):
        choice.append(cands[idx % len(cands)])
        idx //= len(cands)
    choice.reverse()
    return ExactResult(
        optimal_value=float(objectives[best]),
        assignment=make_assignment(inst, choice),
        nodes_explored=max(count, 1),
    )


def _greedy_assignment(inst: Instance, order: list[int]) -> list[int]:
    """Longest-processing-time style warm start: hardest clients first, each
    to its least-loaded candidate AP."""
    loads = [0.0] * inst.n_aps
    ap_of_client = [-1] * inst.n_clients
    for j in order:
        best_i, best_load = -1, math.inf
        for i in inst.candidates_of_client[j]:
            new = loads[i] + inst.beta[(i, j)]
            if new < best_load:
                best_i, best_load = i, new
        ap_of_client[j] = best_i
        loads[best_i] = best_load
    return ap_of_client


class _SearchDone(Exception):
    """Internal: the incumbent met a certified lower bound, stop searching."""


def branch_and_bound(
    inst: Instance,
    node_budget: int = DEFAULT_NODE_BUDGET,
    warm_start: Assignment | None = None,
    lower_bound: float | None = None,
) -> ExactResult:
    """Depth-first branch-and-bound on the client choices.

    Single-candidate clients are forced up front; branching runs over the
    remaining clients in descending order of their cheapest utilization,
    children ordered by resulting load.  A node is cut when neither of its
    lower bounds (current partial maximum; load-averaging bound on the
    forced remaining utilization, i.e. the uniform-price dual value of the
    subtree) can beat the incumbent.  `lower_bound`, when given, must be a
    certified bound on the optimum (e.g. the relaxation value): the search
    stops as soon as the incumbent is within 1e-12 of it.
    """
    n = inst.n_aps
    cheapest = [
        min(inst.beta[(i, j)] for i in cands)
        for j, cands in enumerate(inst.candidates_of_client)
    ]
    base_loads = [0.0] * n
    base_map = [-1] * inst.n_clients
    branchable = []
    for j, cands in enumerate(inst.candidates_of_client):
        if len(cands) == 1:
            base_map[j] = cands[0]
            base_loads[cands[0]] += inst.beta[(cands[0], j)]
        else:
            branchable.append(j)
    order = sorted(branchable, key=lambda j: -cheapest[j])
    options = [
        [(inst.beta[(i, j)], i) for i in inst.candidates_of_client[j]] for j in order
    ]
    depth_count = len(order)
    # forced utilization of the not-yet-branched suffix, and its largest term
    suffix_sum = [0.0] * (depth_count + 1)
    suffix_max = [0.0] * (depth_count + 1)
    for d in range(depth_count - 1, -1, -1):
        rho = cheapest[order[d]]
        suffix_sum[d] = suffix_sum[d + 1] + rho
        suffix_max[d] = max(suffix_max[d + 1], rho)

    greedy_order = sorted(range(inst.n_clients), key=lambda j: -cheapest[j])
    incumbent_map = _greedy_assignment(inst, greedy_order)
    incumbent_val = float(per_ap_loads(inst, incumbent_map).max(initial=0.0))
    if warm_start is not None:
        ws_val = float(per_ap_loads(inst, warm_start.ap_of_client).max(initial=0.0))
        if ws_val < incumbent_val:
            incumbent_val = ws_val
            incumbent_map = list(warm_start.ap_of_client)

    loads = base_loads
    partial_map = base_map
    nodes = 0
    done_at = -math.inf if lower_bound is None else lower_bound + 1e-12

    def result() -> ExactResult:
        return ExactResult(
            optimal_value=incumbent_val,
            assignment=make_assignment(inst, incumbent_map),
            nodes_explored=nodes,
        )

    def descend(depth: int, partial_max: float, partial_total: float) -> None:
        nonlocal incumbent_val, incumbent_map, nodes
        if depth == depth_count:
            if partial_max < incumbent_val:
                final = list(partial_map)
                incumbent_val = float(per_ap_loads(inst, final).max(initial=0.0))
                incumbent_map = final
                if incumbent_val <= done_at:
                    raise _SearchDone
            return
        j = order[depth]
        children = sorted((loads[i] + b, b, i) for b, i in options[depth])
        for new_load, b, i in children:
            nodes += 1
            if nodes > node_budget:
                raise NodeBudgetExceeded(result())
            child_max = new_load if new_load > partial_max else partial_max
            child_total = partial_total + b
            bound = (child_total + suffix_sum[depth + 1]) / n
            if child_max > bound:
                bound = child_max
            if suffix_max[depth + 1] > bound:
                bound = suffix_max[depth + 1]
            if bound >= incumbent_val:
                continue
            loads[i] = new_load
            partial_map[j] = i
            descend(depth + 1, child_max, child_total)
            loads[i] = new_load - b
            partial_map[j] = -1

    try:
        if incumbent_val > done_at:
            descend(
                0,
                max(base_loads, default=0.0),
                float(sum(base_loads)),
            )
    except _SearchDone:
        pass
    return result()


def solve_milp_exact(
    inst: Instance,
    budget: int = DEFAULT_NODE_BUDGET,
    enumeration_limit: int = ENUMERATION_LIMIT,
    warm_start: Assignment | None = None,
    lower_bound: float | None = None,
) -> ExactResult:
    """Exact minimum of the max AP utilization over integral assignments.

    Enumerates when the assignment space fits `enumeration_limit`, otherwise
    branch-and-bound within `budget` nodes (NodeBudgetExceeded carries the
    incumbent when the budget runs out).
    """
    if inst.candidate_product() <= min(enumeration_limit, budget):
        return enumerate_assignments(inst, limit=enumeration_limit)
    return branch_and_bound(
        inst, node_budget=budget, warm_start=warm_start, lower_bound=lower_bound
    )


def _two_phase_simplex(
    a_mat: np.ndarray, b: np.ndarray, c: np.ndarray
) -> tuple[np.ndarray, float, list[int], int]:
    """min c@x s.t. a_mat@x = b (b >= 0), x >= 0, by the tableau method.

    Bland's rule on both the entering and leaving choice precludes cycling.
    Returns (x, objective, basis column per row, pivot count).
    """
    m, n = a_mat.shape
    # phase 1: artificial identity basis, minimize the artificial sum
    tab = np.hstack([a_mat.astype(float), np.eye(m), b.reshape(-1, 1).astype(float)])
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    pivots = _simplex_core(tab, basis, cost1)
    if cost1[basis] @ tab[:, -1] > 1e-7:
        raise RuntimeError("LP infeasible (artificials remain positive)")
    # drive any zero-level artificials out of the basis
    for row, col in enumerate(basis):
        if col >= n:
            pivot_col = next(
                (jj for jj in range(n) if abs(tab[row, jj]) > _PIV_TOL), None
            )
            if pivot_col is None:
                raise RuntimeError("redundant row left an artificial in the basis")
            _pivot(tab, row, pivot_col)
            basis[row] = pivot_col
    tab = np.hstack([tab[:, :n], tab[:, -1:]])
    cost2 = np.asarray(c, dtype=float)
    pivots += _simplex_core(tab, basis, cost2)
    x = np.zeros(n)
    for row, col in enumerate(basis):
        x[col] = tab[row, -1]
    return x, float(cost2 @ x), basis, pivots


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row, :] /= tab[row, col]
    other = np.arange(tab.shape[0]) != row
    tab[other, :] -= np.outer(tab[other, col], tab[row, :])


def _simplex_core(tab: np.ndarray, basis: list[int], cost: np.ndarray) -> int:
    """Iterate pivots until no reduced cost is below -tol.  Returns pivot count."""
    n_cols = tab.shape[1] - 1
    pivots = 0
    while True:
        reduced = cost[:n_cols] - cost[basis] @ tab[:, :n_cols]
        violating = np.flatnonzero(reduced < -_RC_TOL)
        if violating.size == 0:
            return pivots
        entering = int(violating[0])  # Bland: smallest violating index
        column = tab[:, entering]
        ratios = [
            (tab[r, -1] / column[r], basis[r], r)
            for r in range(tab.shape[0])
            if column[r] > _PIV_TOL
        ]
        if not ratios:
            raise RuntimeError("LP unbounded")  # cannot happen for this model
        _, _, leave_row = min(ratios)
        _pivot(tab, leave_row, entering)
        basis[leave_row] = entering
        pivots += 1


def _lp_matrix(inst: Instance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard form of the relaxation.

    Columns: t, one per stored pair (client-major order), one slack per AP.
    Rows: per-AP capacity equalities (load - t + slack = 0), then per-client
    convexity equalities (choices sum to 1).  The x <= 1 box constraints are
    implied by the convexity rows, so no explicit upper-bound rows.
    """
    pairs = inst.pairs
    n, m, p = inst.n_aps, inst.n_clients, pairs.beta.size
    a_mat = np.zeros((n + m, 1 + p + n))
    a_mat[:n, 0] = -1.0
    for idx in range(p):
        a_mat[pairs.ap[idx], 1 + idx] = pairs.beta[idx]
        a_mat[n + pairs.client[idx], 1 + idx] = 1.0
    a_mat[:n, 1 + p : 1 + p + n] = np.eye(n)
    b = np.concatenate([np.zeros(n), np.ones(m)])
    c = np.zeros(1 + p + n)
    c[0] = 1.0
    return a_mat, b, c


def solve_lp_relaxation(inst: Instance) -> ExactResult:
    """Optimal value of the continuous relaxation (equals the dual optimum)."""
    a_mat, b, c = _lp_matrix(inst)
    x, obj, basis, pivots = _two_phase_simplex(a_mat, b, c)
    pairs = inst.pairs
    fractional = {
        (int(pairs.ap[idx]), int(pairs.client[idx])): float(x[1 + idx])
        for idx in range(pairs.beta.size)
    }
    basis_cols = a_mat[:, basis]
    duals = np.linalg.solve(basis_cols.T, c[basis])
    return ExactResult(
        optimal_value=obj,
        fractional=fractional,
        nodes_explored=pivots,
        duals=duals,
    )


def lp_cs_residual(inst: Instance, result: ExactResult) -> float:
    """Largest primal/dual/complementary-slackness violation of an LP solution."""
    if result.fractional is None or result.duals is None:
        raise ValueError("result does not carry an LP solution with duals")
    a_mat, b, c = _lp_matrix(inst)
    pairs = inst.pairs
    p = pairs.beta.size
    x = np.zeros(1 + p + inst.n_aps)
    x[0] = result.optimal_value
    for idx in range(p):
        x[1 + idx] = result.fractional[(int(pairs.ap[idx]), int(pairs.client[idx]))]
    # recover the slack values from the AP rows
    x[1 + p :] = b[: inst.n_aps] - a_mat[: inst.n_aps, : 1 + p] @ x[: 1 + p]
    residual = float(np.max(np.abs(a_mat @ x - b), initial=0.0))
    residual = max(residual, float(np.max(-x, initial=0.0)))  # x >= 0
    reduced = c - result.duals @ a_mat
    residual = max(residual, float(np.max(-reduced, initial=0.0)))  # dual feasibility
    residual = max(residual, float(np.max(np.abs(reduced * x), initial=0.0)))
    return residual

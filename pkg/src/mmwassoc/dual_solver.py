"""Dual decomposition solver for the min-max AP-utilization association problem.

The epigraph MILP is dualized on the per-AP capacity constraints; the dual
prices live on the unit simplex.  Each iteration solves every client's
closed-form subproblem (pick the AP minimizing beta*price), accumulates the
per-AP subgradient, and re-projects the prices after a diminishing a/k step.
Every iterate is primal feasible, so the loop also tracks the best integral
assignment seen so far.

The distributed variant runs the identical arithmetic staged as protocol
rounds (AP price broadcast, client decision, binary client signal, per-AP
accumulation, AP-coordinated projection) and counts the messages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import Assignment, Instance

__all__ = [
    "DualState",
    "SolveReport",
    "MessageCounts",
    "DistributedRun",
    "client_subproblem",
    "dual_value",
    "subgradient",
    "project_simplex",
    "run_daa",
    "run_daa_distributed",
    "convergence_bound",
    "duality_gap_bound",
    "trace_csv_lines",
]

TRACE_COLUMNS = ("k", "g_lambda", "t_k", "g_best", "p_best")


@dataclass
class DualState:
    """Mutable state of one solver run.

    `best_dual` is nondecreasing and `best_primal` nonincreasing in the
    iteration counter; weak duality keeps best_dual <= best_primal.
    """

    prices: np.ndarray  # per-AP prices on the unit simplex
    iteration: int  # iterations completed
    best_dual: float
    best_primal: float
    best_assignment: tuple[int, ...] | None
    step_scale: float  # a in the a/k step schedule


@dataclass
class SolveReport:
    """Outcome of a solver run: certified dual/primal values and the gap."""

    iterations_run: int
    dual_value: float  # best dual objective seen
    primal_value: float  # best feasible max-utilization seen
    assignment: Assignment
    gap_certificate: float  # primal_value - dual_value, always >= 0
    per_iteration_trace: list[tuple[int, float, float, float, float]] | None = None
    price_trace: list[np.ndarray] | None = None


@dataclass
class MessageCounts:
    """Signalling volume of a distributed run."""

    broadcasts: int = 0  # AP price broadcasts to local clients
    client_signals: int = 0  # binary client-to-chosen-AP signals
    coordination_rounds: int = 0  # AP-to-AP rounds for the projection


@dataclass
class DistributedRun:
    report: SolveReport
    messages: MessageCounts


def client_subproblem(inst: Instance, prices: np.ndarray, j: int) -> int:
    """AP choice of one client at the given prices.

    Returns argmin over the client's candidates of beta*price; ties go to
    the smallest AP index.
    """
    best_ap = -1
    best_val = math.inf
    for i in inst.candidates_of_client[j]:
        val = inst.beta[(i, j)] * prices[i]
        if val < best_val:
            best_ap, best_val = i, val
    return best_ap


def dual_value(inst: Instance, prices: np.ndarray) -> float:
    """Dual objective at the given simplex prices: sum of per-client minima."""
    _, _, g, _ = _iterate_subproblems(inst, np.asarray(prices, dtype=float))
    return g


def subgradient(inst: Instance, assignment: Assignment) -> np.ndarray:
    """Per-AP subgradient component u_i = -(utilization of AP i) under the
    assignment produced by the client subproblems."""
    loads = np.zeros(inst.n_aps)
    for j, i in enumerate(assignment.ap_of_client):
        loads[i] += inst.beta[(i, j)]
    return -loads


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex.

    Sort-and-threshold rule: with the entries sorted descending, find the
    largest rho whose running mean excess stays below the entry, subtract
    that threshold everywhere, and clamp at zero.  O(N log N).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("entries must be finite")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho_candidates = np.nonzero(u * np.arange(1, v.size + 1) > css - 1.0)[0]
    rho = int(rho_candidates[-1]) + 1
    theta = (css[rho - 1] - 1.0) / rho
    return np.maximum(v - theta, 0.0)


def _iterate_subproblems(
    inst: Instance, prices: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """All client subproblems at once.

    Returns (chosen AP per client, per-AP loads, dual objective, subgradient).
    Per-client segments are AP-ascending, so taking the first minimum in each
    segment reproduces the scalar tie-break exactly.
    """
    pairs = inst.pairs
    if pairs.client.size == 0:
        loads = np.zeros(inst.n_aps)
        return np.zeros(0, dtype=np.int64), loads, 0.0, -loads
    weighted = pairs.beta * prices[pairs.ap]
    seg_min = np.minimum.reduceat(weighted, pairs.start)
    at_min = weighted <= seg_min[pairs.client]
    pair_idx = np.where(at_min, np.arange(weighted.size), weighted.size)
    winner = np.minimum.reduceat(pair_idx, pairs.start)
    chosen_ap = pairs.ap[winner]
    g = float(np.sum(weighted[winner]))
    loads = np.bincount(chosen_ap, weights=pairs.beta[winner], minlength=inst.n_aps)
    return chosen_ap, loads, g, -loads


def _run(
    inst: Instance,
    max_iters: int,
    step_scale: float,
    trace: bool,
    collect_prices: bool,
    messages: MessageCounts | None,
) -> SolveReport:
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not step_scale > 0.0:
        raise ValueError("step_scale must be strictly positive")
    if inst.n_aps < 1:
        raise ValueError("instance has no APs")
    n, m = inst.n_aps, inst.n_clients
    state = DualState(
        prices=np.full(n, 1.0 / n),
        iteration=0,
        best_dual=-math.inf,
        best_primal=math.inf,
        best_assignment=None,
        step_scale=step_scale,
    )
    trace_rows: list[tuple[int, float, float, float, float]] | None = [] if trace else None
    price_rows: list[np.ndarray] | None = [] if collect_prices else None

    for k in range(1, max_iters + 1):
        if price_rows is not None:
            price_rows.append(state.prices.copy())
        if messages is not None:
            # every AP broadcasts its price to its local clients
            messages.broadcasts += n
        chosen_ap, loads, g, u = _iterate_subproblems(inst, state.prices)
        if messages is not None:
            # each client signals (one bit) only the AP it picked, which then
            # sums beta over its signalling clients locally
            messages.client_signals += m
        t_k = float(loads.max(initial=0.0))
        if t_k < state.best_primal:
            state.best_primal = t_k
            state.best_assignment = tuple(int(i) for i in chosen_ap)
        if g > state.best_dual:
            state.best_dual = g
        state.iteration = k
        if trace_rows is not None:
            trace_rows.append((k, g, t_k, state.best_dual, state.best_primal))
        if messages is not None:
            # AP 1 acts as coordinator: gathers the u components, performs the
            # projection, and redistributes the new prices
            messages.coordination_rounds += 1
        state.prices = project_simplex(state.prices - (step_scale / k) * u)

    assert state.best_assignment is not None
    assignment = Assignment(ap_of_client=state.best_assignment, objective=state.best_primal)
    # summation rounding can push the dual a few ulps past an exactly optimal
    # primal; the certificate is still a width, never negative
    gap = max(0.0, state.best_primal - state.best_dual)
    return SolveReport(
        iterations_run=state.iteration,
        dual_value=state.best_dual,
        primal_value=state.best_primal,
        assignment=assignment,
        gap_certificate=gap,
        per_iteration_trace=trace_rows,
        price_trace=price_rows,
    )


def run_daa(
    inst: Instance,
    max_iters: int,
    step_scale: float = 1.0,
    trace: bool = False,
    collect_prices: bool = False,
) -> SolveReport:
    """Projected-subgradient dual ascent with primal recovery.

    Prices start uniform; iteration k solves all client subproblems, records
    the feasible assignment's objective t_k and the dual value, and steps
    with size step_scale/k before re-projecting.  Runs for exactly
    `max_iters` iterations (fixed budget, reproducible traces).
    """
    return _run(inst, max_iters, step_scale, trace, collect_prices, messages=None)


def run_daa_distributed(
    inst: Instance,
    max_iters: int,
    step_scale: float = 1.0,
    trace: bool = False,
    collect_prices: bool = False,
) -> DistributedRun:
    """Message-passing staging of the same iteration, with signalling counts.

    The arithmetic is identical to `run_daa` (bitwise, including tie-breaks),
    so both produce the same price trajectory and the same best assignment.
    """
    messages = MessageCounts()
    report = _run(inst, max_iters, step_scale, trace, collect_prices, messages=messages)
    return DistributedRun(report=report, messages=messages)


def convergence_bound(inst: Instance, step_scale: float, k: int) -> float:
    """A-priori ceiling on the dual suboptimality after k iterations.

    (R^2/2 + a^2 G^2 pi^2/12) / sum_{l<=k} a/l, with R = sqrt(2) the simplex
    diameter and G the subgradient norm bound sqrt(sum_i (sum_j beta_ij)^2).
    The pi^2/12 factor is a^2/2 times the Basel sum of the squared steps.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not step_scale > 0.0:
        raise ValueError("step_scale must be strictly positive")
    per_ap = np.zeros(inst.n_aps)
    for (i, _), b in inst.beta.items():
        per_ap[i] += b
    g_sq = float(np.sum(per_ap**2))
    harmonic = float(np.sum(1.0 / np.arange(1, k + 1)))
    numerator = 1.0 + step_scale**2 * g_sq * math.pi**2 / 12.0
    return numerator / (step_scale * harmonic)


def duality_gap_bound(inst: Instance) -> float:
    """Integrality-gap certificate (N+1)*(max beta + max_j min_i beta_ij).

    Independent of the number of clients, hence the relative gap vanishes as
    the network fills up.
    """
    if not inst.beta:
        return 0.0
    overall_max = max(inst.beta.values())
    worst_client_min = max(
        min(inst.beta[(i, j)] for i in cands)
        for j, cands in enumerate(inst.candidates_of_client)
    )
    return (inst.n_aps + 1) * (overall_max + worst_client_min)


def trace_csv_lines(report: SolveReport) -> list[str]:
    """Per-iteration trace as CSV lines (header + one row per iteration)."""
    if report.per_iteration_trace is None:
        raise ValueError("report carries no trace; run the solver with trace=True")
    lines = [",".join(TRACE_COLUMNS)]
    for k, g, t_k, g_best, p_best in report.per_iteration_trace:
        lines.append(f"{k},{g!r},{t_k!r},{g_best!r},{p_best!r}")
    return lines

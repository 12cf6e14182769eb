"""Benchmark association policies and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .instance import Assignment, Instance, make_assignment, per_ap_loads

__all__ = [
    "FairnessReport",
    "random_policy",
    "rssi_policy",
    "jain_index",
    "objective_value",
]


@dataclass(frozen=True)
class FairnessReport:
    """Jain's fairness index over the per-AP loads of one assignment."""

    index: float  # in [1/N, 1] whenever some load is positive
    per_ap_load: np.ndarray
    degenerate: bool = False  # all loads zero; index pinned to 1


def random_policy(inst: Instance, seed: int | np.random.Generator) -> Assignment:
    """Assign every client uniformly at random over its candidate set."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    choice = [
        cands[rng.integers(len(cands))] for cands in inst.candidates_of_client
    ]
    return make_assignment(inst, choice)


def rssi_policy(
    inst: Instance, received_powers: Mapping[tuple[int, int], float]
) -> Assignment:
    """Assign every client to its strongest received power, ties to the
    smallest AP index.  Powers must be given for every candidate pair."""
    choice = []
    for j, cands in enumerate(inst.candidates_of_client):
        best_i, best_p = -1, -np.inf
        for i in cands:
            if (i, j) not in received_powers:
                raise ValueError(f"received power missing for candidate pair ({i}, {j})")
            p = received_powers[(i, j)]
            if p > best_p:
                best_i, best_p = i, p
        choice.append(best_i)
    return make_assignment(inst, choice)


def jain_index(inst: Instance, a: Assignment) -> FairnessReport:
    """(sum Y)^2 / (N * sum Y^2) over the per-AP loads Y of the assignment.

    The all-zero-load case has no meaningful spread; it reports index 1 with
    the degenerate flag set so the metric stays total.
    """
    loads = per_ap_loads(inst, a.ap_of_client)
    total_sq = float(loads.sum()) ** 2
    denom = inst.n_aps * float((loads**2).sum())
    if denom == 0.0:
        return FairnessReport(index=1.0, per_ap_load=loads, degenerate=True)
    return FairnessReport(index=total_sq / denom, per_ap_load=loads)


def objective_value(inst: Instance, a: Assignment) -> float:
    """Maximum AP utilization under the assignment."""
    return float(per_ap_loads(inst, a.ap_of_client).max(initial=0.0))

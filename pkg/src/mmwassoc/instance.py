"""Association problem data: candidate sets, utilization matrix, pruning, fixtures.

The optimization data is sparse by construction: a (ap, client) pair exists
only when the client sits in the AP's candidate set.  Candidate sets are the
semantic ground truth; the utilization and rate matrices are dicts keyed by
those pairs.  All iteration orders are deterministic (clients ascending,
APs ascending within a client).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "InfeasibleClientError",
    "Topology",
    "Instance",
    "Assignment",
    "topology_from_positions",
    "build_instance",
    "instance_from_beta",
    "example1_instance",
    "example2_instance",
    "per_ap_loads",
    "make_assignment",
    "instance_to_json",
    "instance_from_json",
]

_REL_TOL = 1e-12


class InfeasibleClientError(ValueError):
    """A client ended up with an empty candidate set."""

    def __init__(self, client: int, reason: str = "") -> None:
        self.client = client
        msg = f"client {client} has no admissible AP"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


@dataclass(frozen=True)
class Topology:
    """AP and client planar positions plus the geometric candidate sets."""

    ap_positions: np.ndarray  # (N, 2) meters
    client_positions: np.ndarray  # (M, 2) meters
    radius: float  # cell radius, meters
    candidates_of_client: tuple[tuple[int, ...], ...]  # N_j, AP-ascending
    clients_of_ap: tuple[tuple[int, ...], ...]  # M_i, client-ascending

    @property
    def n_aps(self) -> int:
        return len(self.clients_of_ap)

    @property
    def n_clients(self) -> int:
        return len(self.candidates_of_client)

    def pairs(self) -> list[tuple[int, int]]:
        """All (ap, client) pairs, sorted by (client, ap)."""
        return [(i, j) for j, cands in enumerate(self.candidates_of_client) for i in cands]


def _invert_candidates(
    n_aps: int, candidates_of_client: Sequence[Sequence[int]]
) -> tuple[tuple[int, ...], ...]:
    clients: list[list[int]] = [[] for _ in range(n_aps)]
    for j, cands in enumerate(candidates_of_client):
        for i in cands:
            clients[i].append(j)
    return tuple(tuple(sorted(c)) for c in clients)


def topology_from_positions(
    ap_positions: np.ndarray, client_positions: np.ndarray, radius: float
) -> Topology:
    """Build a topology whose candidate sets are the within-radius disks."""
    ap_positions = np.asarray(ap_positions, dtype=float).reshape(-1, 2)
    client_positions = np.asarray(client_positions, dtype=float).reshape(-1, 2)
    if not radius > 0.0:
        raise ValueError("radius must be strictly positive")
    # (M, N) distance table; small networks, dense is fine
    diff = client_positions[:, None, :] - ap_positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    cands = []
    for j in range(client_positions.shape[0]):
        nj = tuple(int(i) for i in np.flatnonzero(dist[j] <= radius))
        if not nj:
            raise InfeasibleClientError(j, "outside every AP disk")
        cands.append(nj)
    return Topology(
        ap_positions=ap_positions,
        client_positions=client_positions,
        radius=float(radius),
        candidates_of_client=tuple(cands),
        clients_of_ap=_invert_candidates(ap_positions.shape[0], cands),
    )


@dataclass(frozen=True)
class _PairArrays:
    """Flat pair-major view of an instance, sorted by (client, ap).

    `start[j]` is the index of client j's first pair; segments are contiguous
    and AP-ascending, so the first minimum in a segment is the smallest-index
    tie-break.
    """

    client: np.ndarray  # int64 (P,)
    ap: np.ndarray  # int64 (P,)
    beta: np.ndarray  # float64 (P,)
    start: np.ndarray  # int64 (M,)


@dataclass(frozen=True)
class Instance:
    """Pruned optimization problem data.

    Every stored (ap, client) pair satisfies 0 < beta <= 1 and
    beta == demand/rate to relative 1e-12.  Immutable after construction.
    """

    n_aps: int
    n_clients: int
    beta: dict[tuple[int, int], float]
    demands: tuple[float, ...]
    rates: dict[tuple[int, int], float]
    candidates_of_client: tuple[tuple[int, ...], ...]
    clients_of_ap: tuple[tuple[int, ...], ...]

    @cached_property
    def pairs(self) -> _PairArrays:
        order = [(j, i) for j, cands in enumerate(self.candidates_of_client) for i in cands]
        client = np.array([j for j, _ in order], dtype=np.int64)
        ap = np.array([i for _, i in order], dtype=np.int64)
        beta = np.array([self.beta[(i, j)] for j, i in order], dtype=np.float64)
        sizes = np.array([len(c) for c in self.candidates_of_client], dtype=np.int64)
        start = np.concatenate(([0], np.cumsum(sizes)[:-1])) if len(sizes) else np.zeros(0, np.int64)
        return _PairArrays(client=client, ap=ap, beta=beta, start=start)

    def candidate_product(self) -> float:
        """Product of candidate-set sizes, capped at 1e18 (search-space size)."""
        prod = 1.0
        for cands in self.candidates_of_client:
            prod *= len(cands)
            if prod > 1e18:
                return 1e18
        return prod


@dataclass(frozen=True)
class Assignment:
    """One AP per client, with the max-utilization objective it achieves."""

    ap_of_client: tuple[int, ...]
    objective: float


def _assemble(
    n_aps: int,
    demands: Sequence[float],
    rates: Mapping[tuple[int, int], float],
    beta: Mapping[tuple[int, int], float],
) -> Instance:
    """Validate, prune beta > 1 pairs, and rebuild consistent candidate sets."""
    n_clients = len(demands)
    for j, q in enumerate(demands):
        if not q > 0.0:
            raise ValueError(f"demand of client {j} must be strictly positive, got {q!r}")
    kept_beta: dict[tuple[int, int], float] = {}
    kept_rates: dict[tuple[int, int], float] = {}
    for (i, j), b in beta.items():
        if not (0 <= i < n_aps and 0 <= j < n_clients):
            raise ValueError(f"pair ({i}, {j}) out of range")
        r = rates[(i, j)]
        if not r > 0.0:
            raise ValueError(f"rate of pair ({i}, {j}) must be strictly positive")
        if not b > 0.0:
            raise ValueError(f"beta of pair ({i}, {j}) must be strictly positive")
        if abs(b - demands[j] / r) > _REL_TOL * abs(b):
            raise ValueError(f"beta of pair ({i}, {j}) inconsistent with demand/rate")
        if b > 1.0:
            continue  # demand exceeds the link rate: drop the pair
        kept_beta[(i, j)] = float(b)
        kept_rates[(i, j)] = float(r)
    cands: list[tuple[int, ...]] = []
    for j in range(n_clients):
        nj = tuple(sorted(i for (i, jj) in kept_beta if jj == j))
        if not nj:
            raise InfeasibleClientError(j, "all candidate links pruned (utilization > 1)")
        cands.append(nj)
    return Instance(
        n_aps=n_aps,
        n_clients=n_clients,
        beta=kept_beta,
        demands=tuple(float(q) for q in demands),
        rates=kept_rates,
        candidates_of_client=tuple(cands),
        clients_of_ap=_invert_candidates(n_aps, cands),
    )


def build_instance(
    topo: Topology,
    demands: Sequence[float],
    link_rates: Mapping[tuple[int, int], float],
) -> Instance:
    """Compute utilizations beta = demand/rate on the topology's pairs and prune.

    `link_rates` must be defined on exactly the topology's (ap, client) pairs.
    Pairs with beta > 1 are removed from both candidate-set directions; a
    client whose whole candidate set is pruned raises InfeasibleClientError.
    """
    topo_pairs = set(topo.pairs())
    given = set(link_rates)
    if given != topo_pairs:
        missing = sorted(topo_pairs - given)[:3]
        extra = sorted(given - topo_pairs)[:3]
        raise ValueError(
            f"link_rates must cover exactly the topology pairs "
            f"(missing {missing}, unexpected {extra})"
        )
    if len(demands) != topo.n_clients:
        raise ValueError("one demand per client required")
    for (i, j), r in link_rates.items():
        if not r > 0.0:
            raise ValueError(f"rate of pair ({i}, {j}) must be strictly positive")
    beta = {(i, j): demands[j] / link_rates[(i, j)] for (i, j) in link_rates}
    return _assemble(topo.n_aps, demands, link_rates, beta)


def instance_from_beta(
    n_aps: int,
    n_clients: int,
    beta: Mapping[tuple[int, int], float],
    demands: Sequence[float] | None = None,
) -> Instance:
    """Build an instance directly from utilization values.

    Demands default to 1 for every client; rates are synthesized as
    demand/beta so the stored triple stays self-consistent.
    """
    if demands is None:
        demands = [1.0] * n_clients
    rates = {pair: demands[pair[1]] / b for pair, b in beta.items()}
    return _assemble(n_aps, demands, rates, beta)


def example1_instance(
    m: int, beta_diag: float, off_diag: Sequence[float] | None = None
) -> Instance:
    """Chain network with m clients and m APs.

    Client 0 reaches only AP 0; client j >= 1 reaches APs j-1 and j.  The
    diagonal utilizations are all `beta_diag`; the m-1 off-diagonal values
    (client j on AP j-1) default to `beta_diag` as well.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if off_diag is None:
        off_diag = [beta_diag] * (m - 1)
    if len(off_diag) != m - 1:
        raise ValueError(f"need {m - 1} off-diagonal utilizations, got {len(off_diag)}")
    beta: dict[tuple[int, int], float] = {(0, 0): beta_diag}
    for j in range(1, m):
        beta[(j - 1, j)] = off_diag[j - 1]
        beta[(j, j)] = beta_diag
    return instance_from_beta(m, m, beta)


def example2_instance(
    n: int, type1_load: float, m_per_ap: int, beta2: float
) -> Instance:
    """Two-tier network with n APs.

    Each AP serves one pinned client of utilization `type1_load` (skipped
    when the load is 0), plus n*m_per_ap roaming clients that reach every AP
    at utilization `beta2`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if m_per_ap < 0:
        raise ValueError("m_per_ap must be >= 0")
    if type1_load < 0.0:
        raise ValueError("type1_load must be >= 0")
    beta: dict[tuple[int, int], float] = {}
    j = 0
    if type1_load > 0.0:
        for i in range(n):
            beta[(i, j)] = type1_load
            j += 1
    for _ in range(n * m_per_ap):
        for i in range(n):
            beta[(i, j)] = beta2
        j += 1
    if j == 0:
        raise ValueError("instance would have no clients (zero load, m_per_ap=0)")
    return instance_from_beta(n, j, beta)


def per_ap_loads(inst: Instance, ap_of_client: Sequence[int]) -> np.ndarray:
    """Per-AP utilization sums under the given client->AP map."""
    loads = np.zeros(inst.n_aps)
    for j, i in enumerate(ap_of_client):
        loads[i] += inst.beta[(i, j)]
    return loads


def make_assignment(inst: Instance, ap_of_client: Sequence[int]) -> Assignment:
    """Validate a client->AP map against the candidate sets and price it."""
    if len(ap_of_client) != inst.n_clients:
        raise ValueError("one AP per client required")
    for j, i in enumerate(ap_of_client):
        if i not in inst.candidates_of_client[j]:
            raise ValueError(f"AP {i} is not a candidate of client {j}")
    loads = per_ap_loads(inst, ap_of_client)
    objective = float(loads.max(initial=0.0))
    return Assignment(ap_of_client=tuple(int(i) for i in ap_of_client), objective=objective)


def instance_to_json(inst: Instance) -> dict:
    """JSON document mirroring the instance, beta as {i, j, beta, rate} records."""
    links = [
        {"i": i, "j": j, "beta": inst.beta[(i, j)], "rate": inst.rates[(i, j)]}
        for j, cands in enumerate(inst.candidates_of_client)
        for i in cands
    ]
    return {
        "n_aps": inst.n_aps,
        "n_clients": inst.n_clients,
        "demands": list(inst.demands),
        "links": links,
    }


def instance_from_json(doc: Mapping) -> Instance:
    """Rebuild an instance from its JSON document, revalidating everything."""
    for key in ("n_aps", "n_clients", "demands", "links"):
        if key not in doc:
            raise ValueError(f"instance document missing field {key!r}")
    beta: dict[tuple[int, int], float] = {}
    rates: dict[tuple[int, int], float] = {}
    for rec in doc["links"]:
        for key in ("i", "j", "beta", "rate"):
            if key not in rec:
                raise ValueError(f"link record missing field {key!r}: {rec!r}")
        pair = (int(rec["i"]), int(rec["j"]))
        if pair in beta:
            raise ValueError(f"duplicate link record for pair {pair}")
        beta[pair] = float(rec["beta"])
        rates[pair] = float(rec["rate"])
    inst = _assemble(int(doc["n_aps"]), [float(q) for q in doc["demands"]], rates, beta)
    if inst.n_clients != int(doc["n_clients"]):
        raise ValueError("n_clients does not match the demand list")
    return inst

"""Restreaming linear deterministic greedy (LDG) balanced partitioning for
bidder-keyphrase graphs, with the one-sided balance variant where only the
bidder side of the bipartite graph is capacity-constrained, plus random
baselines and cut metrics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._rng import as_generator
from .core import Clustering, NeighborhoodGraph

__all__ = [
    "BipartiteGraph",
    "PartitionState",
    "CutReport",
    "rldg_partition",
    "random_balanced_partition",
    "weighted_cut_ratio",
    "project_bidder_partition",
    "load_bipartite_csv",
    "write_bipartite_csv",
    "write_partition_csv",
]


class BipartiteGraph:
    """Weighted bidder-keyphrase graph. Nodes are indexed with bidders
    first (0..n_left-1, in first-appearance order) then keyphrases.
    Duplicate edges are summed at construction."""

    def __init__(self, edges: Iterable[tuple[object, object, float]]):
        left_index: dict = {}
        right_index: dict = {}
        weights: dict[tuple[int, int], float] = {}
        for bidder_id, keyphrase_id, w in edges:
            w = float(w)
            if w < 0:
                raise ValueError(f"negative edge weight {w} on ({bidder_id}, {keyphrase_id})")
            if bidder_id not in left_index:
                left_index[bidder_id] = len(left_index)
            if keyphrase_id not in right_index:
                right_index[keyphrase_id] = len(right_index)
            key = (left_index[bidder_id], right_index[keyphrase_id])
            weights[key] = weights.get(key, 0.0) + w
        self.left_ids = list(left_index)
        self.right_ids = list(right_index)
        self.n_left = len(self.left_ids)
        self.n_right = len(self.right_ids)
        self.n_nodes = self.n_left + self.n_right
        # stream order: nodes in order of first appearance in the edge
        # stream, so bidders and their keyphrases interleave
        seen: dict[int, None] = {}
        for (u, v) in weights:
            seen.setdefault(u, None)
            seen.setdefault(v + self.n_left, None)
        self.stream_order = np.fromiter(seen, dtype=np.int64, count=len(seen))
        if not weights:
            raise ValueError("graph has no edges")
        lefts = np.fromiter((u for u, _ in weights), dtype=np.int64, count=len(weights))
        rights = np.fromiter((v for _, v in weights), dtype=np.int64, count=len(weights))
        self.edge_u = lefts
        self.edge_v = rights + self.n_left
        self.edge_w = np.fromiter(weights.values(), dtype=np.float64, count=len(weights))
        nbrs: list[list[int]] = [[] for _ in range(self.n_nodes)]
        wts: list[list[float]] = [[] for _ in range(self.n_nodes)]
        for u, v, w in zip(self.edge_u, self.edge_v, self.edge_w):
            nbrs[u].append(v)
            wts[u].append(w)
            nbrs[v].append(u)
            wts[v].append(w)
        self._nbrs = [np.asarray(a, dtype=np.int64) for a in nbrs]
        self._wts = [np.asarray(a, dtype=np.float64) for a in wts]

    def neighbors(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        return self._nbrs[node], self._wts[node]

    def node_id(self, node: int):
        if node < self.n_left:
            return self.left_ids[node]
        return self.right_ids[node - self.n_left]

    @property
    def total_weight(self) -> float:
        return float(self.edge_w.sum())

    def bidder_projection(self) -> NeighborhoodGraph:
        """Unweighted bidder-bidder graph joining bidders that share at
        least one keyphrase; this is the interference neighborhood induced
        by co-participation."""
        pairs = set()
        for kp in range(self.n_left, self.n_nodes):
            bidders = self._nbrs[kp]
            for a_pos in range(bidders.size):
                for b_pos in range(a_pos + 1, bidders.size):
                    a, b = int(bidders[a_pos]), int(bidders[b_pos])
                    pairs.add((min(a, b), max(a, b)))
        return NeighborhoodGraph(self.n_left, sorted(pairs))


@dataclass
class PartitionState:
    """Node-to-partition map with the capacity bookkeeping the greedy uses.
    Totals count all nodes; bidder counts only left-side nodes. Capacities
    are hard bounds, never exceeded."""

    part_of: np.ndarray
    n_parts: int
    n_left: int
    capacity_total: np.ndarray
    capacity_bidder: np.ndarray
    counts_total: np.ndarray
    counts_bidder: np.ndarray

    def assigned(self) -> bool:
        return bool(np.all(self.part_of >= 0))


@dataclass(frozen=True)
class CutReport:
    weighted_cut_ratio: float
    history: tuple[float, ...]  # one entry per completed pass


def weighted_cut_ratio(graph: BipartiteGraph, state: PartitionState) -> float:
    """Fraction of edge weight crossing partition boundaries."""
    if not state.assigned():
        raise ValueError("every node must be assigned a partition")
    pu = state.part_of[graph.edge_u]
    pv = state.part_of[graph.edge_v]
    total = graph.edge_w.sum()
    if total <= 0:
        raise ValueError("graph carries no edge weight")
    return float(graph.edge_w[pu != pv].sum() / total)


def random_balanced_partition(n_nodes: int, k: int, rng) -> PartitionState:
    """Uniform random assignment with part sizes differing by at most one."""
    if not 1 <= k <= n_nodes:
        raise ValueError(f"cannot split {n_nodes} nodes into {k} nonempty parts")
    gen = as_generator(rng)
    perm = gen.permutation(n_nodes)
    part_of = np.empty(n_nodes, dtype=np.int64)
    for p, chunk in enumerate(np.array_split(perm, k)):
        part_of[chunk] = p
    counts = np.bincount(part_of, minlength=k).astype(np.float64)
    return PartitionState(
        part_of=part_of,
        n_parts=k,
        n_left=n_nodes,
        capacity_total=np.full(k, np.inf),
        capacity_bidder=np.full(k, np.inf),
        counts_total=counts,
        counts_bidder=counts.copy(),
    )


def _capacity_vector(capacities, k: int, default: float) -> np.ndarray:
    if capacities is None:
        return np.full(k, float(default))
    arr = np.asarray(capacities, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(k, float(arr))
    if arr.shape != (k,):
        raise ValueError(f"capacities must be scalar or length-{k}")
    return arr.copy()


def rldg_partition(
    graph: BipartiteGraph,
    k: int,
    capacities=None,
    n_passes: int = 10,
    rng=None,
    variant: str = "weighted_bipartite",
    shuffle_each_pass: bool = False,
    min_improvement: float = 1e-4,
) -> tuple[PartitionState, CutReport]:
    """Stream every node through the greedy score, restreaming n_passes
    times (each node is pulled out of its partition before being re-scored).

    unweighted variant:         score(p) = |assigned neighbors in p| * (1 - |P_p| / H_p)
    weighted_bipartite variant: score(p) = (weight to neighbors in p) * (1 - bidders_p / H_{p,c})

    In the bipartite variant only the bidder side is capacity-bounded;
    keyphrase nodes are placed by the same score but are never blocked.
    Ties go to the least-loaded partition, then the lowest index. With a
    fixed stream order the result is deterministic; pass shuffle_each_pass
    with an rng to randomize the order instead.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if n_passes < 1:
        raise ValueError("n_passes must be at least 1")
    if variant not in ("unweighted", "weighted_bipartite"):
        raise ValueError(f"unknown variant {variant!r}")
    n = graph.n_nodes
    if variant == "unweighted":
        cap_total = _capacity_vector(capacities, k, np.ceil(n / k))
        cap_bidder = np.full(k, np.inf)
        if cap_total.sum() < n:
            raise ValueError("total capacity below node count")
    else:
        cap_total = np.full(k, np.inf)
        cap_bidder = _capacity_vector(capacities, k, np.ceil(graph.n_left / k))
        if cap_bidder.sum() < graph.n_left:
            raise ValueError("bidder capacity below bidder count")

    part_of = np.full(n, -1, dtype=np.int64)
    counts_total = np.zeros(k)
    counts_bidder = np.zeros(k)
    gen = as_generator(rng) if shuffle_each_pass else None
    base_order = graph.stream_order
    tie_index = np.arange(k)
    history: list[float] = []

    state = PartitionState(
        part_of=part_of,
        n_parts=k,
        n_left=graph.n_left,
        capacity_total=cap_total,
        capacity_bidder=cap_bidder,
        counts_total=counts_total,
        counts_bidder=counts_bidder,
    )

    for _ in range(n_passes):
        order = gen.permutation(n) if gen is not None else base_order
        for u in order:
            is_bidder = u < graph.n_left
            current = part_of[u]
            if current >= 0:
                counts_total[current] -= 1
                if is_bidder:
                    counts_bidder[current] -= 1
                part_of[u] = -1
            nbrs, wts = graph.neighbors(u)
            placed = part_of[nbrs]
            mask = placed >= 0
            affinity = np.zeros(k)
            if mask.any():
                if variant == "unweighted":
                    np.add.at(affinity, placed[mask], 1.0)
                else:
                    np.add.at(affinity, placed[mask], wts[mask])
            if variant == "unweighted":
                factor = np.maximum(1.0 - counts_total / cap_total, 0.0)
                feasible = counts_total < cap_total
            else:
                factor = np.maximum(1.0 - counts_bidder / cap_bidder, 0.0)
                feasible = counts_bidder < cap_bidder if is_bidder else np.ones(k, bool)
            score = np.where(feasible, affinity * factor, -np.inf)
            best = np.lexsort((tie_index, counts_total, -score))[0]
            if score[best] == -np.inf:
                raise ValueError("no feasible partition; capacities too tight")
            part_of[u] = best
            counts_total[best] += 1
            if is_bidder:
                counts_bidder[best] += 1
        history.append(weighted_cut_ratio(graph, state))
        if len(history) >= 2 and history[-2] - history[-1] < min_improvement:
            break

    return state, CutReport(weighted_cut_ratio=history[-1], history=tuple(history))


def project_bidder_partition(state: PartitionState, graph: BipartiteGraph) -> Clustering:
    """Clustering over bidder nodes only; partitions holding no bidders are
    dropped and indices remapped densely."""
    labels = state.part_of[: graph.n_left]
    if np.any(labels < 0):
        raise ValueError("bidder nodes must all be assigned")
    return Clustering.from_labels(labels)


def load_bipartite_csv(path) -> BipartiteGraph:
    """Edge list CSV with columns bidder_id, keyphrase_id, weight."""
    edges = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"bidder_id", "keyphrase_id", "weight"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"graph CSV must have columns {sorted(required)}")
        for row in reader:
            edges.append((row["bidder_id"], row["keyphrase_id"], float(row["weight"])))
    return BipartiteGraph(edges)


def write_bipartite_csv(graph: BipartiteGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bidder_id", "keyphrase_id", "weight"])
        for u, v, w in zip(graph.edge_u, graph.edge_v, graph.edge_w):
            writer.writerow([graph.node_id(int(u)), graph.node_id(int(v)), repr(float(w))])


def write_partition_csv(state: PartitionState, graph: BipartiteGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "partition_index"])
        for node in range(graph.n_nodes):
            writer.writerow([graph.node_id(node), int(state.part_of[node])])

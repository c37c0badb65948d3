"""Shared fixtures-in-code for the test suite: a table-driven SUTVA model,
random instance builders, and the planted bipartite graph."""

from __future__ import annotations

import numpy as np

from clusterexp.core import Assignment, Clustering, NeighborhoodGraph
from clusterexp.partitioning import BipartiteGraph


class TableModel:
    """No-interference model defined by explicit outcome tables: unit i
    yields y1[i] when treated and y0[i] otherwise."""

    def __init__(self, y1, y0):
        self.y1 = np.asarray(y1, dtype=np.float64)
        self.y0 = np.asarray(y0, dtype=np.float64)
        assert self.y1.shape == self.y0.shape

    def n_units(self) -> int:
        return self.y1.shape[0]

    def outcomes(self, z, noise_seed=None) -> np.ndarray:
        zv = z.z_units if isinstance(z, Assignment) else np.asarray(z)
        return np.where(zv == 1, self.y1, self.y0)


def random_clustering(rng: np.random.Generator, n: int, m: int) -> Clustering:
    """Random clustering with every cluster nonempty."""
    labels = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
    rng.shuffle(labels)
    return Clustering.from_labels(labels)


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4) -> NeighborhoodGraph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return NeighborhoodGraph(n, edges)


def planted_bipartite(
    seed: int,
    n_bidders: int = 100,
    n_keyphrases: int = 200,
    d_within: int = 20,
    d_cross: int = 2,
) -> BipartiteGraph:
    """Two-block bidder-keyphrase graph with a d_within : d_cross within /
    cross edge-mass ratio per bidder (unit weights)."""
    rng = np.random.default_rng(seed)
    half_b, half_k = n_bidders // 2, n_keyphrases // 2
    edges = []
    for i in range(n_bidders):
        community = 0 if i < half_b else 1
        own = np.arange(half_k) + community * half_k
        other = np.arange(half_k) + (1 - community) * half_k
        for j in rng.choice(own, d_within, replace=False):
            edges.append((f"b{i}", f"k{j}", 1.0))
        for j in rng.choice(other, d_cross, replace=False):
            edges.append((f"b{i}", f"k{j}", 1.0))
    return BipartiteGraph(edges)

"""Core types for cluster-randomized experiments: assignments, clusterings,
interference neighborhoods, and the potential-outcome model contract.

Units are indexed 0..N-1 throughout. A clustering is a partition of those
indices into M nonempty clusters with dense cluster indices 0..M-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, runtime_checkable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Assignment",
    "Clustering",
    "NeighborhoodGraph",
    "PotentialOutcomeModel",
    "ExposureProfile",
    "PartitionViolationError",
    "validate_clustering",
    "cluster_exposure",
    "total_treatment_effect",
    "read_clustering_tsv",
    "write_clustering_tsv",
]


class PartitionViolationError(ValueError):
    """A unit-to-cluster map is not a partition of the declared units."""


def _as_binary_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} entries must be exactly 0 or 1")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class Assignment:
    """Binary treatment assignment over units, optionally with the
    cluster-level vector it was derived from."""

    z_units: np.ndarray
    z_clusters: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "z_units", _as_binary_vector(self.z_units, "z_units"))
        if self.z_clusters is not None:
            object.__setattr__(
                self, "z_clusters", _as_binary_vector(self.z_clusters, "z_clusters")
            )

    @property
    def n_units(self) -> int:
        return self.z_units.shape[0]

    @property
    def n_treated(self) -> int:
        return int(self.z_units.sum())

    @staticmethod
    def all_treated(n_units: int) -> "Assignment":
        return Assignment(np.ones(n_units, dtype=np.int8))

    @staticmethod
    def all_control(n_units: int) -> "Assignment":
        return Assignment(np.zeros(n_units, dtype=np.int8))


@dataclass(frozen=True)
class Clustering:
    """Partition of units into clusters with dense indices [0, n_clusters)."""

    cluster_of: np.ndarray
    n_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.cluster_of, dtype=np.int64)
        if labels.ndim != 1:
            raise PartitionViolationError("cluster_of must be one-dimensional")
        if labels.size == 0:
            raise PartitionViolationError("clustering over zero units")
        if labels.min() < 0 or labels.max() >= self.n_clusters:
            raise PartitionViolationError(
                f"cluster indices must lie in [0, {self.n_clusters})"
            )
        if np.any(np.bincount(labels, minlength=self.n_clusters) == 0):
            raise PartitionViolationError("every cluster index must be nonempty")
        object.__setattr__(self, "cluster_of", labels)

    @classmethod
    def from_labels(cls, labels) -> "Clustering":
        """Build a clustering from arbitrary integer labels; labels are
        remapped to a dense range preserving first-appearance order."""
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise PartitionViolationError("labels must be a nonempty 1-d array")
        uniq, dense = np.unique(labels, return_inverse=True)
        # np.unique sorts; remap so dense ids follow first appearance
        first_pos = np.full(uniq.size, labels.size, dtype=np.int64)
        np.minimum.at(first_pos, dense, np.arange(labels.size))
        order = np.argsort(first_pos, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return cls(rank[dense], int(uniq.size))

    @classmethod
    def singletons(cls, n_units: int) -> "Clustering":
        return cls(np.arange(n_units), n_units)

    @classmethod
    def single_cluster(cls, n_units: int) -> "Clustering":
        return cls(np.zeros(n_units, dtype=np.int64), 1)

    @property
    def n_units(self) -> int:
        return self.cluster_of.shape[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_of, minlength=self.n_clusters)

    def members(self, cluster: int) -> np.ndarray:
        return np.nonzero(self.cluster_of == cluster)[0]

    def expand(self, z_clusters) -> Assignment:
        """Lift a cluster-level assignment to the unit level."""
        zc = _as_binary_vector(z_clusters, "z_clusters")
        if zc.shape[0] != self.n_clusters:
            raise ValueError(
                f"expected {self.n_clusters} cluster assignments, got {zc.shape[0]}"
            )
        return Assignment(zc[self.cluster_of], zc)


def validate_clustering(cluster_of, n_units: int) -> Clustering:
    """Check the partition property for a unit->cluster map and return the
    normalized clustering (dense indices, empty clusters dropped).

    Accepts either a mapping {unit: cluster} or a length-N sequence.
    """
    if isinstance(cluster_of, Mapping):
        seen = sorted(cluster_of)
        expected = list(range(n_units))
        if seen != expected:
            missing = sorted(set(expected) - set(cluster_of))
            extra = sorted(set(cluster_of) - set(expected))
            problems = []
            if missing:
                problems.append(f"missing units {missing}")
            if extra:
                problems.append(f"unknown units {extra}")
            raise PartitionViolationError("; ".join(problems))
        labels = np.array([cluster_of[i] for i in range(n_units)], dtype=np.int64)
    else:
        labels = np.asarray(cluster_of, dtype=np.int64)
        if labels.shape[0] != n_units:
            raise PartitionViolationError(
                f"expected {n_units} unit labels, got {labels.shape[0]}"
            )
    return Clustering.from_labels(labels)


def write_clustering_tsv(clustering: Clustering, path) -> None:
    """One line per unit: "unit_index<TAB>cluster_index"."""
    with open(path, "w") as fh:
        for unit, cluster in enumerate(clustering.cluster_of):
            fh.write(f"{unit}\t{cluster}\n")


def read_clustering_tsv(path) -> Clustering:
    mapping: dict[int, int] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise PartitionViolationError(
                    f"line {line_no}: expected 'unit<TAB>cluster', got {line!r}"
                )
            unit, cluster = int(parts[0]), int(parts[1])
            if unit in mapping:
                raise PartitionViolationError(f"line {line_no}: duplicate unit {unit}")
            mapping[unit] = cluster
    return validate_clustering(mapping, len(mapping))


class NeighborhoodGraph:
    """Undirected interference graph over units, no self-loops.

    Stored as a CSR adjacency so that neighborhood means vectorize. Edge
    weights are accepted for bookkeeping but exposure and neighborhood
    fractions use unweighted counts.
    """

    def __init__(self, n_units: int, edges: Iterable[tuple[int, int] | tuple[int, int, float]]):
        if n_units <= 0:
            raise ValueError("graph needs at least one unit")
        pair_weights: dict[tuple[int, int], float] = {}
        for edge in edges:
            if len(edge) == 3:
                u, v, w = edge
            else:
                u, v = edge
                w = 1.0
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on unit {u}")
            if not (0 <= u < n_units and 0 <= v < n_units):
                raise ValueError(f"edge ({u},{v}) out of range for {n_units} units")
            key = (min(u, v), max(u, v))
            pair_weights[key] = pair_weights.get(key, 0.0) + float(w)
        self.n_units = n_units
        rows, cols, data = [], [], []
        for (u, v), w in pair_weights.items():
            rows += [u, v]
            cols += [v, u]
            data += [w, w]
        self._adj = sp.csr_matrix(
            (np.asarray(data), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(n_units, n_units),
        )
        self._binary = self._adj.copy()
        self._binary.data = np.ones_like(self._binary.data)
        self.degrees = np.diff(self._adj.indptr)

    @property
    def indptr(self) -> np.ndarray:
        return self._adj.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._adj.indices

    def neighbors(self, unit: int) -> np.ndarray:
        return self._adj.indices[self._adj.indptr[unit] : self._adj.indptr[unit + 1]]

    def neighborhood_means(self, z: np.ndarray) -> np.ndarray:
        """Per-unit mean of z over the neighborhood; isolated units take
        their own value (they experience no interference)."""
        z = np.asarray(z, dtype=np.float64)
        sums = self._binary @ z
        return np.where(self.degrees > 0, sums / np.maximum(self.degrees, 1), z)


@runtime_checkable
class PotentialOutcomeModel(Protocol):
    """Behavioral contract: a deterministic map from assignments (plus an
    explicit noise seed) to an outcome vector."""

    def n_units(self) -> int: ...

    def outcomes(self, z, noise_seed=None) -> np.ndarray: ...


@dataclass(frozen=True)
class ExposureProfile:
    """Per-unit fraction of the neighborhood contained in the unit's own
    cluster, plus its population mean."""

    theta: np.ndarray
    theta_mean: float = field(init=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if np.any(theta < 0) or np.any(theta > 1):
            raise ValueError("exposure values must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta_mean", float(theta.mean()))


def cluster_exposure(clustering: Clustering, graph: NeighborhoodGraph) -> ExposureProfile:
    """Fraction of each unit's neighbors sharing its cluster (unweighted
    counts). Units with empty neighborhoods get exposure 1: they see no
    interference, so a clustering contains their neighborhood vacuously.
    """
    if clustering.n_units != graph.n_units:
        raise ValueError(
            f"clustering has {clustering.n_units} units but graph has {graph.n_units}"
        )
    labels = clustering.cluster_of
    same = (labels[graph.indices] == np.repeat(labels, graph.degrees)).astype(np.float64)
    # reduceat yields junk for empty rows; the isolated-unit branch of the
    # where() replaces those entries with exposure 1
    same_counts = np.add.reduceat(np.concatenate([same, [0.0]]), graph.indptr[:-1])
    theta = np.where(graph.degrees > 0, same_counts / np.maximum(graph.degrees, 1), 1.0)
    return ExposureProfile(theta)


def total_treatment_effect(model: PotentialOutcomeModel, noise_seed=None) -> float:
    """Mean difference between the all-treated and all-control outcomes,
    evaluated with a common noise stream so noise cancels exactly."""
    n = model.n_units()
    if n == 0:
        raise ValueError("model has an empty population")
    y_treated = model.outcomes(Assignment.all_treated(n), noise_seed=noise_seed)
    y_control = model.outcomes(Assignment.all_control(n), noise_seed=noise_seed)
    return float(np.mean(np.asarray(y_treated) - np.asarray(y_control)))

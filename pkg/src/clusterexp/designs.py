"""Randomization procedures: completely randomized assignment, cluster-based
assignment, and the two-stage experiment-of-experiments design that compares
two candidate clusterings on disjoint halves of the population.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from ._rng import as_generator
from .core import Assignment, Clustering

__all__ = [
    "DegenerateDesignError",
    "ArmSplit",
    "EoEDesign",
    "DesignDraw",
    "complete_randomization",
    "cluster_based_assignment",
    "induced_clustering",
    "eoe_assign",
    "balanced_arm_split",
    "cbr_sampler",
    "eoe_arm_sampler",
    "enumerate_cbr_draws",
]


class DegenerateDesignError(ValueError):
    """A realized design cannot support estimation (e.g. an induced
    clustering with fewer than two clusters, or an empty bucket)."""


def complete_randomization(n_units: int, n_treated: int, rng) -> Assignment:
    """Treat exactly n_treated units chosen uniformly at random."""
    if not 0 <= n_treated <= n_units:
        raise ValueError(f"n_treated={n_treated} out of range for {n_units} units")
    gen = as_generator(rng)
    z = np.zeros(n_units, dtype=np.int8)
    treated = gen.permutation(n_units)[:n_treated]
    z[treated] = 1
    return Assignment(z)


def cluster_based_assignment(clustering: Clustering, m_treated: int, rng) -> Assignment:
    """Draw a cluster-level assignment with exactly m_treated treated
    clusters, uniformly over all such vectors, and lift to units."""
    m = clustering.n_clusters
    if not 0 <= m_treated <= m:
        raise ValueError(f"m_treated={m_treated} out of range for {m} clusters")
    gen = as_generator(rng)
    z_clusters = np.zeros(m, dtype=np.int8)
    z_clusters[gen.permutation(m)[:m_treated]] = 1
    return clustering.expand(z_clusters)


@dataclass(frozen=True)
class ArmSplit:
    """Balanced completely-randomized split of units across two design arms,
    encoded as a vector of arm labels in {1, 2}. Arm 1 always receives
    floor(N/2) units so that downstream transitivity guarantees apply."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.int8)
        if not np.all((w == 1) | (w == 2)):
            raise ValueError("arm labels must be 1 or 2")
        n = w.shape[0]
        if int(np.sum(w == 1)) != n // 2:
            raise ValueError(f"arm 1 must hold exactly floor(N/2)={n // 2} units")
        object.__setattr__(self, "w", w)

    @property
    def n_units(self) -> int:
        return self.w.shape[0]

    def arm_units(self, arm: int) -> np.ndarray:
        """Indices of the units in the given arm, in ascending order."""
        if arm not in (1, 2):
            raise ValueError("arm must be 1 or 2")
        return np.nonzero(self.w == arm)[0]


def balanced_arm_split(n_units: int, rng) -> ArmSplit:
    gen = as_generator(rng)
    w = np.full(n_units, 2, dtype=np.int8)
    w[gen.permutation(n_units)[: n_units // 2]] = 1
    return ArmSplit(w)


def induced_clustering(base: Clustering, split: ArmSplit, arm: int) -> Clustering:
    """Restrict a clustering to the units of one arm, preserving
    co-membership exactly. The result is indexed over the arm's units in
    ascending global order; empty clusters are dropped."""
    units = split.arm_units(arm)
    if units.size == 0:
        raise DegenerateDesignError(f"arm {arm} holds no units")
    return Clustering.from_labels(base.cluster_of[units])


@dataclass(frozen=True)
class EoEDesign:
    """One realization of the experiment-of-experiments design: the arm
    split, both induced clusterings, the per-arm cluster assignments, and
    the resulting unit-level assignment."""

    split: ArmSplit
    induced: tuple[Clustering, Clustering]
    arm_units: tuple[np.ndarray, np.ndarray]
    z_arms: tuple[np.ndarray, np.ndarray]
    m_treated: tuple[int, int]
    assignment: Assignment

    def arm_estimation_inputs(self, arm: int) -> tuple[np.ndarray, Clustering, np.ndarray]:
        """(unit indices, clustering over those units, cluster assignment)
        for computing the arm's treatment-effect estimate."""
        k = arm - 1
        return self.arm_units[k], self.induced[k], self.z_arms[k]

    def to_json_dict(self) -> dict:
        return {
            "w": self.split.w.tolist(),
            "z": self.assignment.z_units.tolist(),
            "z1": self.z_arms[0].tolist(),
            "z2": self.z_arms[1].tolist(),
            "clusters1": {
                int(u): int(c)
                for u, c in zip(self.arm_units[0], self.induced[0].cluster_of)
            },
            "clusters2": {
                int(u): int(c)
                for u, c in zip(self.arm_units[1], self.induced[1].cluster_of)
            },
            "m_treated": list(self.m_treated),
        }


def eoe_assign(c1: Clustering, c2: Clustering, rng) -> EoEDesign:
    """Run the two-stage design: split units into two balanced arms
    uniformly at random, induce each candidate clustering on its arm, then
    cluster-randomize each arm with floor(M/2) treated clusters.

    Child streams are derived from the given rng per stage (split, arm-1
    assignment, arm-2 assignment), so each stage replays independently.
    """
    if c1.n_units != c2.n_units:
        raise ValueError("both clusterings must cover the same units")
    n = c1.n_units
    gen = as_generator(rng)
    split_rng, z1_rng, z2_rng = gen.spawn(3)
    split = balanced_arm_split(n, split_rng)

    z_full = np.zeros(n, dtype=np.int8)
    induced: list[Clustering] = []
    units_by_arm: list[np.ndarray] = []
    z_arms: list[np.ndarray] = []
    m_treated: list[int] = []
    for arm, base, arm_rng in ((1, c1, z1_rng), (2, c2, z2_rng)):
        units = split.arm_units(arm)
        sub = induced_clustering(base, split, arm)
        if sub.n_clusters < 2:
            raise DegenerateDesignError(
                f"induced clustering in arm {arm} has {sub.n_clusters} cluster(s)"
            )
        m_t = sub.n_clusters // 2
        arm_assignment = cluster_based_assignment(sub, m_t, arm_rng)
        z_full[units] = arm_assignment.z_units
        induced.append(sub)
        units_by_arm.append(units)
        z_arms.append(np.asarray(arm_assignment.z_clusters))
        m_treated.append(m_t)

    return EoEDesign(
        split=split,
        induced=(induced[0], induced[1]),
        arm_units=(units_by_arm[0], units_by_arm[1]),
        z_arms=(z_arms[0], z_arms[1]),
        m_treated=(m_treated[0], m_treated[1]),
        assignment=Assignment(z_full),
    )


@dataclass(frozen=True)
class DesignDraw:
    """What an estimator needs from one realized design: the full unit
    assignment for evaluating outcomes, and the estimation frame (unit
    subset, clustering over it, cluster-level assignment)."""

    assignment: Assignment
    clustering: Clustering
    z_clusters: np.ndarray
    units: np.ndarray | None = None  # None means all units

    def frame_outcomes(self, y: np.ndarray) -> np.ndarray:
        return y if self.units is None else y[self.units]


def cbr_sampler(clustering: Clustering, m_treated: int) -> Callable[[np.random.Generator], DesignDraw]:
    """Sampler for a direct cluster-based randomized design."""
    if clustering.n_clusters < 2:
        raise DegenerateDesignError("cluster-based design needs at least 2 clusters")
    if not 1 <= m_treated <= clustering.n_clusters - 1:
        raise ValueError("m_treated must leave both buckets nonempty")

    def draw(rng: np.random.Generator) -> DesignDraw:
        assignment = cluster_based_assignment(clustering, m_treated, rng)
        return DesignDraw(
            assignment=assignment,
            clustering=clustering,
            z_clusters=np.asarray(assignment.z_clusters),
        )

    return draw


def eoe_arm_sampler(c1: Clustering, c2: Clustering, arm: int) -> Callable[[np.random.Generator], DesignDraw]:
    """Sampler for one arm's estimate under the experiment-of-experiments
    design; the whole two-arm design is drawn each time."""
    if arm not in (1, 2):
        raise ValueError("arm must be 1 or 2")

    def draw(rng: np.random.Generator) -> DesignDraw:
        design = eoe_assign(c1, c2, rng)
        units, sub, z = design.arm_estimation_inputs(arm)
        return DesignDraw(
            assignment=design.assignment, clustering=sub, z_clusters=z, units=units
        )

    return draw


def enumerate_cbr_draws(clustering: Clustering, m_treated: int) -> Iterator[DesignDraw]:
    """All C(M, m_treated) cluster assignments of a direct design, for
    exhaustive expectation checks on small instances."""
    m = clustering.n_clusters
    if not 1 <= m_treated <= m - 1:
        raise ValueError("m_treated must leave both buckets nonempty")
    for treated in itertools.combinations(range(m), m_treated):
        z_clusters = np.zeros(m, dtype=np.int8)
        z_clusters[list(treated)] = 1
        yield DesignDraw(
            assignment=clustering.expand(z_clusters),
            clustering=clustering,
            z_clusters=z_clusters,
        )

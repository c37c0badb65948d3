"""Parametric linear interference model, its closed-form bias under
cluster-based randomization, monotonicity classification, and a generic
self-excitation checker for arbitrary outcome models.

The linear model sets, for unit i with neighborhood fraction treated rho_i,

    Y_i(Z) = alpha_i + beta_i * Z_i + gamma_i * rho_i + eps_i

Isolated units take rho_i = Z_i so the model stays total; they contribute
no interference bias.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import (
    Assignment,
    Clustering,
    ExposureProfile,
    NeighborhoodGraph,
    PotentialOutcomeModel,
    cluster_exposure,
)

__all__ = [
    "LinearInterferenceModel",
    "MonotonicityVerdict",
    "SelfExcitationReport",
    "SelfExcitationViolation",
    "linear_outcomes",
    "linear_closed_form_bias",
    "linear_closed_form_expectation",
    "classify_monotonicity",
    "self_excitation_check",
    "linear_model_from_csv",
]


def _per_unit(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or a length-{n} vector")
    return arr


def _z_vector(z) -> np.ndarray:
    if isinstance(z, Assignment):
        return z.z_units.astype(np.float64)
    arr = np.asarray(z, dtype=np.float64)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return arr


@dataclass(frozen=True)
class LinearInterferenceModel:
    """Linear-in-exposure outcome model over a neighborhood graph.
    Scalars broadcast to all units; gamma == 0 recovers a no-interference
    (SUTVA) model."""

    graph: NeighborhoodGraph
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    noise_sd: float = 0.0

    def __post_init__(self):
        n = self.graph.n_units
        object.__setattr__(self, "alpha", _per_unit(self.alpha, n, "alpha"))
        object.__setattr__(self, "beta", _per_unit(self.beta, n, "beta"))
        object.__setattr__(self, "gamma", _per_unit(self.gamma, n, "gamma"))
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")

    def n_units(self) -> int:
        return self.graph.n_units

    def outcomes(self, z, noise_seed=None) -> np.ndarray:
        zv = _z_vector(z)
        if zv.shape[0] != self.graph.n_units:
            raise ValueError(
                f"assignment has {zv.shape[0]} entries for {self.graph.n_units} units"
            )
        rho = self.graph.neighborhood_means(zv)
        y = self.alpha + self.beta * zv + self.gamma * rho
        if noise_seed is not None and self.noise_sd > 0:
            y = y + np.random.default_rng(noise_seed).normal(0.0, self.noise_sd, y.shape[0])
        return y


def linear_outcomes(model: LinearInterferenceModel, z, noise_seed=None) -> np.ndarray:
    return model.outcomes(z, noise_seed=noise_seed)


def _exposure(model: LinearInterferenceModel, clustering: Clustering) -> ExposureProfile:
    return cluster_exposure(clustering, model.graph)


def linear_closed_form_bias(model: LinearInterferenceModel, clustering: Clustering) -> float:
    """Exact bias (estimand minus expected estimate) of the cluster-based
    Horvitz-Thompson estimator under the linear model:

        bias = M / (N (M-1)) * sum_i gamma_i (1 - theta_i)

    With homogeneous gamma this reduces to gamma * M/(M-1) * (1 - mean theta).
    """
    m = clustering.n_clusters
    if m < 2:
        raise ValueError("bias is undefined for a single-cluster design")
    theta = _exposure(model, clustering).theta
    n = clustering.n_units
    return float(m / (n * (m - 1)) * np.sum(model.gamma * (1.0 - theta)))


def linear_closed_form_expectation(model: LinearInterferenceModel, clustering: Clustering) -> float:
    """Exact expected Horvitz-Thompson estimate under the linear model,
    for any fixed split of clusters between treatment and control:

        E[tau_hat] = mean(beta) + mean( gamma * (theta - (1-theta)/(M-1)) )
    """
    m = clustering.n_clusters
    if m < 2:
        raise ValueError("expectation is undefined for a single-cluster design")
    theta = _exposure(model, clustering).theta
    return float(
        np.mean(model.beta) + np.mean(model.gamma * (theta - (1.0 - theta) / (m - 1)))
    )


@dataclass(frozen=True)
class MonotonicityVerdict:
    """Direction of the estimator's bias under the linear model. `evidence`
    is sum_i gamma_i (1 - theta_i); its sign decides the direction, and its
    magnitude is the margin (zero evidence means no bias either way and is
    reported as increasing)."""

    kind: str  # "increasing" | "decreasing"
    evidence: float


def classify_monotonicity(model: LinearInterferenceModel, clustering: Clustering) -> MonotonicityVerdict:
    theta = _exposure(model, clustering).theta
    evidence = float(np.sum(model.gamma * (1.0 - theta)))
    kind = "decreasing" if evidence < 0 else "increasing"
    return MonotonicityVerdict(kind=kind, evidence=evidence)


@dataclass(frozen=True)
class SelfExcitationViolation:
    unit: int
    side: str  # "control" | "treated"
    conditional_mean: float
    extreme_value: float


@dataclass(frozen=True)
class SelfExcitationReport:
    holds: bool
    violations: tuple[SelfExcitationViolation, ...]
    n_assignments: int


def self_excitation_check(
    model: PotentialOutcomeModel,
    clustering: Clustering,
    mode: str = "exhaustive",
    n_samples: int = 1000,
    seed=0,
    tol: float = 1e-9,
) -> SelfExcitationReport:
    """Check, for every unit, that conditioned on its own treatment status
    the expected outcome over cluster assignments is bounded by the extreme
    assignments:

        E[Y_i | Z_i = 0] >= Y_i(all control)
        E[Y_i | Z_i = 1] <= Y_i(all treated)

    Expectations are over cluster-level assignments drawn as independent
    fair coins (all 2^M of them in exhaustive mode, or n_samples draws in
    monte_carlo mode), with noise off. A violation is a return value, not
    an error.
    """
    m = clustering.n_clusters
    n = clustering.n_units
    if mode not in ("exhaustive", "monte_carlo"):
        raise ValueError("mode must be 'exhaustive' or 'monte_carlo'")
    if mode == "exhaustive":
        if m > 20:
            raise ValueError("exhaustive mode enumerates 2^M assignments; M must be <= 20")
        cluster_patterns = (
            ((idx >> np.arange(m)) & 1).astype(np.int8) for idx in range(2**m)
        )
        total = 2**m
    else:
        rng = np.random.default_rng(seed)
        cluster_patterns = (
            rng.integers(0, 2, size=m).astype(np.int8) for _ in range(n_samples)
        )
        total = n_samples

    sums = np.zeros((2, n))
    counts = np.zeros((2, n))
    for z_clusters in cluster_patterns:
        assignment = clustering.expand(z_clusters)
        y = np.asarray(model.outcomes(assignment, noise_seed=None))
        own = assignment.z_units
        for side in (0, 1):
            mask = own == side
            sums[side, mask] += y[mask]
            counts[side, mask] += 1

    y0 = np.asarray(model.outcomes(Assignment.all_control(n), noise_seed=None))
    y1 = np.asarray(model.outcomes(Assignment.all_treated(n), noise_seed=None))
    violations: list[SelfExcitationViolation] = []
    for i in range(n):
        if counts[0, i] > 0:
            mean0 = sums[0, i] / counts[0, i]
            if mean0 < y0[i] - tol:
                violations.append(
                    SelfExcitationViolation(i, "control", float(mean0), float(y0[i]))
                )
        if counts[1, i] > 0:
            mean1 = sums[1, i] / counts[1, i]
            if mean1 > y1[i] + tol:
                violations.append(
                    SelfExcitationViolation(i, "treated", float(mean1), float(y1[i]))
                )
    return SelfExcitationReport(
        holds=not violations, violations=tuple(violations), n_assignments=total
    )


def linear_model_from_csv(path, graph: NeighborhoodGraph, noise_sd: float = 0.0) -> LinearInterferenceModel:
    """Load per-unit parameters from a CSV with columns unit, alpha, beta,
    gamma. Every unit of the graph must appear exactly once."""
    n = graph.n_units
    alpha = np.full(n, np.nan)
    beta = np.full(n, np.nan)
    gamma = np.full(n, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"unit", "alpha", "beta", "gamma"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"parameter CSV must have columns {sorted(required)}")
        for row in reader:
            i = int(row["unit"])
            if not 0 <= i < n:
                raise ValueError(f"unit {i} out of range for {n}-unit graph")
            if not np.isnan(alpha[i]):
                raise ValueError(f"duplicate parameter row for unit {i}")
            alpha[i] = float(row["alpha"])
            beta[i] = float(row["beta"])
            gamma[i] = float(row["gamma"])
    if np.isnan(alpha).any():
        missing = np.nonzero(np.isnan(alpha))[0]
        raise ValueError(f"missing parameter rows for units {missing.tolist()}")
    return LinearInterferenceModel(graph=graph, alpha=alpha, beta=beta, gamma=gamma, noise_sd=noise_sd)

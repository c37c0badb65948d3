"""Horvitz-Thompson point estimation for cluster-randomized designs, the
Neymann variance estimator, the normal-approximation comparison test between
two clusterings, and Monte-Carlo / exhaustive expectation machinery.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import ndtr

from ._rng import child_seeds
from .core import Clustering, PotentialOutcomeModel
from .designs import DegenerateDesignError, DesignDraw, enumerate_cbr_draws, eoe_assign

__all__ = [
    "HTEstimate",
    "VarianceEstimate",
    "ComparisonVerdict",
    "MonteCarloResult",
    "EoEMonteCarloResult",
    "InsufficientReplicationError",
    "UnreliableEstimateError",
    "ht_estimate",
    "neymann_variance",
    "normal_cdf",
    "compare_estimates",
    "compare_clusterings_test",
    "monte_carlo_expectation",
    "exhaustive_cbr_expectation",
    "eoe_monte_carlo",
    "write_samples_csv",
]


class InsufficientReplicationError(ValueError):
    """A variance component needs at least two clusters per bucket."""


class UnreliableEstimateError(RuntimeError):
    """Too many Monte-Carlo draws were excluded as degenerate."""


@dataclass(frozen=True)
class HTEstimate:
    """Horvitz-Thompson estimate of the total treatment effect:
    tau_hat = (M/N) * [ mean_t(cluster totals) - mean_c(cluster totals) ]
    scaled so each bucket mean is over its cluster count."""

    tau_hat: float
    m_treated: int
    m_control: int
    m_total: int
    n_units: int

    def __post_init__(self):
        if not np.isfinite(self.tau_hat):
            raise ValueError("estimate is not finite")
        if self.m_treated + self.m_control != self.m_total:
            raise ValueError("bucket counts must sum to the cluster count")


@dataclass(frozen=True)
class VarianceEstimate:
    """Neymann variance for a cluster-based design:
    sigma_hat = (M/N) * (S_t/M_t + S_c/M_c), with S_t, S_c the unbiased
    sample variances of the treated and control cluster totals."""

    sigma_hat: float
    s_treated: float
    s_control: float
    cluster_totals: np.ndarray

    def __post_init__(self):
        if self.sigma_hat < 0:
            raise ValueError("variance estimate must be nonnegative")


def _cluster_totals(y: np.ndarray, clustering: Clustering) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != clustering.n_units:
        raise ValueError(
            f"outcome vector has {y.shape[0]} entries for {clustering.n_units} units"
        )
    return np.bincount(clustering.cluster_of, weights=y, minlength=clustering.n_clusters)


def ht_estimate(
    y,
    z_clusters,
    clustering: Clustering,
    m_treated: int | None = None,
    m_control: int | None = None,
) -> HTEstimate:
    """Evaluate the Horvitz-Thompson estimator from unit outcomes and a
    cluster-level assignment. Bucket counts are derived from z_clusters;
    passing them explicitly just asserts consistency."""
    z = np.asarray(z_clusters)
    if z.shape[0] != clustering.n_clusters:
        raise ValueError(
            f"{z.shape[0]} cluster assignments for {clustering.n_clusters} clusters"
        )
    m = clustering.n_clusters
    n = clustering.n_units
    m_t = int(np.sum(z == 1))
    m_c = m - m_t
    if m_treated is not None and m_treated != m_t:
        raise ValueError(f"m_treated={m_treated} but assignment has {m_t}")
    if m_control is not None and m_control != m_c:
        raise ValueError(f"m_control={m_control} but assignment has {m_c}")
    if m_t == 0 or m_c == 0:
        raise DegenerateDesignError(
            "Horvitz-Thompson estimate undefined with an empty treatment bucket"
        )
    totals = _cluster_totals(y, clustering)
    treated_sum = float(totals[z == 1].sum())
    control_sum = float(totals[z == 0].sum())
    tau = (m / n) * (treated_sum / m_t - control_sum / m_c)
    return HTEstimate(tau_hat=tau, m_treated=m_t, m_control=m_c, m_total=m, n_units=n)


def neymann_variance(y, z_clusters, clustering: Clustering) -> VarianceEstimate:
    """Conservative variance of the Horvitz-Thompson estimate from the
    within-bucket sample variances (n-1 denominator) of cluster totals."""
    z = np.asarray(z_clusters)
    totals = _cluster_totals(y, clustering)
    treated = totals[z == 1]
    control = totals[z == 0]
    if treated.size < 2 or control.size < 2:
        raise InsufficientReplicationError(
            f"need >=2 clusters per bucket, got {treated.size} treated / {control.size} control"
        )
    s_t = float(np.var(treated, ddof=1))
    s_c = float(np.var(control, ddof=1))
    m = clustering.n_clusters
    n = clustering.n_units
    sigma = (m / n) * (s_t / treated.size + s_c / control.size)
    return VarianceEstimate(sigma_hat=sigma, s_treated=s_t, s_control=s_c, cluster_totals=totals)


def normal_cdf(x):
    """Standard normal CDF (vectorized)."""
    out = ndtr(x)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


@dataclass(frozen=True)
class ComparisonVerdict:
    """Outcome of the two-arm comparison test. `better` names the
    clustering with the significantly less biased estimate, given the
    monotonicity direction supplied by the caller."""

    statistic: float
    p_value: float
    better: str  # "clustering_1" | "clustering_2" | "inconclusive"
    direction: str  # "increasing" | "decreasing"
    alpha: float


def compare_estimates(
    tau_1: float,
    var_1: float,
    tau_2: float,
    var_2: float,
    alpha: float = 0.05,
    direction: str = "increasing",
    correlation: float = 0.0,
) -> ComparisonVerdict:
    """Normal-approximation test on the difference of two estimates.

    Under an increasing mechanism both estimates under-shoot the estimand,
    so the *larger* one is the less biased: a significantly negative
    statistic favors clustering 2, a significantly positive one favors
    clustering 1. Under a decreasing mechanism the roles flip.

    `correlation` is a sensitivity-analysis hook: the two estimates are
    treated as Gaussians with covariance rho * sqrt(v1 * v2).
    """
    if direction not in ("increasing", "decreasing"):
        raise ValueError("direction must be 'increasing' or 'decreasing'")
    if not -1.0 <= correlation <= 1.0:
        raise ValueError("correlation must lie in [-1, 1]")
    var = var_1 + var_2 - 2.0 * correlation * float(np.sqrt(var_1 * var_2))
    if var <= 0:
        raise ValueError("combined variance must be positive for the test")
    statistic = (tau_1 - tau_2) / float(np.sqrt(var))
    p = normal_cdf(statistic)
    if p < alpha:
        low_biased = "clustering_2" if direction == "increasing" else "clustering_1"
    elif 1.0 - p < alpha:
        low_biased = "clustering_1" if direction == "increasing" else "clustering_2"
    else:
        low_biased = "inconclusive"
    return ComparisonVerdict(
        statistic=float(statistic),
        p_value=float(p),
        better=low_biased,
        direction=direction,
        alpha=alpha,
    )


def compare_clusterings_test(
    estimate_1: HTEstimate,
    variance_1: VarianceEstimate,
    estimate_2: HTEstimate,
    variance_2: VarianceEstimate,
    alpha: float = 0.05,
    direction: str = "increasing",
    correlation: float = 0.0,
) -> ComparisonVerdict:
    """compare_estimates on a pair of Horvitz-Thompson arm estimates with
    their Neymann variances."""
    return compare_estimates(
        estimate_1.tau_hat,
        variance_1.sigma_hat,
        estimate_2.tau_hat,
        variance_2.sigma_hat,
        alpha=alpha,
        direction=direction,
        correlation=correlation,
    )


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    samples: np.ndarray
    n_excluded: int
    n_requested: int


def _summarize(samples: list[float], n_excluded: int, n_requested: int) -> MonteCarloResult:
    if n_excluded > 0.10 * n_requested:
        raise UnreliableEstimateError(
            f"{n_excluded}/{n_requested} draws were degenerate and excluded"
        )
    arr = np.asarray(samples, dtype=np.float64)
    stderr = float(np.std(arr, ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else float("nan")
    return MonteCarloResult(
        mean=float(arr.mean()),
        stderr=stderr,
        samples=arr,
        n_excluded=n_excluded,
        n_requested=n_requested,
    )


def monte_carlo_expectation(
    design_sampler: Callable[[np.random.Generator], DesignDraw],
    model: PotentialOutcomeModel,
    replications: int,
    master_seed,
) -> MonteCarloResult:
    """Expected Horvitz-Thompson estimate under a randomized design,
    approximated over independent replications.

    Each replication gets its own (design, noise) child streams derived
    from the master seed, so results are reproducible bit for bit and
    replications could be evaluated in any order. Degenerate draws are
    excluded; more than 10% exclusions raises UnreliableEstimateError.
    """
    if replications < 2:
        raise ValueError("need at least 2 replications")
    samples: list[float] = []
    n_excluded = 0
    for rep_seed in child_seeds(master_seed, replications):
        design_seed, noise_seed = rep_seed.spawn(2)
        try:
            draw = design_sampler(np.random.default_rng(design_seed))
            y = model.outcomes(draw.assignment, noise_seed=noise_seed)
            est = ht_estimate(draw.frame_outcomes(np.asarray(y)), draw.z_clusters, draw.clustering)
        except DegenerateDesignError:
            n_excluded += 1
            continue
        samples.append(est.tau_hat)
    return _summarize(samples, n_excluded, replications)


def exhaustive_cbr_expectation(
    model: PotentialOutcomeModel, clustering: Clustering, m_treated: int
) -> float:
    """Exact expected Horvitz-Thompson estimate under a cluster-based
    design, enumerating all C(M, m_treated) assignments with noise off."""
    taus = []
    for draw in enumerate_cbr_draws(clustering, m_treated):
        y = np.asarray(model.outcomes(draw.assignment, noise_seed=None))
        taus.append(ht_estimate(y, draw.z_clusters, draw.clustering).tau_hat)
    return float(np.mean(taus))


@dataclass(frozen=True)
class EoEMonteCarloResult:
    """Paired per-arm Monte-Carlo summaries from repeated realizations of
    the experiment-of-experiments design. sigma columns hold the Neymann
    estimate per draw, NaN where a bucket had fewer than two clusters."""

    arm_1: MonteCarloResult
    arm_2: MonteCarloResult
    sigma_1: np.ndarray
    sigma_2: np.ndarray


def eoe_monte_carlo(
    c1: Clustering,
    c2: Clustering,
    model: PotentialOutcomeModel,
    replications: int,
    master_seed,
) -> EoEMonteCarloResult:
    """Draw the two-stage design repeatedly and estimate both arms from each
    realization (one outcome evaluation per draw serves both arms)."""
    if replications < 2:
        raise ValueError("need at least 2 replications")
    taus: tuple[list[float], list[float]] = ([], [])
    sigmas: tuple[list[float], list[float]] = ([], [])
    n_excluded = 0
    for rep_seed in child_seeds(master_seed, replications):
        design_seed, noise_seed = rep_seed.spawn(2)
        try:
            design = eoe_assign(c1, c2, np.random.default_rng(design_seed))
        except DegenerateDesignError:
            n_excluded += 1
            continue
        y = np.asarray(model.outcomes(design.assignment, noise_seed=noise_seed))
        for arm in (1, 2):
            units, sub, z = design.arm_estimation_inputs(arm)
            est = ht_estimate(y[units], z, sub)
            taus[arm - 1].append(est.tau_hat)
            try:
                sigmas[arm - 1].append(neymann_variance(y[units], z, sub).sigma_hat)
            except InsufficientReplicationError:
                sigmas[arm - 1].append(float("nan"))
    return EoEMonteCarloResult(
        arm_1=_summarize(taus[0], n_excluded, replications),
        arm_2=_summarize(taus[1], n_excluded, replications),
        sigma_1=np.asarray(sigmas[0]),
        sigma_2=np.asarray(sigmas[1]),
    )


def write_samples_csv(path, rows: Iterable[tuple[int, str, float, float]]) -> None:
    """Export Monte-Carlo samples: one row per (replicate, arm)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "arm", "tau_hat", "sigma_hat"])
        for replicate, arm, tau, sigma in rows:
            writer.writerow([replicate, arm, repr(float(tau)), repr(float(sigma))])

"""Acceptance suite: one test per release criterion, each printing an
explicit PASS line with the measured quantities (run with -s to see them
on success). Every tolerance is fixed here, not tuned at runtime."""

import json
import time

import numpy as np
import pytest

from clusterexp.auctions import (
    Auction,
    AuctionOutcomeModel,
    PositionCurve,
    check_position_convexity,
    pointwise_monotonicity_check,
    run_vcg_positional,
    vcg_externality_oracle,
)
from clusterexp.cli import main
from clusterexp.core import Clustering, cluster_exposure, total_treatment_effect
from clusterexp.designs import cbr_sampler, enumerate_cbr_draws
from clusterexp.estimators import (
    eoe_monte_carlo,
    exhaustive_cbr_expectation,
    ht_estimate,
    monte_carlo_expectation,
    neymann_variance,
)
from clusterexp.harness import parse_config_dict, run_comparison_pipeline
from clusterexp.interference import (
    LinearInterferenceModel,
    linear_closed_form_bias,
    linear_closed_form_expectation,
)
from clusterexp.partitioning import (
    project_bidder_partition,
    random_balanced_partition,
    rldg_partition,
    weighted_cut_ratio,
)

from support import TableModel, planted_bipartite, random_clustering, random_graph


def _report(criterion: str, detail: str) -> None:
    print(f"[{criterion}] PASS: {detail}")


def test_criterion_1_ht_unbiased_under_sutva():
    start = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 13))
        m = int(rng.integers(2, min(n, 7) + 1))
        clustering = random_clustering(rng, n, m)
        model = TableModel(rng.normal(size=n), rng.normal(size=n))
        m_treated = int(rng.integers(1, m))
        exact = exhaustive_cbr_expectation(model, clustering, m_treated)
        worst = max(worst, abs(exact - total_treatment_effect(model)))
    elapsed = time.time() - start
    assert worst <= 1e-10
    assert elapsed < 10.0
    _report("criterion-1", f"50 exhaustive instances, max |E[est]-TTE| = {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_linear_closed_form_bias():
    start = time.time()
    rng = np.random.default_rng(202)
    n, m, reps = 100, 10, 10_000
    worst_z = 0.0
    for trial in range(20):
        graph = random_graph(rng, n, p=0.08)
        clustering = random_clustering(rng, n, m)
        model = LinearInterferenceModel(
            graph=graph,
            alpha=rng.normal(size=n),
            beta=rng.normal(size=n),
            gamma=rng.normal(size=n),
            noise_sd=0.2,
        )
        sampler = cbr_sampler(clustering, m // 2)
        result = monte_carlo_expectation(sampler, model, reps, master_seed=trial)
        expected = linear_closed_form_expectation(model, clustering)
        worst_z = max(worst_z, abs(result.mean - expected) / result.stderr)
        assert abs(result.mean - expected) <= 3.0 * result.stderr
        # homogeneous-gamma reduction must be exact in closed form
        gamma = float(rng.normal())
        homo = LinearInterferenceModel(graph=graph, alpha=0.0, beta=0.0, gamma=gamma)
        theta_mean = cluster_exposure(clustering, graph).theta_mean
        reduction = gamma * m / (m - 1) * (1.0 - theta_mean)
        assert linear_closed_form_bias(homo, clustering) == pytest.approx(reduction, abs=1e-12)
    elapsed = time.time() - start
    assert elapsed < 60.0
    _report("criterion-2", f"20 parameterizations at R={reps}, worst |z| = {worst_z:.2f} (< 3), {elapsed:.1f}s")


def _random_reserves(rng, n):
    r0 = rng.uniform(0.0, 2.0, n)
    return r0, r0 + rng.uniform(0.1, 8.0, n)


def _random_auctions(rng, n, max_size=6):
    auctions = []
    for _ in range(int(rng.integers(1, 4))):
        size = int(rng.integers(2, min(n, max_size) + 1))
        participants = rng.choice(n, size=size, replace=False)
        auctions.append(Auction(participants, rng.uniform(0.5, 10.0, size)))
    return tuple(auctions)


def test_criterion_3_second_price_self_excitation():
    start = time.time()
    rng = np.random.default_rng(303)
    for _ in range(200):
        n = int(rng.integers(3, 9))
        r0, r1 = _random_reserves(rng, n)
        model = AuctionOutcomeModel(
            n_bidders=n,
            auctions=_random_auctions(rng, n),
            control_reserves=r0,
            treatment_reserves=r1,
            mechanism="second_price",
        )
        report = pointwise_monotonicity_check(model, n_max=8)
        assert report.holds, f"violation: {report.witness}"
    elapsed = time.time() - start
    assert elapsed < 30.0
    _report("criterion-3", f"200 exhaustive second-price instances, zero violations, {elapsed:.1f}s")


def _random_convex_curve(rng) -> PositionCurve:
    m = int(rng.integers(1, 5))
    if m == 1:
        return PositionCurve((float(rng.uniform(0.3, 1.0)),))
    gaps = np.sort(rng.uniform(0.02, 0.3, m - 1))[::-1]
    top = float(rng.uniform(0.6, 1.0))
    if top - gaps.sum() <= 0.01:
        gaps = gaps * (top - 0.02) / gaps.sum()
    pos = top - np.concatenate([[0.0], np.cumsum(gaps)])
    curve = PositionCurve(tuple(pos))
    assert check_position_convexity(curve).convex
    return curve


def test_criterion_4_vcg_self_excitation_and_payment_oracle():
    start = time.time()
    rng = np.random.default_rng(404)
    worst_gap = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 9))
        r0, r1 = _random_reserves(rng, n)
        curve = _random_convex_curve(rng)
        model = AuctionOutcomeModel(
            n_bidders=n,
            auctions=_random_auctions(rng, n),
            control_reserves=r0,
            treatment_reserves=r1,
            mechanism="vcg_positional",
            curve=curve,
        )
        report = pointwise_monotonicity_check(model, n_max=8)
        assert report.holds, f"violation: {report.witness}"
        # payment formula vs independent welfare-with/welfare-without oracle
        for z in (np.zeros(n, dtype=np.int8), np.ones(n, dtype=np.int8), rng.integers(0, 2, n)):
            reserves = np.where(z == 1, r1, r0)
            for auction in model.auctions:
                faced = reserves[auction.participants]
                result = run_vcg_positional(auction.values, faced, curve)
                oracle = vcg_externality_oracle(auction.values, faced, curve)
                gap = float(np.abs(result.payments - oracle).max())
                worst_gap = max(worst_gap, gap)
                assert gap <= 1e-9
    elapsed = time.time() - start
    assert elapsed < 60.0
    _report(
        "criterion-4",
        f"200 exhaustive convex VCG instances, zero violations, max |payment-oracle| = {worst_gap:.1e}, {elapsed:.1f}s",
    )


def test_criterion_5_underestimation_desk_scale():
    start = time.time()
    config = parse_config_dict(
        {
            "schema_version": 1,
            "seed": 20_260_811,
            "replications": 2000,
            "dataset": {"generator": {}},  # desk scale: 500 bidders, 2000 keyphrases
            "outcome_model": {"kind": "auction", "mechanism": "vcg_positional"},
            "clustering_1": {"method": "rldg", "k": 20},
            "clustering_2": {"method": "random", "k": 20},
        }
    )
    report = run_comparison_pipeline(config).to_json_dict()
    margins = {}
    for group in ("direct", "eoe"):
        for name, entry in report[group].items():
            margin = (report["tte"] - entry["mean"]) / entry["stderr"]
            margins[f"{group}.{name}"] = margin
            assert margin > 2.0, f"{group}.{name} not significantly below TTE"
    elapsed = time.time() - start
    _report(
        "criterion-5",
        "all four means below TTE by "
        + ", ".join(f"{k}={v:.0f}se" for k, v in margins.items())
        + f", {elapsed:.0f}s",
    )


def test_criterion_6_bias_ordering_and_transitivity():
    start = time.time()
    graph = planted_bipartite(11, n_bidders=200, n_keyphrases=1000, d_within=8, d_cross=1)
    k = 20
    capacity = int(np.ceil(1.1 * graph.n_left / k))
    state, _ = rldg_partition(graph, k, capacities=capacity, n_passes=10)
    c1 = project_bidder_partition(state, graph)
    c2 = Clustering.from_labels(
        random_balanced_partition(200, k, np.random.default_rng(0)).part_of
    )
    model = LinearInterferenceModel(
        graph=graph.bidder_projection(), alpha=0.0, beta=1.0, gamma=1.0
    )
    reps = 20_000
    direct_1 = monte_carlo_expectation(cbr_sampler(c1, c1.n_clusters // 2), model, reps, 1)
    direct_2 = monte_carlo_expectation(cbr_sampler(c2, c2.n_clusters // 2), model, reps, 2)
    eoe = eoe_monte_carlo(c1, c2, model, reps, 3)
    direct_gap = direct_1.mean - direct_2.mean
    direct_se = float(np.hypot(direct_1.stderr, direct_2.stderr))
    eoe_gap = eoe.arm_1.mean - eoe.arm_2.mean
    eoe_se = float(np.hypot(eoe.arm_1.stderr, eoe.arm_2.stderr))
    assert direct_gap > 2.0 * direct_se
    assert eoe_gap > 2.0 * eoe_se
    ratio = eoe_gap / direct_gap
    assert 0.35 <= ratio <= 0.65
    elapsed = time.time() - start
    assert elapsed < 300.0
    _report(
        "criterion-6",
        f"direct gap {direct_gap:.4f} ({direct_gap / direct_se:.0f}se), "
        f"eoe gap {eoe_gap:.4f} ({eoe_gap / eoe_se:.0f}se), ratio {ratio:.3f} in [0.35, 0.65], {elapsed:.0f}s",
    )


def test_criterion_7_neymann_upper_bound():
    rng = np.random.default_rng(707)
    worst_slack = np.inf
    for _ in range(50):
        m = int(rng.choice([4, 5]))
        size = 2
        n = m * size
        clustering = Clustering.from_labels(np.repeat(np.arange(m), size))
        model = TableModel(rng.normal(size=n), rng.normal(size=n))
        m_treated = int(rng.integers(2, m - 1))
        taus, sigmas = [], []
        for draw in enumerate_cbr_draws(clustering, m_treated):
            y = model.outcomes(draw.assignment)
            taus.append(ht_estimate(y, draw.z_clusters, clustering).tau_hat)
            sigmas.append(neymann_variance(y, draw.z_clusters, clustering).sigma_hat)
        slack = float(np.mean(sigmas) - np.var(taus))
        worst_slack = min(worst_slack, slack)
        assert slack >= -1e-10
    _report("criterion-7", f"50 balanced SUTVA instances, min E[sigma]-var = {worst_slack:.3e} >= 0")


def test_criterion_8_partitioning():
    start = time.time()
    # random balanced baseline at k=50 vs (k-1)/k
    big = planted_bipartite(0, n_bidders=500, n_keyphrases=1000, d_within=10, d_cross=1)
    rng = np.random.default_rng(808)
    for _ in range(3):
        ratio = weighted_cut_ratio(big, random_balanced_partition(big.n_nodes, 50, rng))
        assert abs(ratio - 49 / 50) <= 0.02
    # planted two-block recovery across 100 seeds
    recovered = 0
    for seed in range(100):
        graph = planted_bipartite(seed)  # 100 bidders, 10:1 within/cross mass
        capacity = int(np.ceil(1.1 * graph.n_left / 2))
        _, report = rldg_partition(graph, 2, capacities=capacity, n_passes=10)
        recovered += report.weighted_cut_ratio <= 0.2
    assert recovered >= 95
    elapsed = time.time() - start
    _report(
        "criterion-8",
        f"random k=50 cut within 0.02 of 0.98; planted recovery {recovered}/100 seeds, {elapsed:.0f}s",
    )


def test_criterion_9_compare_determinism(tmp_path):
    raw = {
        "schema_version": 1,
        "seed": 99,
        "replications": 300,
        "dataset": {"generator": {"n_bidders": 150, "n_keyphrases": 500, "n_days": 3}},
        "outcome_model": {"kind": "auction", "mechanism": "second_price"},
        "clustering_1": {"method": "rldg", "k": 10},
        "clustering_2": {"method": "random", "k": 10},
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(raw))
    out_1, out_2 = tmp_path / "run1", tmp_path / "run2"
    assert main(["compare", "--config", str(config_path), "--out", str(out_1)]) == 0
    assert main(["compare", "--config", str(config_path), "--out", str(out_2)]) == 0
    bytes_1 = (out_1 / "report.json").read_bytes()
    bytes_2 = (out_2 / "report.json").read_bytes()
    assert bytes_1 == bytes_2
    assert (out_1 / "samples.csv").read_bytes() == (out_2 / "samples.csv").read_bytes()
    _report("criterion-9", f"two compare runs byte-identical ({len(bytes_1)} bytes)")

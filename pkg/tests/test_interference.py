import numpy as np
import pytest

from clusterexp.core import Clustering, NeighborhoodGraph, cluster_exposure, total_treatment_effect
from clusterexp.estimators import exhaustive_cbr_expectation
from clusterexp.interference import (
    LinearInterferenceModel,
    classify_monotonicity,
    linear_closed_form_bias,
    linear_closed_form_expectation,
    linear_model_from_csv,
    linear_outcomes,
    self_excitation_check,
)

from support import TableModel, random_clustering, random_graph


def path_graph(n):
    return NeighborhoodGraph(n, [(i, i + 1) for i in range(n - 1)])


class TestLinearOutcomes:
    def test_no_interference_term(self):
        model = LinearInterferenceModel(graph=path_graph(3), alpha=1.0, beta=2.0, gamma=0.0)
        y = linear_outcomes(model, [1, 0, 1])
        np.testing.assert_allclose(y, [3.0, 1.0, 3.0])

    def test_all_treated(self):
        model = LinearInterferenceModel(graph=path_graph(3), alpha=0.5, beta=1.0, gamma=2.0)
        np.testing.assert_allclose(model.outcomes([1, 1, 1]), [3.5, 3.5, 3.5])

    def test_path_graph_hand_example(self):
        model = LinearInterferenceModel(graph=path_graph(3), alpha=0.0, beta=1.0, gamma=2.0)
        y = model.outcomes([1, 0, 0])
        np.testing.assert_allclose(y, [1.0, 1.0, 0.0])

    def test_isolated_unit_tracks_own_assignment(self):
        graph = NeighborhoodGraph(3, [(0, 1)])
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=0.0, gamma=5.0)
        np.testing.assert_allclose(model.outcomes([0, 0, 1]), [0.0, 0.0, 5.0])

    def test_noise_seeded_and_reproducible(self):
        model = LinearInterferenceModel(graph=path_graph(4), alpha=0.0, beta=1.0, gamma=1.0, noise_sd=2.0)
        a = model.outcomes([1, 0, 1, 0], noise_seed=7)
        b = model.outcomes([1, 0, 1, 0], noise_seed=7)
        c = model.outcomes([1, 0, 1, 0], noise_seed=8)
        np.testing.assert_array_equal(a, b)
        assert np.any(a != c)

    def test_dimension_mismatch(self):
        model = LinearInterferenceModel(graph=path_graph(3), alpha=0.0, beta=1.0, gamma=1.0)
        with pytest.raises(ValueError):
            model.outcomes([1, 0])


class TestClosedFormBias:
    def test_singleton_clusters_homogeneous(self):
        graph = path_graph(6)
        gamma = 1.7
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=1.0, gamma=gamma)
        clustering = Clustering.singletons(6)
        m = 6
        assert linear_closed_form_bias(model, clustering) == pytest.approx(gamma * m / (m - 1))

    def test_perfect_clustering_no_bias(self):
        graph = NeighborhoodGraph(4, [(0, 1), (2, 3)])
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=1.0, gamma=3.0)
        clustering = Clustering.from_labels([0, 0, 1, 1])
        assert linear_closed_form_bias(model, clustering) == 0.0

    def test_four_cycle_half_exposure(self):
        graph = NeighborhoodGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=0.0, gamma=1.0)
        clustering = Clustering.from_labels([0, 0, 1, 1])
        assert linear_closed_form_bias(model, clustering) == pytest.approx(1.0)
        # cross-check against exhaustive enumeration of both assignments
        tte = total_treatment_effect(model)
        exact = exhaustive_cbr_expectation(model, clustering, 1)
        assert tte - exact == pytest.approx(1.0, abs=1e-12)

    def test_single_cluster_rejected(self):
        model = LinearInterferenceModel(graph=path_graph(3), alpha=0.0, beta=1.0, gamma=1.0)
        with pytest.raises(ValueError):
            linear_closed_form_bias(model, Clustering.single_cluster(3))

    def test_homogeneous_reduction_exact(self):
        # heterogeneous formula collapses to gamma * M/(M-1) * (1 - mean theta)
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(4, 14))
            graph = random_graph(rng, n)
            clustering = random_clustering(rng, n, int(rng.integers(2, n + 1)))
            gamma = float(rng.normal())
            model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=0.0, gamma=gamma)
            theta_mean = cluster_exposure(clustering, graph).theta_mean
            m = clustering.n_clusters
            expected = gamma * m / (m - 1) * (1.0 - theta_mean)
            assert linear_closed_form_bias(model, clustering) == pytest.approx(expected, abs=1e-12)


class TestClosedFormExpectation:
    def test_sutva_returns_beta_mean(self):
        rng = np.random.default_rng(0)
        beta = rng.normal(size=5)
        model = LinearInterferenceModel(graph=path_graph(5), alpha=1.0, beta=beta, gamma=0.0)
        clustering = Clustering.singletons(5)
        assert linear_closed_form_expectation(model, clustering) == pytest.approx(beta.mean())

    def test_perfect_clustering_returns_tte(self):
        graph = NeighborhoodGraph(4, [(0, 1), (2, 3)])
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=2.0, gamma=3.0)
        clustering = Clustering.from_labels([0, 0, 1, 1])
        assert linear_closed_form_expectation(model, clustering) == pytest.approx(5.0)

    def test_consistency_with_bias(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(4, 15))
            graph = random_graph(rng, n)
            clustering = random_clustering(rng, n, int(rng.integers(2, n + 1)))
            model = LinearInterferenceModel(
                graph=graph,
                alpha=rng.normal(size=n),
                beta=rng.normal(size=n),
                gamma=rng.normal(size=n),
            )
            tte = total_treatment_effect(model)
            expectation = linear_closed_form_expectation(model, clustering)
            bias = linear_closed_form_bias(model, clustering)
            assert tte - expectation == pytest.approx(bias, abs=1e-12)

    def test_exhaustive_oracle_equivalence(self):
        rng = np.random.default_rng(2)
        for _ in range(15):
            n = int(rng.integers(4, 12))
            m = int(rng.integers(2, min(n, 6) + 1))
            graph = random_graph(rng, n)
            clustering = random_clustering(rng, n, m)
            model = LinearInterferenceModel(
                graph=graph,
                alpha=rng.normal(size=n),
                beta=rng.normal(size=n),
                gamma=rng.normal(size=n),
            )
            m_treated = int(rng.integers(1, m))
            exact = exhaustive_cbr_expectation(model, clustering, m_treated)
            closed = linear_closed_form_expectation(model, clustering)
            assert exact == pytest.approx(closed, abs=1e-10)


class TestClassifyMonotonicity:
    def test_nonnegative_gamma_is_increasing(self):
        model = LinearInterferenceModel(graph=path_graph(5), alpha=0.0, beta=1.0, gamma=2.0)
        verdict = classify_monotonicity(model, Clustering.singletons(5))
        assert verdict.kind == "increasing"
        assert verdict.evidence > 0

    def test_nonpositive_gamma_is_decreasing(self):
        model = LinearInterferenceModel(graph=path_graph(5), alpha=0.0, beta=1.0, gamma=-2.0)
        verdict = classify_monotonicity(model, Clustering.singletons(5))
        assert verdict.kind == "decreasing"

    def test_mixed_signs_decided_by_unclustered_units(self):
        # gamma-positive pair perfectly clustered; the negative unit decides
        graph = NeighborhoodGraph(4, [(0, 1), (2, 3)])
        model = LinearInterferenceModel(
            graph=graph, alpha=0.0, beta=0.0, gamma=np.array([5.0, 5.0, -1.0, -1.0])
        )
        clustering = Clustering.from_labels([0, 0, 1, 2])
        verdict = classify_monotonicity(model, clustering)
        assert verdict.kind == "decreasing"
        assert verdict.evidence == pytest.approx(-2.0)

    def test_zero_evidence_reported_increasing(self):
        model = LinearInterferenceModel(graph=path_graph(4), alpha=0.0, beta=1.0, gamma=0.0)
        verdict = classify_monotonicity(model, Clustering.singletons(4))
        assert verdict.kind == "increasing"
        assert verdict.evidence == 0.0


class TestSelfExcitation:
    def test_nonnegative_gamma_holds(self):
        rng = np.random.default_rng(3)
        graph = random_graph(rng, 8)
        model = LinearInterferenceModel(
            graph=graph, alpha=0.0, beta=1.0, gamma=rng.uniform(0, 2, 8)
        )
        clustering = random_clustering(rng, 8, 4)
        report = self_excitation_check(model, clustering)
        assert report.holds
        assert report.n_assignments == 2**4

    def test_negative_gamma_violates_with_witness(self):
        graph = path_graph(4)
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=1.0, gamma=-2.0)
        report = self_excitation_check(model, Clustering.singletons(4))
        assert not report.holds
        violation = report.violations[0]
        assert violation.side in ("control", "treated")
        # every unit here has a cross-cluster neighbor, so all should appear
        assert {v.unit for v in report.violations} == {0, 1, 2, 3}

    def test_sutva_holds_with_equality(self):
        rng = np.random.default_rng(4)
        model = TableModel(rng.normal(size=6), rng.normal(size=6))
        report = self_excitation_check(model, Clustering.from_labels([0, 0, 1, 1, 2, 2]))
        assert report.holds

    def test_monte_carlo_mode_agrees(self):
        rng = np.random.default_rng(5)
        graph = random_graph(rng, 8)
        model = LinearInterferenceModel(graph=graph, alpha=0.0, beta=1.0, gamma=-1.0)
        clustering = random_clustering(rng, 8, 4)
        exact = self_excitation_check(model, clustering, mode="exhaustive")
        sampled = self_excitation_check(model, clustering, mode="monte_carlo", n_samples=4000, seed=6)
        assert exact.holds == sampled.holds

    def test_self_exciting_implies_underestimation(self):
        # on enumerable instances: self-excitation -> E[tau_hat] <= TTE
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(4, 10))
            graph = random_graph(rng, n)
            model = LinearInterferenceModel(
                graph=graph, alpha=rng.normal(size=n), beta=rng.normal(size=n), gamma=rng.uniform(0, 2, n)
            )
            m = int(rng.integers(2, min(n, 5) + 1))
            clustering = random_clustering(rng, n, m)
            assert self_excitation_check(model, clustering).holds
            for m_treated in range(1, m):
                exact = exhaustive_cbr_expectation(model, clustering, m_treated)
                assert exact <= total_treatment_effect(model) + 1e-10


class TestCsvParameters:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "params.csv"
        path.write_text(
            "unit,alpha,beta,gamma\n0,0.5,1.0,2.0\n2,0.0,0.0,-1.0\n1,1.5,2.5,0.0\n"
        )
        model = linear_model_from_csv(path, path_graph(3))
        np.testing.assert_allclose(model.alpha, [0.5, 1.5, 0.0])
        np.testing.assert_allclose(model.gamma, [2.0, 0.0, -1.0])

    def test_missing_unit_rejected(self, tmp_path):
        path = tmp_path / "params.csv"
        path.write_text("unit,alpha,beta,gamma\n0,0,1,0\n")
        with pytest.raises(ValueError, match="missing"):
            linear_model_from_csv(path, path_graph(2))

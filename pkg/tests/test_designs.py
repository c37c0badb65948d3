import itertools

import numpy as np
import pytest

from clusterexp.core import Clustering
from clusterexp.designs import (
    ArmSplit,
    DegenerateDesignError,
    balanced_arm_split,
    cluster_based_assignment,
    complete_randomization,
    enumerate_cbr_draws,
    eoe_assign,
    induced_clustering,
)
from clusterexp.estimators import ht_estimate

from support import TableModel


class TestCompleteRandomization:
    def test_degenerate_counts(self):
        assert complete_randomization(4, 0, 0).z_units.tolist() == [0, 0, 0, 0]
        assert complete_randomization(4, 4, 0).z_units.tolist() == [1, 1, 1, 1]

    def test_exact_count(self):
        for seed in range(20):
            assert complete_randomization(7, 3, seed).n_treated == 3

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            complete_randomization(4, 5, 0)

    def test_marginal_frequency(self):
        # each unit should be treated with probability 1/2 (hypergeometric marginal)
        rng = np.random.default_rng(99)
        hits = np.zeros(6)
        draws = 100_000
        for _ in range(draws):
            hits += complete_randomization(6, 3, rng).z_units
        np.testing.assert_allclose(hits / draws, 0.5, atol=0.01)


class TestClusterBasedAssignment:
    def test_two_admissible_assignments(self):
        clustering = Clustering.from_labels([0, 0, 1, 1])
        rng = np.random.default_rng(1)
        seen = {tuple(cluster_based_assignment(clustering, 1, rng).z_units) for _ in range(200)}
        assert seen == {(1, 1, 0, 0), (0, 0, 1, 1)}

    def test_all_treated(self):
        clustering = Clustering.from_labels([0, 1, 2])
        z = cluster_based_assignment(clustering, 3, 0)
        assert z.z_units.tolist() == [1, 1, 1]

    def test_singletons_reduce_to_complete_randomization(self):
        clustering = Clustering.singletons(6)
        rng = np.random.default_rng(2)
        hits = np.zeros(6)
        for _ in range(20_000):
            a = cluster_based_assignment(clustering, 2, rng)
            assert a.n_treated == 2
            hits += a.z_units
        np.testing.assert_allclose(hits / 20_000, 2 / 6, atol=0.02)

    def test_cluster_consistency(self):
        clustering = Clustering.from_labels([0, 1, 0, 1, 2, 2])
        a = cluster_based_assignment(clustering, 1, 7)
        for j in range(clustering.n_clusters):
            members = clustering.members(j)
            assert len(set(a.z_units[members].tolist())) == 1

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            cluster_based_assignment(Clustering.singletons(3), 4, 0)


class TestArmSplit:
    def test_balance_enforced(self):
        with pytest.raises(ValueError, match="floor"):
            ArmSplit(np.array([1, 1, 1, 2]))

    def test_balanced_split_sizes(self):
        for n in (2, 5, 9, 10):
            split = balanced_arm_split(n, 3)
            assert split.arm_units(1).size == n // 2
            assert split.arm_units(2).size == n - n // 2


class TestInducedClustering:
    def test_restriction(self):
        base = Clustering.from_labels([0, 0, 1, 1])  # {a,b}, {c,d}
        split = ArmSplit(np.array([1, 2, 1, 2]))  # arm 1 = {a, c}
        sub = induced_clustering(base, split, 1)
        assert sub.n_clusters == 2
        np.testing.assert_array_equal(sub.cluster_of, [0, 1])

    def test_all_units_one_arm(self):
        base = Clustering.from_labels([0])
        split = ArmSplit(np.array([2]))  # floor(1/2) = 0 units in arm 1
        sub = induced_clustering(base, split, 2)
        np.testing.assert_array_equal(sub.cluster_of, base.cluster_of)

    def test_empty_arm(self):
        base = Clustering.from_labels([0])
        split = ArmSplit(np.array([2]))
        with pytest.raises(DegenerateDesignError, match="no units"):
            induced_clustering(base, split, 1)

    def test_co_membership_preserved(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(4, 12))
            labels = rng.integers(0, 4, n)
            base = Clustering.from_labels(labels)
            split = balanced_arm_split(n, rng)
            for arm in (1, 2):
                units = split.arm_units(arm)
                sub = induced_clustering(base, split, arm)
                for a, b in itertools.combinations(range(units.size), 2):
                    same_base = base.cluster_of[units[a]] == base.cluster_of[units[b]]
                    same_sub = sub.cluster_of[a] == sub.cluster_of[b]
                    assert same_base == same_sub


class TestEoEAssign:
    def test_singleton_clusterings_n4(self):
        c = Clustering.singletons(4)
        design = eoe_assign(c, c, 11)
        assert design.arm_units[0].size == 2 and design.arm_units[1].size == 2
        assert design.m_treated == (1, 1)
        # each arm has exactly one treated unit
        z = design.assignment.z_units
        assert z[design.arm_units[0]].sum() == 1
        assert z[design.arm_units[1]].sum() == 1

    def test_degenerate_for_two_units(self):
        c = Clustering.singletons(2)
        with pytest.raises(DegenerateDesignError):
            eoe_assign(c, c, 0)

    def test_z_respects_induced_clusters(self):
        rng = np.random.default_rng(4)
        c1 = Clustering.from_labels(rng.integers(0, 4, 12))
        c2 = Clustering.from_labels(rng.integers(0, 5, 12))
        design = eoe_assign(c1, c2, rng)
        z = design.assignment.z_units
        for arm in (1, 2):
            units, sub, z_arm = design.arm_estimation_inputs(arm)
            np.testing.assert_array_equal(z[units], z_arm[sub.cluster_of])

    def test_deterministic_given_seed(self):
        c1 = Clustering.from_labels(np.arange(10) % 3)
        c2 = Clustering.from_labels(np.arange(10) % 5)
        d1 = eoe_assign(c1, c2, 77)
        d2 = eoe_assign(c1, c2, 77)
        np.testing.assert_array_equal(d1.assignment.z_units, d2.assignment.z_units)
        np.testing.assert_array_equal(d1.split.w, d2.split.w)

    def test_json_dict_fields(self):
        c = Clustering.from_labels(np.arange(6) % 2)
        design = eoe_assign(c, c, 5)
        payload = design.to_json_dict()
        assert set(payload) == {"w", "z", "z1", "z2", "clusters1", "clusters2", "m_treated"}
        assert len(payload["w"]) == 6
        assert sorted(list(payload["clusters1"]) + list(payload["clusters2"])) == list(range(6))

    def test_large_clusters_survive_split(self):
        # 400 clusters of 25 units: over 1000 splits, every cluster should
        # keep at least one unit in each arm essentially always
        n, size = 10_000, 25
        labels = np.repeat(np.arange(n // size), size)
        rng = np.random.default_rng(12)
        ok = 0
        draws = 1000
        for _ in range(draws):
            w = np.full(n, 2, dtype=np.int8)
            w[rng.permutation(n)[: n // 2]] = 1
            counts = np.zeros((n // size, 2), dtype=np.int64)
            np.add.at(counts, (labels, w - 1), 1)
            ok += bool(np.all(counts > 0))
        assert ok / draws >= 0.999


class TestSutvaExhaustive:
    def test_eoe_unbiased_under_no_interference(self):
        # enumerate every balanced split and every admissible cluster
        # assignment: the per-arm estimate averages to that arm's sample
        # effect, and the grand mean equals the population effect
        rng = np.random.default_rng(8)
        y1, y0 = rng.normal(size=6), rng.normal(size=6)
        model = TableModel(y1, y0)
        tte = float(np.mean(y1 - y0))
        c1 = Clustering.from_labels([0, 0, 1, 1, 2, 2])
        c2 = Clustering.singletons(6)
        grand: dict[int, list[float]] = {1: [], 2: []}
        for arm1_units in itertools.combinations(range(6), 3):
            w = np.full(6, 2, dtype=np.int8)
            w[list(arm1_units)] = 1
            split = ArmSplit(w)
            for arm, base in ((1, c1), (2, c2)):
                units = split.arm_units(arm)
                sub = induced_clustering(base, split, arm)
                m_t = sub.n_clusters // 2
                arm_tte = float(np.mean(y1[units] - y0[units]))
                taus = []
                for draw in enumerate_cbr_draws(sub, m_t):
                    z_units_full = np.zeros(6, dtype=np.int8)
                    z_units_full[units] = draw.assignment.z_units
                    y = model.outcomes(z_units_full)
                    taus.append(ht_estimate(y[units], draw.z_clusters, sub).tau_hat)
                assert np.mean(taus) == pytest.approx(arm_tte, abs=1e-12)
                grand[arm].extend(taus)
        assert np.mean(grand[1]) == pytest.approx(tte, abs=1e-12)
        assert np.mean(grand[2]) == pytest.approx(tte, abs=1e-12)

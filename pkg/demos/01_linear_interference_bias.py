#!/usr/bin/env python3
"""How clustering quality controls estimator bias under linear interference.

We put 60 units on a two-community graph, give every unit a positive
spillover coefficient, and compare three clusterings: singletons (a unit-
randomized design), the true communities, and something in between. The
closed-form bias predicts exactly what the exhaustive / Monte-Carlo
expectation of the Horvitz-Thompson estimator does.
"""

import numpy as np

from clusterexp import (
    Clustering,
    LinearInterferenceModel,
    NeighborhoodGraph,
    classify_monotonicity,
    cluster_exposure,
    linear_closed_form_bias,
    linear_closed_form_expectation,
    monte_carlo_expectation,
    total_treatment_effect,
)
from clusterexp.designs import cbr_sampler

rng = np.random.default_rng(0)

# two planted communities of 30 units, dense inside, sparse across
n = 60
edges = []
for i in range(n):
    for j in range(i + 1, n):
        same = (i < 30) == (j < 30)
        if rng.random() < (0.30 if same else 0.02):
            edges.append((i, j))
graph = NeighborhoodGraph(n, edges)

model = LinearInterferenceModel(graph=graph, alpha=1.0, beta=2.0, gamma=1.5)
tte = total_treatment_effect(model)
print(f"population effect (all treated vs none): {tte:.3f}")
print(f"interference share gamma / (beta + gamma): {1.5 / 3.5:.2f}\n")

clusterings = {
    "singletons (unit randomization)": Clustering.singletons(n),
    "six random blocks": Clustering.from_labels(rng.permutation(n) % 6),
    "true communities split in three": Clustering.from_labels(
        np.array([(0 if i < 30 else 3) + i % 3 for i in range(n)])
    ),
}

print(f"{'clustering':40s} {'mean theta':>10s} {'bias (closed form)':>18s} {'E[est] (MC)':>12s}")
for name, clustering in clusterings.items():
    theta = cluster_exposure(clustering, graph).theta_mean
    bias = linear_closed_form_bias(model, clustering)
    expected = linear_closed_form_expectation(model, clustering)
    mc = monte_carlo_expectation(
        cbr_sampler(clustering, clustering.n_clusters // 2), model, 4000, master_seed=7
    )
    assert abs(mc.mean - expected) < 4 * mc.stderr
    verdict = classify_monotonicity(model, clustering)
    print(f"{name:40s} {theta:10.3f} {bias:18.3f} {mc.mean:12.3f}   ({verdict.kind})")

print(
    "\nHigher within-cluster exposure -> smaller bias; every design"
    "\nunder-estimates because spillovers are positive (increasing mechanism)."
)

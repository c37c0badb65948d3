#!/usr/bin/env python3
"""Restreamed greedy partitioning of a synthetic bid graph.

We generate a bid log with two planted advertiser communities, build the
bidder-keyphrase graph weighted by bid value, and watch the weighted cut
ratio fall over restreaming passes, next to the random balanced baseline
(which sits near (k-1)/k).
"""

import numpy as np

from clusterexp import (
    GeneratorParams,
    build_bipartite_graph,
    generate_synthetic_dataset,
    random_balanced_partition,
    rldg_partition,
    summarize_records,
    weighted_cut_ratio,
)

params = GeneratorParams(n_bidders=200, n_keyphrases=600, n_days=3, cross_rate=0.09)
records = generate_synthetic_dataset(params, seed=4)
summary = summarize_records(records)
print(
    f"{len(records)} records; median bids per bidder-day "
    f"{summary['per_bidder']['nbr_bids']['median']:.0f}, per keyphrase-day "
    f"{summary['per_keyphrase']['nbr_bids']['median']:.0f}"
)

graph = build_bipartite_graph(records, metric="bid")
print(f"bid graph: {graph.n_left} bidders, {graph.n_right} keyphrases, {len(graph.edge_w)} edges\n")

rng = np.random.default_rng(9)
for k in (2, 10, 50):
    capacity = int(np.ceil(1.1 * graph.n_left / k))
    _, report = rldg_partition(graph, k, capacities=capacity, n_passes=10)
    baseline = weighted_cut_ratio(graph, random_balanced_partition(graph.n_nodes, k, rng))
    trajectory = " -> ".join(f"{c:.3f}" for c in report.history)
    print(f"k={k:3d}  random baseline {baseline:.3f} (~{(k - 1) / k:.3f})")
    print(f"       restreamed cut  {trajectory}\n")

print("with k=2 the planted communities are recovered almost exactly;")
print("larger k must cut inside communities, so the floor rises.")

"""Cluster-based randomized experiments under interference.

Simulation and estimation toolkit for comparing clusterings of
experimental units when treatment effects spill across a graph:
Horvitz-Thompson estimation under cluster randomization, a two-stage
experiment-of-experiments comparison design, closed-form bias oracles for
linear interference, reserve-price auction welfare models (second-price
and positional VCG), and restreamed balanced graph partitioning.
"""

from .core import (
    Assignment,
    Clustering,
    ExposureProfile,
    NeighborhoodGraph,
    PotentialOutcomeModel,
    cluster_exposure,
    total_treatment_effect,
    validate_clustering,
)
from .designs import (
    ArmSplit,
    DegenerateDesignError,
    EoEDesign,
    cluster_based_assignment,
    complete_randomization,
    eoe_assign,
    induced_clustering,
)
from .estimators import (
    ComparisonVerdict,
    HTEstimate,
    VarianceEstimate,
    compare_clusterings_test,
    eoe_monte_carlo,
    exhaustive_cbr_expectation,
    ht_estimate,
    monte_carlo_expectation,
    neymann_variance,
    normal_cdf,
)
from .interference import (
    LinearInterferenceModel,
    MonotonicityVerdict,
    classify_monotonicity,
    linear_closed_form_bias,
    linear_closed_form_expectation,
    self_excitation_check,
)
from .auctions import (
    Auction,
    AuctionOutcomeModel,
    AuctionResult,
    BidderProfile,
    PositionCurve,
    auction_welfare_outcomes,
    check_position_convexity,
    pointwise_monotonicity_check,
    run_second_price,
    run_vcg_positional,
)
from .partitioning import (
    BipartiteGraph,
    CutReport,
    PartitionState,
    project_bidder_partition,
    random_balanced_partition,
    rldg_partition,
    weighted_cut_ratio,
)
from .dataio import (
    BidRecord,
    GeneratorParams,
    build_bipartite_graph,
    generate_synthetic_dataset,
    parse_records,
    summarize_records,
)
from .harness import (
    ComparisonReport,
    ConfigError,
    ExperimentConfig,
    load_config,
    reproduce_figure2,
    run_comparison_pipeline,
)

__version__ = "0.1.0"

"""Subset-response local differential privacy toolkit.

Mechanisms that answer with subsets of a finite domain under an epsilon-LDP
constraint, their exact mutual-information and l2-error analysis, brute-force
verification oracles on explicit channel matrices, and a reproducible Monte
Carlo harness for discrete distribution estimation.
"""

from .channels import (
    Channel,
    LdpAudit,
    StaircaseMechanism,
    amortize,
    brr_channel,
    brute_force_mi,
    channel_to_csv,
    ksubset_channel,
    mrr_channel,
    random_valid_staircase,
    staircase_channel,
    validate_ldp,
)
from .estimation import (
    DistributionEstimate,
    FrequencyVector,
    HitRates,
    aggregate,
    aggregate_view_file,
    analytic_l2_error,
    brr_hit_rates,
    ksubset_hit_rates,
    l2_optimal_size,
    l2_optimal_size_real,
    mixture_l2_objective,
    mrr_hit_rates,
    project_simplex,
    remap_estimate,
    scaled_subset_hit_rates,
)
from .information import (
    PrivacyParams,
    SubsetSizeChoice,
    brr_mutual_info,
    brr_mutual_info_bound,
    max_mutual_info,
    mi_optimal_size,
    mi_optimal_size_real,
    mi_privacy_bound,
    subset_mutual_info,
)
from .sampling import (
    ViewFormatError,
    brr_randomize,
    brr_randomize_batch,
    derive_rng,
    ksubset_randomize,
    ksubset_randomize_batch,
    make_rng,
    mrr_randomize,
    mrr_randomize_batch,
    read_views,
    write_views,
)
from .simulation import (
    MECHANISMS,
    TABLE_GRID,
    ExperimentConfig,
    ExperimentResult,
    MechanismResult,
    random_theta,
    results_to_csv,
    results_to_json,
    run_experiment,
    run_grid,
)

__version__ = "0.1.0"

"""Kernels between permutations and Monte Carlo Gram estimators for partial rankings."""

__version__ = "0.1.0"

from .clustering import (
    Dendrogram,
    average_linkage,
    cut_tree,
    dendrogram_purity,
    sampled_dendrogram_purity,
)
from .errors import (
    DegenerateInputError,
    EnumerationLimitError,
    PsdViolationError,
    RankKernelError,
    TieError,
    UnsupportedRankingError,
)
from .estimators import (
    EstimatorConfig,
    EnumeratedProposal,
    GramEstimate,
    SampleBatch,
    derive_rng,
    draw_batch,
    draw_batches,
    estimate_gram,
    estimator_variance_exact,
    exact_gram,
    gram_for_rankings,
    herding_second_sample,
    induced_sq_distance_matrix,
    marginal_kernel_exact,
)
from .kernels import (
    KernelSpec,
    distance_matrix,
    eval_kernel,
    gram,
    induced_sq_distance,
    kernel_matrix,
    median_bandwidth,
    min_eigenvalue,
    require_psd,
)
from .mmd import MMDReport, mmd2_unbiased, permutation_test
from .partial import (
    PartialRanking,
    antithetic,
    cardinality,
    compose_rankings,
    enumerate_consistent,
    is_consistent,
    project,
    sample_antithetic_pair,
    sample_uniform,
    top_k_ranking,
)
from .perm import (
    Perm,
    cayley_distance,
    compose,
    hamming_distance,
    hamming_feature,
    identity,
    inverse,
    kendall_distance,
    kendall_feature,
    linf_distance,
    lp_distance,
    random_permutation,
    reversal,
    spearman_footrule,
    spearman_rank_corr,
)
from .sampling import (
    MallowsModel,
    MixtureModel,
    censor_topk,
    mallows_pmf,
    sample_mallows,
    sample_mixture,
    sample_uniform_permutations,
    two_population_mixture,
)

"""ranklab: learnability tools for multilabel ranking with relevance-score feedback.

Submodules:

- ``core``: permutations, relevance vectors, BinRel and equivalences
- ``losses``: ranking losses, normalizers, loss families and extrema
- ``hypothesis``: finite ranking classes, threshold restrictions, VC and Rademacher tools
- ``batch``: ERM, a consistent learner and the batch reductions
- ``online``: Halving, experts, REWA and the online reductions
- ``oracle``: exhaustive checks of the key inequalities and vote soundness
- ``harness``: synthetic data, experiment configs and the CLI runners
"""

from .batch import (
    BinarySample,
    LabeledSample,
    Selection,
    algorithm1,
    algorithm4,
    consistent_learner,
    empirical_risks,
    erm,
    loss_matrix,
    population_risk,
    population_risks,
)
from .core import (
    EquivalenceMode,
    Permutation,
    RelevanceVector,
    all_permutations,
    argsort_scores,
    bin_rel,
    equivalent,
    make_permutation,
    parse_permutation,
    top_set,
)
from .errors import RanklabError
from .harness import (
    ExperimentConfig,
    SyntheticDistribution,
    gen_class,
    gen_distribution,
    generalization_gap,
    run_experiment,
)
from .hypothesis import (
    BinaryClass,
    FiniteRankingClass,
    LinearRankerClass,
    linear_predict,
    rademacher_estimate,
    threshold_restrict,
    vc_lower_bound,
)
from .kernels import BACKEND
from .losses import (
    LossExtrema,
    LossFamily,
    LossSpec,
    MembershipReport,
    check_family,
    eval_loss,
    loss_extrema,
    normalizer_dcg,
    normalizer_prec,
    normalizer_sum,
    parse_family,
    parse_loss,
)
from .online import (
    ExpertPool,
    HalvingLearner,
    OnlineRun,
    Rewa,
    Stream,
    UpdateSchedule,
    aggregate_votes,
    algorithm3,
    necessity_learner,
    run_rewa,
)
from .oracle import VerificationReport, brute_min_loss, verify_lemma, verify_vote_soundness

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BinaryClass",
    "BinarySample",
    "EquivalenceMode",
    "ExperimentConfig",
    "ExpertPool",
    "FiniteRankingClass",
    "HalvingLearner",
    "LabeledSample",
    "LinearRankerClass",
    "LossExtrema",
    "LossFamily",
    "LossSpec",
    "MembershipReport",
    "OnlineRun",
    "Permutation",
    "RanklabError",
    "RelevanceVector",
    "Rewa",
    "Selection",
    "Stream",
    "SyntheticDistribution",
    "UpdateSchedule",
    "VerificationReport",
    "aggregate_votes",
    "algorithm1",
    "algorithm3",
    "algorithm4",
    "all_permutations",
    "argsort_scores",
    "bin_rel",
    "brute_min_loss",
    "check_family",
    "consistent_learner",
    "empirical_risks",
    "equivalent",
    "erm",
    "eval_loss",
    "gen_class",
    "gen_distribution",
    "generalization_gap",
    "linear_predict",
    "loss_extrema",
    "loss_matrix",
    "make_permutation",
    "necessity_learner",
    "normalizer_dcg",
    "normalizer_prec",
    "normalizer_sum",
    "parse_family",
    "parse_loss",
    "parse_permutation",
    "population_risk",
    "population_risks",
    "rademacher_estimate",
    "run_experiment",
    "run_rewa",
    "threshold_restrict",
    "top_set",
    "vc_lower_bound",
    "verify_lemma",
    "verify_vote_soundness",
]

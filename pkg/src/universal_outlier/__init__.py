"""Universal outlier hypothesis testing over batches of discrete sequences."""
from ._validation import BudgetExceededError, DegenerateMedianError, InputError
from .detectors import (
    GLRTOutlierDetector,
    KnownDistributionDetector,
    MeanOutlierDetector,
    MedianOutlierDetector,
    OutlierDecision,
    ScoreVector,
    glrt,
    mean_test,
    median_test_single_step,
    median_test_two_step,
    ml_test_known,
    score_sequences,
    top_t,
)
from .estimators import (
    TypeTransformer,
    TypicalDistributionEstimator,
    mean_estimate,
    median_estimate,
    split_batch,
)
from .exponents import (
    ExponentResult,
    empirical_exponent,
    hoeffding_mean_bound,
    hoeffding_median_bound,
    mean_exponent_grid,
    median_property_check,
    optimal_exponent,
)
from .probability import (
    Distribution,
    SequenceBatch,
    TypeVector,
    bhattacharyya,
    empirical_type,
    in_linf_ball,
    kl_divergence,
    mixture,
    sample_sequence,
)

__version__ = "0.1.0"

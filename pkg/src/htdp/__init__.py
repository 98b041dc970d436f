"""Differentially private stochastic optimization for heavy-tailed,
high-dimensional data: robust gradient estimation, private Frank-Wolfe over
polytopes, clamped-data private least squares, private sparse learners built
on noisy top-s selection, and a benchmark harness."""

from .core import (
    DataError,
    Dataset,
    L1BallDomain,
    PolytopeDomain,
    PrivacyBudget,
    RandomStream,
    SparsityDomain,
    project_l2_ball,
    shrink_dataset,
    shrink_scalar,
    split_dataset,
)
from .datagen import (
    FeatureDistribution,
    NoiseDistribution,
    gen_linear,
    gen_logistic,
    gen_wstar_l1,
    gen_wstar_sparse,
    load_csv,
    random_l1_ball_point,
    sample_noise,
)
from .fw_polytope import (
    FWConfig,
    FWRun,
    default_fw_schedule,
    default_lasso_schedule,
    ht_dp_fw,
    nonprivate_fw,
    trunc_dp_fw_lasso,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    TrialRecord,
    compute_excess_risk,
    emit_plot_series,
    run_experiment,
    write_results_csv,
)
from .losses import LossModel, empirical_risk, loss_value, per_sample_gradient
from .mechanisms import (
    BudgetAccountant,
    BudgetExhaustedError,
    ScoredCandidates,
    advanced_composition_step_budget,
    exponential_select,
    laplace_sample,
    peeling,
)
from .robust_mean import (
    TRUNCATION_BOUND,
    CatoniParams,
    robust_gradient_vector,
    robust_mean_1d,
    smoothed_soft_truncate,
    smoothing_correction,
    soft_truncate,
)
from .sparse_iht import (
    IHTConfig,
    IHTRun,
    default_sparse_linear_schedule,
    default_sparse_opt_schedule,
    ht_sparse_linear,
    ht_sparse_opt,
    nonprivate_iht,
)

__version__ = "0.1.0"

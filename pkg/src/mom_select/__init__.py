"""Median-of-means estimation, robust Lasso and estimator selection."""

from .app import ExperimentApplication, ExperimentConfig, generator_from_mapping
from .blocks import (
    BlockCountMode,
    BlockPartition,
    MeanConfidence,
    RobustMeanResult,
    block_means,
    check_variance_condition,
    choose_block_count,
    make_regular_partition,
    mean_half_width,
    median,
    robust_mean,
    robust_mean_confidence,
    variance_upper_bound,
)
from .constants import CONSTANTS, AbsoluteConstants
from .data_layer import ReportStore, StoredReport, read_sample_csv, write_rows_csv
from .dictionary import (
    BasisFunction,
    BasisKind,
    CellMoments,
    CoherenceStats,
    Dictionary,
    LassoHypotheses,
    build_custom_dictionary,
    build_histogram_dictionary,
    build_polynomial_dictionary,
    build_trigonometric_dictionary,
    check_dictionary_condition,
    check_lasso_hypotheses,
    coherence_stats,
    dictionary_from_dict,
    histogram_cell_moments,
    quadrature_gram,
    regular_breakpoints,
)
from .errors import (
    BlockFitError,
    ConditionViolationError,
    ConstructionError,
    DataError,
    DeltaTooSmallError,
    DimensionError,
    DomainError,
    EmptyInputError,
    IllPosedError,
    InsufficientBlocksError,
    InvalidPartitionError,
    LayoutError,
    MomSelectError,
    UnsupportedModelError,
)
from .estimator_selection import (
    CandidateEstimator,
    ModelSpec,
    PenaltyRule,
    SelectionConfig,
    SelectionMode,
    SelectionOracleCheck,
    SelectionResult,
    assign_penalties,
    classical_criterion,
    classical_oracle_ratio,
    classical_penalty,
    lambda_block_counts,
    lambda_partitions,
    nested_models,
    plugin_penalty,
    project_callable,
    project_coefficients,
    projection_candidates,
    robust_criterion,
    robust_oracle_check,
    robust_penalty,
    select,
)
from .experiments import (
    CoverageExperiment,
    ExperimentKind,
    ExperimentReport,
    ExperimentSettings,
    ReplicationResult,
    default_settings,
    run_coverage_experiment,
    summarize_report,
)
from .generators import (
    AnalyticMoments,
    GeneratorFamily,
    GeneratorSpec,
    RegressionMoments,
    analytic_moments,
    contaminate_block,
    generate,
    regression_moments,
    rep_seeds,
)
from .m_select import (
    ContrastModel,
    Estimate,
    HistogramEstimate,
    MarginParams,
    RateQuantities,
    RegressionEstimate,
    SelectorTrace,
    SeriesEstimate,
    contrast_kullback_histogram,
    contrast_l2_density,
    contrast_l2_regression,
    kullback_excess_loss,
    l2_density_excess_loss,
    pairwise_matrix,
    pairwise_median_loss,
    rate_bound,
    rate_quantities,
    regression_excess_loss,
    select_m_estimator,
)
from .mixing import (
    MixingCoefficients,
    MixingLayout,
    ar1_mixing_coefficients,
    coupling_allowance,
    make_mixing_layout,
    mixing_block_count,
    odd_block_sample,
    rate_quantities_mixing,
    robust_mean_mixing,
    select_m_estimator_mixing,
)
from .monitoring import ExperimentMetrics, ExperimentSnapshot, log_event
from .robust_lasso import (
    LassoFit,
    LassoProblem,
    OracleCheck,
    OracleRemainder,
    lasso_criterion,
    lasso_weights,
    oracle_bound,
    oracle_remainder,
    soft_threshold,
    solve_lasso,
)

__all__ = [
    "BlockCountMode",
    "BlockPartition",
    "MeanConfidence",
    "RobustMeanResult",
    "block_means",
    "check_variance_condition",
    "choose_block_count",
    "make_regular_partition",
    "mean_half_width",
    "median",
    "robust_mean",
    "robust_mean_confidence",
    "variance_upper_bound",
    "CONSTANTS",
    "AbsoluteConstants",
    "BasisFunction",
    "BasisKind",
    "CellMoments",
    "CoherenceStats",
    "Dictionary",
    "LassoHypotheses",
    "build_custom_dictionary",
    "build_histogram_dictionary",
    "build_polynomial_dictionary",
    "build_trigonometric_dictionary",
    "check_dictionary_condition",
    "check_lasso_hypotheses",
    "coherence_stats",
    "dictionary_from_dict",
    "histogram_cell_moments",
    "quadrature_gram",
    "regular_breakpoints",
    "LassoFit",
    "LassoProblem",
    "OracleCheck",
    "OracleRemainder",
    "lasso_criterion",
    "lasso_weights",
    "oracle_bound",
    "oracle_remainder",
    "soft_threshold",
    "solve_lasso",
    "CandidateEstimator",
    "ModelSpec",
    "PenaltyRule",
    "SelectionConfig",
    "SelectionMode",
    "SelectionOracleCheck",
    "SelectionResult",
    "assign_penalties",
    "classical_criterion",
    "classical_oracle_ratio",
    "classical_penalty",
    "lambda_block_counts",
    "lambda_partitions",
    "nested_models",
    "plugin_penalty",
    "project_callable",
    "project_coefficients",
    "projection_candidates",
    "robust_criterion",
    "robust_oracle_check",
    "robust_penalty",
    "select",
    "ContrastModel",
    "Estimate",
    "HistogramEstimate",
    "MarginParams",
    "RateQuantities",
    "RegressionEstimate",
    "SelectorTrace",
    "SeriesEstimate",
    "contrast_kullback_histogram",
    "contrast_l2_density",
    "contrast_l2_regression",
    "kullback_excess_loss",
    "l2_density_excess_loss",
    "pairwise_matrix",
    "pairwise_median_loss",
    "rate_bound",
    "rate_quantities",
    "regression_excess_loss",
    "select_m_estimator",
    "MixingCoefficients",
    "MixingLayout",
    "ar1_mixing_coefficients",
    "coupling_allowance",
    "make_mixing_layout",
    "mixing_block_count",
    "odd_block_sample",
    "rate_quantities_mixing",
    "robust_mean_mixing",
    "select_m_estimator_mixing",
    "AnalyticMoments",
    "GeneratorFamily",
    "GeneratorSpec",
    "RegressionMoments",
    "analytic_moments",
    "contaminate_block",
    "generate",
    "regression_moments",
    "rep_seeds",
    "CoverageExperiment",
    "ExperimentKind",
    "ExperimentReport",
    "ExperimentSettings",
    "ReplicationResult",
    "default_settings",
    "run_coverage_experiment",
    "summarize_report",
    "ReportStore",
    "StoredReport",
    "read_sample_csv",
    "write_rows_csv",
    "ExperimentApplication",
    "ExperimentConfig",
    "generator_from_mapping",
    "ExperimentMetrics",
    "ExperimentSnapshot",
    "log_event",
    "BlockFitError",
    "ConditionViolationError",
    "ConstructionError",
    "DataError",
    "DeltaTooSmallError",
    "DimensionError",
    "DomainError",
    "EmptyInputError",
    "IllPosedError",
    "InsufficientBlocksError",
    "InvalidPartitionError",
    "LayoutError",
    "MomSelectError",
    "UnsupportedModelError",
]

"""knockmed: knockoff-based selection of high-dimensional mediators.

A mediator is declared only when both the exposure-side and the
outcome-side association survive a knockoff comparison; the combined
scores are thresholded to control the false discovery rate of the
selected set. See the README for the full workflow.
"""

__version__ = "0.1.0"

from .effects import (
    EffectEstimate,
    fit_outcome_forest,
    gformula_nie,
    product_effects,
)
from .filtering import (
    RULE_KNOCKOFF,
    RULE_KNOCKOFF_PLUS,
    SelectionReport,
    WVector,
    fdp_estimate,
    knockoff_threshold,
    osff_product,
    swap,
)
from .forest import (
    ForestConfig,
    ForestModel,
    fit_regression_forest,
    oob_predictions,
    permutation_importance,
)
from .knockoffs import (
    GaussianModel,
    KnockoffCopy,
    default_shrinkage,
    equicorrelated_s,
    estimate_gaussian_model,
    sample_gaussian_knockoff,
    second_order_knockoff,
)
from .lasso import LassoFit, lasso_coordinate_descent, lasso_cv, lambda_max, lambda_path
from .pipeline import (
    PATHB_LASSO,
    PATHB_PLS,
    PATHB_RF,
    GkmsConfig,
    GkmsResult,
    gkms,
    standardize_dataset,
)
from .simulation import (
    EmpiricalMetrics,
    GroundTruth,
    SimulationConfig,
    gen_cosine,
    gen_interaction,
    gen_linear,
    run_replications,
    score_selection,
)
from .statistics import (
    CrossValidatedLambda,
    Dataset,
    FixedLambda,
    StatPair,
    patha_statistics,
    pathb_statistics_lasso,
    pathb_statistics_pls,
    pathb_statistics_rf,
)

__all__ = [
    "__version__",
    "CrossValidatedLambda",
    "Dataset",
    "EffectEstimate",
    "EmpiricalMetrics",
    "FixedLambda",
    "ForestConfig",
    "ForestModel",
    "GaussianModel",
    "GkmsConfig",
    "GkmsResult",
    "GroundTruth",
    "KnockoffCopy",
    "LassoFit",
    "PATHB_LASSO",
    "PATHB_PLS",
    "PATHB_RF",
    "RULE_KNOCKOFF",
    "RULE_KNOCKOFF_PLUS",
    "SelectionReport",
    "SimulationConfig",
    "StatPair",
    "WVector",
    "default_shrinkage",
    "equicorrelated_s",
    "estimate_gaussian_model",
    "fdp_estimate",
    "fit_outcome_forest",
    "fit_regression_forest",
    "gen_cosine",
    "gen_interaction",
    "gen_linear",
    "gformula_nie",
    "gkms",
    "knockoff_threshold",
    "lambda_max",
    "lambda_path",
    "lasso_coordinate_descent",
    "lasso_cv",
    "oob_predictions",
    "osff_product",
    "patha_statistics",
    "pathb_statistics_lasso",
    "pathb_statistics_pls",
    "pathb_statistics_rf",
    "permutation_importance",
    "product_effects",
    "run_replications",
    "sample_gaussian_knockoff",
    "score_selection",
    "second_order_knockoff",
    "standardize_dataset",
    "swap",
]

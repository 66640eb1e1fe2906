"""End-to-end mediator selection.

One call wires together the four stages: exposure-side knockoffs and
statistics, outcome-side knockoffs and statistics (lasso, forest, or
the residualization shortcut), the product combiner, and the threshold.
Everything is driven by a single integer seed through keyed substreams,
so a run is reproducible for any worker count and execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._util import keyed_rng
from .exceptions import DegenerateColumnError, InsufficientRowsError
from .filtering import (
    RULE_KNOCKOFF,
    RULE_KNOCKOFF_PLUS,
    SelectionReport,
    WVector,
    knockoff_threshold,
    osff_product,
)
from .forest import ForestConfig
from .knockoffs import default_shrinkage, estimate_gaussian_model, sample_gaussian_knockoff, second_order_knockoff
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

PATHB_LASSO = "lasso"
PATHB_RF = "random_forest"
PATHB_PLS = "pls"
_PATHB_METHODS = (PATHB_LASSO, PATHB_RF, PATHB_PLS)

# substream keys under the master seed
_KEY_SPLIT = 0
_KEY_PATHA = 1
_KEY_PATHB = 2
_KEY_FOREST = 3


@dataclass
class GkmsConfig:
    """Knobs for one selection run.

    ``data_split=False`` scores both pathways on all rows (the usual
    practice); turning it on partitions rows once by seed so the two
    statistic sets are computed on disjoint halves. ``shrinkage=None``
    picks the covariance shrinkage automatically from the sample shape.
    """

    q: float = 0.2
    rule: str = RULE_KNOCKOFF_PLUS
    pathb_method: str = PATHB_LASSO
    data_split: bool = False
    split_fraction: float = 0.5
    seed: int = 0
    shrinkage: float | None = None
    forest: ForestConfig = field(default_factory=ForestConfig)
    lambda_rule: FixedLambda | CrossValidatedLambda = field(
        default_factory=CrossValidatedLambda
    )

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {self.q}")
        if self.rule not in (RULE_KNOCKOFF, RULE_KNOCKOFF_PLUS):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.pathb_method not in _PATHB_METHODS:
            raise ValueError(f"unknown path-b method {self.pathb_method!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError(f"split_fraction must be in (0, 1), got {self.split_fraction}")
        if self.shrinkage is not None and not 0.0 <= self.shrinkage <= 1.0:
            raise ValueError(f"shrinkage must be in [0, 1], got {self.shrinkage}")


@dataclass
class GkmsResult:
    """Selection report plus the full statistic trace for diagnostics."""

    report: SelectionReport
    patha: StatPair
    pathb: StatPair
    w: WVector
    config: GkmsConfig


def _patha_knockoff_columns(data: Dataset, config: GkmsConfig) -> tuple[np.ndarray, list]:
    """Per-mediator knockoff columns, each generated jointly with the covariates."""
    n, p, d = data.n, data.p, data.d
    shrink = config.shrinkage
    if shrink is None:
        shrink = default_shrinkage(n, 1 + d)
    knockoffs = np.empty((n, p))
    warnings = []
    for j in range(p):
        block = np.column_stack([data.m[:, j], data.v])
        rng = keyed_rng(config.seed, _KEY_PATHA, j)
        try:
            model = estimate_gaussian_model(block, shrinkage=shrink)
            copy = sample_gaussian_knockoff(block, model, rng)
            knockoffs[:, j] = copy.knockoff[:, 0]
        except DegenerateColumnError:
            # a degenerate column must not kill the whole run; the identical
            # copy makes the per-j design rank-deficient and scores (0, 0)
            knockoffs[:, j] = data.m[:, j]
            warnings.append(f"mediator {j}: degenerate column, no knockoff sampled")
    return knockoffs, warnings


def _pathb_mediator_knockoffs(data: Dataset, config: GkmsConfig) -> np.ndarray:
    """Knockoff copy of the mediator block conditioning on (V, X)."""
    block = np.hstack([data.m, data.v, data.x[:, None]])
    copy = second_order_knockoff(
        block, shrinkage=config.shrinkage, rng=keyed_rng(config.seed, _KEY_PATHB)
    )
    return copy.knockoff[:, : data.p]


def gkms(data: Dataset, config: GkmsConfig | None = None, n_jobs: int = 1) -> GkmsResult:
    """Run the full selection procedure on one dataset.

    Returns the report together with both statistic pairs and the
    combined scores. An empty selection is a normal outcome.
    """
    if config is None:
        config = GkmsConfig()

    if config.data_split:
        if data.n < 20:
            raise InsufficientRowsError("data splitting needs at least 20 rows")
        perm = keyed_rng(config.seed, _KEY_SPLIT).permutation(data.n)
        n_a = int(np.floor(data.n * config.split_fraction))
        data_a = data.take(np.sort(perm[:n_a]))
        data_b = data.take(np.sort(perm[n_a:]))
    else:
        data_a = data_b = data

    ka, patha_warnings = _patha_knockoff_columns(data_a, config)
    patha = patha_statistics(data_a, ka)
    patha.warnings = patha_warnings + patha.warnings

    if config.pathb_method == PATHB_PLS:
        pathb = pathb_statistics_pls(
            data_b,
            rng=keyed_rng(config.seed, _KEY_PATHB),
            lambda_rule=config.lambda_rule,
            shrinkage=config.shrinkage,
        )
    elif config.pathb_method == PATHB_LASSO:
        mk = _pathb_mediator_knockoffs(data_b, config)
        pathb = pathb_statistics_lasso(data_b, mk, lambda_rule=config.lambda_rule)
    else:
        mk = _pathb_mediator_knockoffs(data_b, config)
        pathb = pathb_statistics_rf(
            data_b,
            mk,
            config=config.forest,
            rng=keyed_rng(config.seed, _KEY_FOREST),
            n_jobs=n_jobs,
        )

    w = osff_product(patha, pathb)
    report = knockoff_threshold(w, config.q, config.rule)
    report.warnings = patha.warnings + pathb.warnings
    return GkmsResult(report=report, patha=patha, pathb=pathb, w=w, config=config)


def standardize_dataset(data: Dataset) -> Dataset:
    """Scale each mediator column and the outcome to unit RMS, without centering.

    Scaling without centering keeps regression coefficients on the
    standardized scale while preserving intercept structure; the exposure
    and covariates pass through untouched.
    """
    scales = np.sqrt(np.mean(np.square(data.m), axis=0))
    if np.any(scales <= 0):
        bad = int(np.argmin(scales))
        raise DegenerateColumnError(f"mediator column {bad} has zero norm")
    y_scale = float(np.sqrt(np.mean(np.square(data.y))))
    if y_scale <= 0:
        raise DegenerateColumnError("outcome has zero norm")
    return Dataset(x=data.x, v=data.v, m=data.m / scales, y=data.y / y_scale)


def with_seed(config: GkmsConfig, seed: int) -> GkmsConfig:
    return replace(config, seed=seed)

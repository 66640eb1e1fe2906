"""Paired feature/knockoff importance statistics for both pathways.

For mediator selection two relationships are scored per candidate j:
the exposure-side association (exposure vs M_j given covariates) and
the outcome-side association (outcome vs M_j given everything else).
Each score comes as a (z, z_tilde) pair, where z_tilde is the same
statistic computed on the knockoff column; under the respective null
the two are exchangeable, which is all the downstream filter needs.

Columns are rescaled to unit root-mean-square inside every statistic so
that |coefficient| comparisons between a column and its knockoff are
scale-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import as_float_matrix, standardize_columns
from .exceptions import (
    InsufficientColumnsError,
    InsufficientRowsError,
    SingularDesignError,
)
from .forest import ForestConfig, fit_regression_forest, permutation_importance
from .knockoffs import second_order_knockoff
from .lasso import lasso_coordinate_descent, lasso_cv

PATH_A = "a"
PATH_B = "b"


@dataclass
class Dataset:
    """Column-aligned sample: exposure x, covariates v, mediators m, outcome y."""

    x: np.ndarray
    v: np.ndarray
    m: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = as_float_matrix(self.x, "x").reshape(-1)
        self.y = as_float_matrix(self.y, "y").reshape(-1)
        self.m = as_float_matrix(self.m, "m")
        n = self.x.shape[0]
        if self.v is None:
            self.v = np.empty((n, 0))
        self.v = as_float_matrix(self.v, "v")
        if self.v.ndim == 1:
            self.v = self.v.reshape(-1, 1)
        if self.m.ndim != 2 or self.m.shape[1] < 1:
            raise InsufficientColumnsError("m must be an (n, p) matrix with p >= 1")
        if not (self.y.shape[0] == self.m.shape[0] == self.v.shape[0] == n):
            raise ValueError("x, v, m, y must share the same number of rows")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.m.shape[1]

    @property
    def d(self) -> int:
        return self.v.shape[1]

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(x=self.x[rows], v=self.v[rows], m=self.m[rows], y=self.y[rows])


@dataclass
class StatPair:
    """Nonnegative importance scores for features (z) and knockoffs (z_tilde)."""

    z: np.ndarray
    z_tilde: np.ndarray
    path: str
    method: str
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.z_tilde = np.asarray(self.z_tilde, dtype=float)
        if self.z.shape != self.z_tilde.shape:
            raise ValueError("z and z_tilde must have equal length")


@dataclass(frozen=True)
class FixedLambda:
    """Use one fixed penalty level."""

    value: float


@dataclass(frozen=True)
class CrossValidatedLambda:
    """Pick the penalty by K-fold cross-validation over a log-spaced path."""

    folds: int = 10
    n_lambdas: int = 100


def patha_statistics(
    data: Dataset, knockoffs: np.ndarray, method: str = "marginal"
) -> StatPair:
    """Exposure-side statistics from per-mediator marginal regressions.

    For each j, the exposure is regressed on (M_j, knockoff_j, covariates)
    and the absolute coefficients of the first two columns become
    (z_j, z_tilde_j). Rank-deficient per-j designs yield (0, 0) with a
    warning instead of aborting the run. The outcome never enters.
    """
    if method != "marginal":
        raise ValueError(f"unsupported path-a method {method!r}")
    knockoffs = as_float_matrix(knockoffs, "knockoffs")
    if knockoffs.shape != data.m.shape:
        raise ValueError("knockoffs must be column-aligned with data.m")
    n, p = data.m.shape
    z = np.zeros(p)
    zt = np.zeros(p)
    warnings: list = []
    intercept = np.ones((n, 1))
    for j in range(p):
        block = np.column_stack([data.m[:, j], knockoffs[:, j], data.v])
        block_std, scales = standardize_columns(block)
        design = np.hstack([block_std, intercept])
        coef, _, rank, _ = np.linalg.lstsq(design, data.x, rcond=None)
        if rank < design.shape[1] or np.any(scales[:2] == 0):
            warnings.append(
                f"mediator {j}: exposure-side design is rank-deficient, statistics set to 0"
            )
            continue
        z[j] = abs(coef[0])
        zt[j] = abs(coef[1])
    return StatPair(z=z, z_tilde=zt, path=PATH_A, method="marginal", warnings=warnings)


def _fit_stat_lasso(design, response, penalty, lambda_rule):
    warnings = []
    if isinstance(lambda_rule, FixedLambda):
        fit = lasso_coordinate_descent(
            design, response, lambda_rule.value, penalty_factor=penalty
        )
        lam = lambda_rule.value
    elif isinstance(lambda_rule, CrossValidatedLambda):
        fit, lam = lasso_cv(
            design,
            response,
            n_folds=lambda_rule.folds,
            n_lambdas=lambda_rule.n_lambdas,
            penalty_factor=penalty,
        )
    else:
        raise ValueError(f"unsupported lambda rule {lambda_rule!r}")
    if not fit.converged:
        warnings.append(
            f"lasso did not converge within {fit.n_iterations} sweeps at lambda={lam:.4g}"
        )
    return fit, warnings


def pathb_statistics_lasso(
    data: Dataset,
    mediator_knockoffs: np.ndarray,
    lambda_rule: FixedLambda | CrossValidatedLambda | None = None,
) -> StatPair:
    """Outcome-side statistics from one joint lasso.

    The outcome is regressed on [M | knockoffs | V | X]; exposure and
    covariates are included unpenalized as adjustment variables, and the
    absolute coefficients of M_j / knockoff_j become the pair.
    ``mediator_knockoffs`` must have been generated conditioning on
    (V, X) jointly with the mediator block.
    """
    mediator_knockoffs = as_float_matrix(mediator_knockoffs, "mediator_knockoffs")
    if mediator_knockoffs.shape != data.m.shape:
        raise ValueError("mediator_knockoffs must be column-aligned with data.m")
    if lambda_rule is None:
        lambda_rule = CrossValidatedLambda()
    p = data.p
    design = np.hstack([data.m, mediator_knockoffs, data.v, data.x[:, None]])
    penalty = np.concatenate([np.ones(2 * p), np.zeros(data.d + 1)])
    fit, warnings = _fit_stat_lasso(design, data.y, penalty, lambda_rule)
    coefs = np.abs(fit.coefficients)
    return StatPair(
        z=coefs[:p], z_tilde=coefs[p : 2 * p], path=PATH_B, method="lasso",
        warnings=warnings,
    )


def pathb_statistics_rf(
    data: Dataset,
    mediator_knockoffs: np.ndarray,
    config: ForestConfig | None = None,
    rng: np.random.Generator | None = None,
    n_jobs: int = 1,
) -> StatPair:
    """Outcome-side statistics from a regression forest.

    Fits the forest of the outcome on [M | knockoffs | V | X] and scores
    each column by out-of-bag permutation importance. This is the variant
    that picks up interactions and other nonlinear outcome models.
    """
    mediator_knockoffs = as_float_matrix(mediator_knockoffs, "mediator_knockoffs")
    if mediator_knockoffs.shape != data.m.shape:
        raise ValueError("mediator_knockoffs must be column-aligned with data.m")
    if rng is None:
        rng = np.random.default_rng()
    p = data.p
    design = np.hstack([data.m, mediator_knockoffs, data.v, data.x[:, None]])
    design, _ = standardize_columns(design)
    model = fit_regression_forest(design, data.y, config=config, rng=rng, n_jobs=n_jobs)
    imp = permutation_importance(model, design, data.y, rng=rng, n_jobs=n_jobs)
    return StatPair(
        z=imp[:p], z_tilde=imp[p : 2 * p], path=PATH_B, method="random_forest"
    )


def pathb_statistics_pls(
    data: Dataset,
    rng: np.random.Generator | None = None,
    lambda_rule: FixedLambda | CrossValidatedLambda | None = None,
    shrinkage: float | None = None,
) -> StatPair:
    """Outcome-side statistics via the residualization shortcut.

    When the outcome model is linear, projecting the outcome and every
    mediator onto the orthogonal complement of (1, X, V) removes the
    exposure/covariate contribution; a knockoff copy of the residualized
    mediator matrix plus one lasso of the outcome residuals on
    [residuals | knockoffs] yields the pair directly.
    """
    if rng is None:
        rng = np.random.default_rng()
    if lambda_rule is None:
        lambda_rule = CrossValidatedLambda()
    n, d = data.n, data.d
    if n <= d + 2:
        raise InsufficientRowsError(f"need n > d + 2 rows, got n={n}, d={d}")
    basis = np.hstack([np.ones((n, 1)), data.x[:, None], data.v])
    if np.linalg.matrix_rank(basis) < basis.shape[1]:
        raise SingularDesignError("(1, X, V) is rank-deficient")
    coef_y, *_ = np.linalg.lstsq(basis, data.y, rcond=None)
    coef_m, *_ = np.linalg.lstsq(basis, data.m, rcond=None)
    r_y = data.y - basis @ coef_y
    r_m = data.m - basis @ coef_m

    copy = second_order_knockoff(r_m, shrinkage=shrinkage, rng=rng)
    design = np.hstack([copy.original, copy.knockoff])
    fit, warnings = _fit_stat_lasso(design, r_y, np.ones(2 * data.p), lambda_rule)
    coefs = np.abs(fit.coefficients)
    p = data.p
    return StatPair(
        z=coefs[:p], z_tilde=coefs[p : 2 * p], path=PATH_B, method="pls",
        warnings=warnings,
    )

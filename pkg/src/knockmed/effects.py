"""Post-selection mediation effect estimates.

Two estimators, matched to how the outcome side was modeled:

- ``product_effects``: per-mediator product of OLS coefficients
  (exposure -> mediator times mediator -> outcome), with percentile
  bootstrap intervals. Appropriate when the outcome model is linear.
- ``gformula_nie``: natural indirect effect of each mediator under a
  fitted outcome forest, evaluated by Monte Carlo over the mediator
  model. The contrast holds the exposure at its reference level and
  moves only mediator k between its two counterfactual levels:
  E[Y(x0, M_k(x1), M_-k(x0))] - E[Y(x0, M_k(x0), M_-k(x0))].

Both refit on the original columns only; knockoffs are selection
devices and never enter effect estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import as_float_matrix
from .exceptions import (
    InsufficientRowsError,
    NonBinaryExposureError,
    SingularDesignError,
)
from .forest import ForestConfig, ForestModel, fit_regression_forest
from .knockoffs import _cholesky_with_jitter
from .statistics import Dataset

METHOD_PRODUCT = "product_ols"
METHOD_GFORMULA = "gformula_rf"

_MAX_SEED = 2**31 - 1


@dataclass
class EffectEstimate:
    mediator_index: int
    alpha_hat: float
    beta_hat: float
    indirect: float
    ci_low: float
    ci_high: float
    p_value: float
    method: str


def _percentile_summary(draws: np.ndarray) -> tuple[float, float, float]:
    ci_low, ci_high = np.percentile(draws, [2.5, 97.5])
    p = 2.0 * min(float(np.mean(draws <= 0)), float(np.mean(draws >= 0)))
    return float(ci_low), float(ci_high), min(p, 1.0)


def _product_point(data: Dataset, selected: np.ndarray, check_rank: bool):
    n = data.n
    basis_a = np.hstack([np.ones((n, 1)), data.x[:, None], data.v])
    basis_b = np.hstack([basis_a, data.m[:, selected]])
    if check_rank:
        if np.linalg.matrix_rank(basis_a) < basis_a.shape[1]:
            raise SingularDesignError("(1, X, V) is rank-deficient")
        if np.linalg.matrix_rank(basis_b) < basis_b.shape[1]:
            raise SingularDesignError("(1, X, V, selected M) is rank-deficient")
    coef_a, *_ = np.linalg.lstsq(basis_a, data.m[:, selected], rcond=None)
    alphas = coef_a[1]
    coef_b, *_ = np.linalg.lstsq(basis_b, data.y, rcond=None)
    betas = coef_b[basis_a.shape[1]:]
    return alphas, betas


def product_effects(
    data: Dataset,
    selected,
    bootstrap_reps: int = 100,
    rng: np.random.Generator | None = None,
) -> list[EffectEstimate]:
    """Product-of-coefficients estimates for each selected mediator.

    alpha_k comes from OLS of M_k on (X, V); beta_k from OLS of the
    outcome on (X, V, all selected mediators); the indirect effect is
    their product. Intervals and two-sided p-values are percentile
    bootstrap over row resamples.
    """
    selected = np.asarray(selected, dtype=int)
    if selected.size == 0:
        raise ValueError("selected must be nonempty")
    if rng is None:
        rng = np.random.default_rng()
    n = data.n
    if n <= selected.size + data.d + 2:
        raise InsufficientRowsError(
            f"need n > {selected.size + data.d + 2} rows, got {n}"
        )
    alphas, betas = _product_point(data, selected, check_rank=True)
    indirect = alphas * betas

    boot_seeds = np.random.SeedSequence(int(rng.integers(_MAX_SEED))).spawn(bootstrap_reps)
    draws = np.empty((bootstrap_reps, selected.size))
    for b, ss in enumerate(boot_seeds):
        idx = np.random.default_rng(ss).integers(0, n, size=n)
        a_b, b_b = _product_point(data.take(idx), selected, check_rank=False)
        draws[b] = a_b * b_b

    estimates = []
    for i, k in enumerate(selected):
        ci_low, ci_high, p = _percentile_summary(draws[:, i])
        estimates.append(EffectEstimate(
            mediator_index=int(k), alpha_hat=float(alphas[i]), beta_hat=float(betas[i]),
            indirect=float(indirect[i]), ci_low=ci_low, ci_high=ci_high,
            p_value=p, method=METHOD_PRODUCT,
        ))
    return estimates


def fit_outcome_forest(
    data: Dataset,
    config: ForestConfig | None = None,
    rng: np.random.Generator | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Forest of the outcome on [M | V | X], the design gformula_nie expects."""
    design = np.hstack([data.m, data.v, data.x[:, None]])
    return fit_regression_forest(design, data.y, config=config, rng=rng, n_jobs=n_jobs)


def _exposure_levels(x: np.ndarray, dichotomize: bool) -> tuple[float, float]:
    values = np.unique(x)
    if values.size == 2:
        return float(values[0]), float(values[1])
    if values.size < 2:
        raise NonBinaryExposureError("exposure is constant")
    if not dichotomize:
        raise NonBinaryExposureError(
            "exposure is not binary; pass exposure_levels or enable dichotomization"
        )
    med = np.median(x)
    low, high = x[x <= med], x[x > med]
    if high.size == 0:
        raise NonBinaryExposureError("exposure cannot be split at its median")
    return float(np.median(low)), float(np.median(high))


class _MediatorModel:
    """Linear mediator model M ~ (1, X, V) with joint Gaussian residuals."""

    def __init__(self, data: Dataset):
        n = data.n
        basis = np.hstack([np.ones((n, 1)), data.x[:, None], data.v])
        coef, *_ = np.linalg.lstsq(basis, data.m, rcond=None)
        self.coef = coef
        self.alpha = coef[1]
        resid = data.m - basis @ coef
        cov = np.atleast_2d(np.cov(resid, rowvar=False, ddof=1))
        self.chol = _cholesky_with_jitter(0.5 * (cov + cov.T))

    def mean_at(self, x_level: float, v: np.ndarray) -> np.ndarray:
        n = v.shape[0]
        basis = np.hstack([np.ones((n, 1)), np.full((n, 1), x_level), v])
        return basis @ self.coef


def _nie_once(
    forest: ForestModel,
    med_model: _MediatorModel,
    v: np.ndarray,
    selected: np.ndarray,
    levels: tuple[float, float],
    n_draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Average NIE per selected mediator over n_draws counterfactual draws.

    Draws are stacked into chunks so each forest prediction touches many
    rows at once; the estimate itself is unchanged by the chunking.
    """
    x0, x1 = levels
    n, p = v.shape[0], med_model.coef.shape[1]
    base_mean = med_model.mean_at(x0, v)
    shifts = med_model.alpha[selected] * (x1 - x0)
    chunk = max(1, min(n_draws, 200_000 // max(n, 1)))
    totals = np.zeros(selected.size)
    done = 0
    while done < n_draws:
        b = min(chunk, n_draws - done)
        noise = rng.standard_normal((b * n, p))
        m0 = np.tile(base_mean, (b, 1)) + noise @ med_model.chol.T
        block = np.hstack([m0, np.tile(v, (b, 1)), np.full((b * n, 1), x0)])
        baseline = forest.predict(block)
        for i, k in enumerate(selected):
            saved = block[:, k].copy()
            block[:, k] = saved + shifts[i]
            shifted = forest.predict(block)
            block[:, k] = saved
            totals[i] += float(np.sum(shifted - baseline)) / n
        done += b
    return totals / n_draws


def gformula_nie(
    data: Dataset,
    selected,
    forest: ForestModel,
    mc_draws: int = 200,
    bootstrap_reps: int = 100,
    rng: np.random.Generator | None = None,
    exposure_levels: tuple[float, float] | None = None,
    dichotomize: bool = True,
) -> list[EffectEstimate]:
    """Monte Carlo natural indirect effects under a fitted outcome forest.

    ``forest`` must be fitted on [M | V | X] (see ``fit_outcome_forest``)
    using the original columns. Counterfactual mediators are simulated
    from the linear mediator model with jointly Gaussian residuals; the
    point estimate averages ``mc_draws`` simulations. Bootstrap intervals
    resample rows and refit the mediator model with one simulation per
    replicate (the forest is held fixed). A continuous exposure is
    dichotomized at its median unless two reference levels are given.

    ``beta_hat`` is not defined for this estimator and reported as NaN.
    """
    selected = np.asarray(selected, dtype=int)
    if selected.size == 0:
        raise ValueError("selected must be nonempty")
    if rng is None:
        rng = np.random.default_rng()
    if exposure_levels is not None:
        levels = (float(exposure_levels[0]), float(exposure_levels[1]))
    else:
        levels = _exposure_levels(data.x, dichotomize)

    med_model = _MediatorModel(data)
    point_rng = np.random.default_rng(int(rng.integers(_MAX_SEED)))
    point = _nie_once(forest, med_model, data.v, selected, levels, mc_draws, point_rng)

    boot_seeds = np.random.SeedSequence(int(rng.integers(_MAX_SEED))).spawn(bootstrap_reps)
    draws = np.empty((bootstrap_reps, selected.size))
    for b, ss in enumerate(boot_seeds):
        boot_rng = np.random.default_rng(ss)
        idx = boot_rng.integers(0, data.n, size=data.n)
        boot_model = _MediatorModel(data.take(idx))
        draws[b] = _nie_once(
            forest, boot_model, data.v[idx], selected, levels, 1, boot_rng
        )

    estimates = []
    for i, k in enumerate(selected):
        ci_low, ci_high, p = _percentile_summary(draws[:, i])
        estimates.append(EffectEstimate(
            mediator_index=int(k), alpha_hat=float(med_model.alpha[k]),
            beta_hat=float("nan"), indirect=float(point[i]),
            ci_low=ci_low, ci_high=ci_high, p_value=p, method=METHOD_GFORMULA,
        ))
    return estimates

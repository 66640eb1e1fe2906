"""Gaussian Model-X knockoff construction.

A knockoff copy of an n x m feature matrix is a synthetic matrix whose
columns mimic the dependence structure of the originals but carry no
extra information about any response. For jointly Gaussian features
with mean ``mu`` and covariance ``sigma``, rows of the knockoff matrix
are drawn from the conditional law

    X_tilde | X ~ N(X - (X - mu) sigma^{-1} diag(s),
                    2 diag(s) - diag(s) sigma^{-1} diag(s)),

which makes the concatenation [X | X_tilde] have covariance

    G = [[sigma, sigma - diag(s)], [sigma - diag(s), sigma]].

The diagonal ``s`` trades off power (large s decorrelates a feature
from its knockoff) against validity (G must stay positive
semidefinite); here it is set by the closed-form equi-correlated rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import as_float_matrix
from .exceptions import (
    CholeskyFailureError,
    DegenerateColumnError,
    NotPositiveSemidefiniteError,
)

_PSD_TOL = 1e-8
_SYM_TOL = 1e-10


@dataclass
class GaussianModel:
    """Gaussian feature model plus the knockoff diagonal.

    Attributes
    ----------
    mu : (m,) feature means.
    sigma : (m, m) symmetric positive semidefinite feature covariance.
    s : (m,) knockoff diagonal in covariance units.
    """

    mu: np.ndarray
    sigma: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.mu = as_float_matrix(self.mu, "mu")
        self.sigma = as_float_matrix(self.sigma, "sigma")
        self.s = as_float_matrix(self.s, "s")
        m = self.mu.shape[0]
        if self.sigma.shape != (m, m) or self.s.shape != (m,):
            raise ValueError("mu, sigma and s have inconsistent shapes")
        if np.max(np.abs(self.sigma - self.sigma.T), initial=0.0) > _SYM_TOL:
            raise NotPositiveSemidefiniteError("sigma is not symmetric")

    @property
    def n_features(self) -> int:
        return self.mu.shape[0]

    def joint_covariance(self) -> np.ndarray:
        """Target covariance G of the concatenated [X | X_tilde]."""
        off = self.sigma - np.diag(self.s)
        return np.block([[self.sigma, off], [off, self.sigma]])


@dataclass
class KnockoffCopy:
    """An original matrix together with its sampled knockoff."""

    original: np.ndarray
    knockoff: np.ndarray
    column_map: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.original.shape != self.knockoff.shape:
            raise ValueError("original and knockoff must have identical shape")
        if self.column_map is None:
            self.column_map = np.arange(self.original.shape[1])


def equicorrelated_s(sigma: np.ndarray) -> np.ndarray:
    """Closed-form knockoff diagonal.

    Converts ``sigma`` to a correlation matrix R, sets every coordinate
    to min(2 * lambda_min(R), 1) on the correlation scale, and maps back
    to covariance units. This is the standard dependency-free choice; it
    keeps G positive semidefinite for any valid sigma.
    """
    sigma = as_float_matrix(sigma, "sigma")
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be a square matrix")
    if np.max(np.abs(sigma - sigma.T), initial=0.0) > _SYM_TOL:
        raise NotPositiveSemidefiniteError("sigma is not symmetric")
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        raise DegenerateColumnError("sigma has non-positive diagonal entries")

    inv_sd = 1.0 / np.sqrt(diag)
    corr = sigma * np.outer(inv_sd, inv_sd)
    lam_min = float(np.linalg.eigvalsh(corr)[0])
    if lam_min < -_PSD_TOL:
        raise NotPositiveSemidefiniteError(
            f"correlation matrix has minimum eigenvalue {lam_min:.3e}"
        )
    lam_min = max(lam_min, 0.0)
    s = min(2.0 * lam_min, 1.0) * diag

    # sanity check: V = 2 diag(s) - diag(s) sigma^{-1} diag(s) must be PSD
    v = _conditional_covariance(sigma, s)
    v_min = float(np.linalg.eigvalsh(v)[0])
    scale = max(float(np.max(np.abs(v), initial=0.0)), 1.0)
    if v_min < -_PSD_TOL * scale:
        raise NotPositiveSemidefiniteError(
            f"conditional knockoff covariance has eigenvalue {v_min:.3e}"
        )
    return s


def _conditional_covariance(sigma: np.ndarray, s: np.ndarray) -> np.ndarray:
    ds = np.diag(s)
    solved = np.linalg.solve(sigma, ds)
    v = 2.0 * ds - ds @ solved
    return 0.5 * (v + v.T)


def default_shrinkage(n: int, m: int) -> float:
    """0.1 in the n < 5m regime (keeps estimated sigma well conditioned), else 0."""
    return 0.1 if n < 5 * m else 0.0


def estimate_gaussian_model(data: np.ndarray, shrinkage: float = 0.0) -> GaussianModel:
    """Fit a GaussianModel to data by moments.

    ``sigma`` is a convex combination of the empirical covariance and its
    diagonal: (1 - shrinkage) * cov + shrinkage * diag(var). ``s`` comes
    from :func:`equicorrelated_s`.
    """
    data = as_float_matrix(data, "data")
    if data.ndim != 2:
        raise ValueError("data must be a 2-d array")
    n, m = data.shape
    if n < 2:
        raise DegenerateColumnError("every column is degenerate with fewer than 2 rows")
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError(f"shrinkage must be in [0, 1], got {shrinkage}")

    mu = data.mean(axis=0)
    cov = np.cov(data, rowvar=False, ddof=1).reshape(m, m)
    variances = np.diag(cov)
    if np.any(variances <= 0):
        bad = int(np.argmin(variances))
        raise DegenerateColumnError(f"column {bad} has zero variance")
    sigma = (1.0 - shrinkage) * cov + shrinkage * np.diag(variances)
    sigma = 0.5 * (sigma + sigma.T)
    return GaussianModel(mu=mu, sigma=sigma, s=equicorrelated_s(sigma))


def _cholesky_with_jitter(v: np.ndarray, max_retries: int = 3) -> np.ndarray:
    """Lower Cholesky factor, adding bounded diagonal jitter on round-off failure."""
    m = v.shape[0]
    if np.max(np.abs(v), initial=0.0) == 0.0:
        return np.zeros_like(v)
    jitter = 1e-10 * np.trace(v) / m
    attempt = v
    for retry in range(max_retries + 1):
        try:
            return np.linalg.cholesky(attempt)
        except np.linalg.LinAlgError:
            attempt = attempt + jitter * np.eye(m)
    raise CholeskyFailureError(
        f"conditional covariance not factorizable after {max_retries} jitter retries"
    )


def sample_gaussian_knockoff(
    data: np.ndarray, model: GaussianModel, rng: np.random.Generator
) -> KnockoffCopy:
    """Sample a knockoff copy of ``data`` under ``model``.

    Rows are independent draws from the Gaussian conditional law; the
    mean formula is applied to centered data and the mean added back, so
    the construction is exact for models with nonzero ``mu``.
    """
    data = as_float_matrix(data, "data")
    n, m = data.shape
    if m != model.n_features:
        raise ValueError(f"data has {m} columns but model expects {model.n_features}")

    solved = np.linalg.solve(model.sigma, np.diag(model.s))  # sigma^{-1} diag(s)
    centered = data - model.mu
    mean_cond = data - centered @ solved
    v = _conditional_covariance(model.sigma, model.s)
    chol = _cholesky_with_jitter(v)
    noise = rng.standard_normal(size=(n, m))
    knockoff = mean_cond + noise @ chol.T
    return KnockoffCopy(original=data, knockoff=knockoff)


def second_order_knockoff(
    data: np.ndarray, shrinkage: float | None = None, rng: np.random.Generator | None = None
) -> KnockoffCopy:
    """Estimate a Gaussian model from ``data`` and sample its knockoff.

    ``shrinkage=None`` applies :func:`default_shrinkage`.
    """
    data = as_float_matrix(data, "data")
    if rng is None:
        rng = np.random.default_rng()
    n, m = data.shape
    if shrinkage is None:
        shrinkage = default_shrinkage(n, m)
    model = estimate_gaussian_model(data, shrinkage=shrinkage)
    return sample_gaussian_knockoff(data, model, rng)

"""Shared helpers: seeded RNG streams and column scaling."""

from __future__ import annotations

import numpy as np

from .exceptions import NonFiniteInputError


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for stream ``key`` under master ``seed``.

    Distinct keys give statistically independent streams, so work units
    (per-column knockoffs, trees, replications) can run in any order or
    on any number of workers without changing the result.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def as_float_matrix(x, name: str = "array") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError(f"{name} contains NaN or infinite entries")
    return x


def column_scales(x: np.ndarray) -> np.ndarray:
    """Root-mean-square of each column (the 'unit second moment' scale)."""
    return np.sqrt(np.mean(np.square(x), axis=0))


def standardize_columns(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each column to unit root-mean-square.

    Zero columns are left untouched (scale reported as 0) so callers can
    flag them rather than dividing by zero.
    """
    scales = column_scales(x)
    safe = np.where(scales > 0, scales, 1.0)
    return x / safe, scales

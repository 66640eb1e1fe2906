"""Bootstrap regression forest with out-of-bag permutation importance.

Trees are standard CART regressors (variance-minimizing splits) fitted
on bootstrap bags; every per-tree decision (bag, split randomness, OOB
permutation) is derived from seeds fixed before any fitting starts, so
results are identical for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.tree import DecisionTreeRegressor

from ._util import as_float_matrix
from .exceptions import InsufficientColumnsError, InsufficientRowsError

_MAX_SEED = 2**31 - 1


@dataclass
class ForestConfig:
    """Forest hyperparameters. ``mtry=None`` means floor(k / 3) at fit time."""

    n_trees: int = 300
    mtry: int | None = None
    min_node: int = 5


@dataclass
class ForestModel:
    n_trees: int
    mtry: int
    min_node: int
    trees: list = field(repr=False, default_factory=list)
    oob_indices: list = field(repr=False, default_factory=list)
    seed: int = 0
    n_features: int = 0

    def predict(self, design: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(design, dtype=np.float32)
        out = np.zeros(x.shape[0])
        for tree in self.trees:
            out += tree.predict(x, check_input=False)
        return out / len(self.trees)


def _plant_tree(x, y, mtry, min_node, tree_ss, n):
    tree_rng = np.random.default_rng(tree_ss)
    bag = tree_rng.integers(0, n, size=n)
    oob = np.setdiff1d(np.arange(n), bag)
    tree = DecisionTreeRegressor(
        max_features=mtry,
        min_samples_leaf=min_node,
        random_state=int(tree_rng.integers(_MAX_SEED)),
    )
    tree.fit(x[bag], y[bag])
    return tree, oob


def fit_regression_forest(
    design: np.ndarray,
    response: np.ndarray,
    config: ForestConfig | None = None,
    rng: np.random.Generator | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Fit ``config.n_trees`` CART regression trees on bootstrap bags."""
    x = as_float_matrix(design, "design")
    y = as_float_matrix(response, "response")
    if config is None:
        config = ForestConfig()
    if rng is None:
        rng = np.random.default_rng()
    n, k = x.shape
    if k < 1:
        raise InsufficientColumnsError("design has no columns")
    if n < 2 * config.min_node:
        raise InsufficientRowsError(
            f"need at least {2 * config.min_node} rows, got {n}"
        )
    mtry = config.mtry if config.mtry is not None else max(1, k // 3)
    mtry = min(mtry, k)

    seed = int(rng.integers(_MAX_SEED))
    tree_seeds = np.random.SeedSequence(seed).spawn(config.n_trees)
    planted = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_plant_tree)(x, y, mtry, config.min_node, ss, n) for ss in tree_seeds
    )
    model = ForestModel(
        n_trees=config.n_trees,
        mtry=mtry,
        min_node=config.min_node,
        seed=seed,
        n_features=k,
    )
    for tree, oob in planted:
        model.trees.append(tree)
        model.oob_indices.append(oob)
    return model


def oob_predictions(model: ForestModel, design: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row average prediction over trees where the row was out of bag.

    Returns (predictions, counts); rows never out of bag have count 0 and
    prediction NaN.
    """
    x = np.ascontiguousarray(design, dtype=np.float32)
    total = np.zeros(x.shape[0])
    counts = np.zeros(x.shape[0])
    for tree, oob in zip(model.trees, model.oob_indices):
        if oob.size == 0:
            continue
        total[oob] += tree.predict(x[oob], check_input=False)
        counts[oob] += 1
    with np.errstate(invalid="ignore"):
        pred = np.where(counts > 0, total / np.maximum(counts, 1), np.nan)
    return pred, counts


def _tree_importance(tree, oob, x, y, perm_ss, k):
    if oob.size < 2:
        return None
    perm = np.random.default_rng(perm_ss).permutation(oob.size)
    x_oob = np.ascontiguousarray(x[oob], dtype=np.float32)
    y_oob = y[oob]
    base_mse = float(np.mean((tree.predict(x_oob, check_input=False) - y_oob) ** 2))
    used = np.unique(tree.tree_.feature[tree.tree_.feature >= 0])
    deltas = np.zeros(k)
    for j in used:
        saved = x_oob[:, j].copy()
        x_oob[:, j] = saved[perm]
        mse = float(np.mean((tree.predict(x_oob, check_input=False) - y_oob) ** 2))
        x_oob[:, j] = saved
        deltas[j] = mse - base_mse
    return deltas


def permutation_importance(
    model: ForestModel,
    design: np.ndarray,
    response: np.ndarray,
    rng: np.random.Generator | None = None,
    n_jobs: int = 1,
) -> np.ndarray:
    """Mean out-of-bag error increase per permuted column, floored at 0.

    Each tree contributes (OOB MSE with column j shuffled) - (baseline
    OOB MSE); columns a tree never splits on contribute exactly 0 for
    that tree. The shuffle uses one fresh permutation per tree.
    """
    x = as_float_matrix(design, "design")
    y = as_float_matrix(response, "response")
    if x.shape[1] != model.n_features:
        raise ValueError(
            f"design has {x.shape[1]} columns but model was fitted on {model.n_features}"
        )
    if rng is None:
        rng = np.random.default_rng()
    perm_seeds = np.random.SeedSequence(int(rng.integers(_MAX_SEED))).spawn(model.n_trees)
    per_tree = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_tree_importance)(tree, oob, x, y, ss, model.n_features)
        for tree, oob, ss in zip(model.trees, model.oob_indices, perm_seeds)
    )
    contributions = [d for d in per_tree if d is not None]
    if not contributions:
        raise InsufficientRowsError("no tree has out-of-bag rows to score")
    return np.maximum(np.mean(contributions, axis=0), 0.0)

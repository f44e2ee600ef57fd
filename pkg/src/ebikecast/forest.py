"""Bagged regression trees with impurity-decrease feature importances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ForestError
from .ingest import FactorTable

__all__ = [
    "FactorTable",
    "TreeNode",
    "ForestModel",
    "split_data",
    "fit_tree",
    "grow_tree",
    "fit_forest",
    "predict",
    "evaluate",
]


@dataclass(eq=False)
class TreeNode:
    """Split node when ``feature_index`` is set, otherwise a leaf."""

    n_samples: int
    prediction: float
    impurity: float
    feature_index: int | None = None
    threshold: float = math.nan
    impurity_decrease: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None

    def predict_one(self, x: np.ndarray) -> float:
        node = self
        while node.feature_index is not None:
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        return node.prediction

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.array([self.predict_one(row) for row in x])

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if node.feature_index is not None:
                stack.extend((node.right, node.left))

    def n_leaves(self) -> int:
        return sum(n.is_leaf for n in self.iter_nodes())


@dataclass(eq=False)
class ForestModel:
    trees: list[TreeNode]
    importances: np.ndarray
    seed: int
    feature_names: tuple[str, ...]
    degenerate: bool = False
    n_train: int = 0
    target_range: tuple[float, float] = field(default=(math.nan, math.nan))

    def ranking(self) -> list[tuple[str, float]]:
        """(name, importance) sorted by importance, descending; ties keep column order."""
        order = sorted(range(len(self.importances)), key=lambda i: (-self.importances[i], i))
        return [(self.feature_names[i], float(self.importances[i])) for i in order]


def split_data(table: FactorTable, test_fraction: float, seed: int) -> tuple[FactorTable, FactorTable]:
    """Seeded random train/test partition.

    The test side gets ``ceil(test_fraction * n)`` rows, clamped so neither
    side is empty.
    """
    n = len(table)
    if not 0.0 < test_fraction < 1.0:
        raise ForestError(f"test_fraction must be in (0, 1), got {test_fraction!r}")
    if n < 3:
        raise ForestError(f"need at least 3 rows to split, got {n}")
    n_test = min(max(math.ceil(test_fraction * n - 1e-9), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = n - n_test
    return table.take(perm[:n_train]), table.take(perm[n_train:])


_TIE_RTOL = 1e-10


def _best_split(x: np.ndarray, y: np.ndarray, rng: np.random.Generator | None) -> tuple[int, float, float] | None:
    """Return (feature, threshold, weighted child SSE / n) of the best split, or None.

    Within a feature the lowest threshold wins a tie. Across features the
    lowest index wins when ``rng`` is None; otherwise one of the tied
    features is drawn uniformly from ``rng``.
    """
    m = len(y)
    # child SSE differing by round-off only counts as a tie, so the choice
    # never depends on the scale of the target
    tol = _TIE_RTOL * float(y @ y)
    candidates = []
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xs, ys = x[order, f], y[order]
        valid = xs[:-1] < xs[1:]
        if not np.any(valid):
            continue
        n_left = np.arange(1, m)
        s1 = np.cumsum(ys)[:-1]
        s2 = np.cumsum(ys * ys)[:-1]
        t1, t2 = s1[-1] + ys[-1], s2[-1] + ys[-1] ** 2
        sse_left = s2 - s1 * s1 / n_left
        sse_right = (t2 - s2) - (t1 - s1) ** 2 / (m - n_left)
        child = np.maximum(sse_left, 0.0) + np.maximum(sse_right, 0.0)
        child = np.where(valid, child, math.inf)
        i = int(np.argmax(child <= child.min() + tol))
        candidates.append((child[i], f, 0.5 * (xs[i] + xs[i + 1])))
    if not candidates:
        return None
    lowest = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] <= lowest + tol]
    pick = tied[0] if rng is None or len(tied) == 1 else tied[int(rng.integers(len(tied)))]
    return pick[1], pick[2], pick[0] / m


def _grow(x: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None) -> TreeNode:
    m = len(y)
    mean = float(np.mean(y))
    centred = y - mean
    impurity = float(centred @ centred) / m
    node = TreeNode(n_samples=m, prediction=mean, impurity=impurity)
    if m < 2 or impurity == 0.0:
        return node
    split = _best_split(x, centred, rng)
    if split is None:
        return node
    f, thr, child_impurity = split
    mask = x[:, f] <= thr
    node.feature_index = f
    node.threshold = float(thr)
    node.impurity_decrease = max(impurity - child_impurity, 0.0)
    node.left = _grow(x[mask], y[mask], rng)
    node.right = _grow(x[~mask], y[~mask], rng)
    return node


def grow_tree(features: np.ndarray, target: np.ndarray, rng: np.random.Generator | None = None) -> TreeNode:
    """Grow a full-depth variance-reduction tree on exactly the given rows.

    Every feature is tried at every node. Equal-gain splits go to the lowest
    threshold; across features to the lowest index, or to a uniform draw
    from ``rng`` when one is given.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.ndim != 2 or len(x) != len(y) or len(y) == 0:
        raise ForestError("features must be (n, k) with n == len(target) > 0")
    return _grow(x, y, rng)


def fit_tree(train: FactorTable, rng: np.random.Generator, bootstrap: bool = True) -> TreeNode:
    """Grow one tree on a with-replacement resample of ``train``.

    ``rng`` draws the resample and then breaks equal-gain ties between
    features, so column order carries no weight.
    """
    n = len(train)
    if n < 1:
        raise ForestError("cannot fit a tree on an empty table")
    if bootstrap:
        idx = rng.integers(0, n, size=n)
        return _grow(train.features[idx], train.target[idx], rng)
    return _grow(np.asarray(train.features), np.asarray(train.target), rng)


def _tree_importance(tree: TreeNode, n_features: int) -> np.ndarray:
    imp = np.zeros(n_features)
    total = tree.n_samples
    for node in tree.iter_nodes():
        if node.feature_index is not None:
            imp[node.feature_index] += node.n_samples / total * node.impurity_decrease
    return imp


def fit_forest(train: FactorTable, n_trees: int = 1000, seed: int = 42) -> ForestModel:
    """Fit ``n_trees`` bootstrap trees; tree ``i`` draws from a generator keyed on (seed, i)."""
    if n_trees < 1:
        raise ForestError("n_trees must be >= 1")
    if len(train) < 2:
        raise ForestError("need at least 2 training rows")
    k = train.features.shape[1]
    trees = []
    raw = np.zeros(k)
    for i in range(n_trees):
        tree = fit_tree(train, np.random.default_rng([seed, i]))
        raw += _tree_importance(tree, k)
        trees.append(tree)
    total = raw.sum()
    degenerate = not total > 0
    importances = np.zeros(k) if degenerate else raw / total
    return ForestModel(
        trees=trees,
        importances=importances,
        seed=seed,
        feature_names=tuple(train.feature_names),
        degenerate=degenerate,
        n_train=len(train),
        target_range=(float(np.min(train.target)), float(np.max(train.target))),
    )


def predict(model: ForestModel, features: np.ndarray | FactorTable) -> np.ndarray:
    x = features.features if isinstance(features, FactorTable) else np.atleast_2d(np.asarray(features, dtype=float))
    return np.mean([tree.predict(x) for tree in model.trees], axis=0)


def evaluate(model: ForestModel, test: FactorTable) -> tuple[float, float, float]:
    """(MAE, MAPE in percent, accuracy = 100 - MAPE) on ``test``."""
    if len(test) == 0:
        raise ForestError("test set is empty")
    y = np.asarray(test.target, dtype=float)
    if np.any(y == 0):
        raise ForestError("MAPE undefined: zero target in test set")
    errors = np.abs(predict(model, test) - y)
    mae = float(np.mean(errors))
    mape = float(np.mean(100.0 * errors / np.abs(y)))
    return mae, mape, 100.0 - mape


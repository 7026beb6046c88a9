"""Weighted axis-aligned decision trees.

Trees are grown greedily on weighted rows. Regression trees minimize the
weighted sum of squared errors, binary trees the weighted Gini impurity. A
row goes left when its feature value is `<= threshold`, thresholds sit at the
midpoint between consecutive distinct values.

A fitted tree is stored as parallel node arrays, leaves have `feature == -1`:

    feature[i], threshold[i], left[i], right[i], leaf_value[i]
"""

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from mindtrace.logger import logger

REGRESSION = "regression"
BINARY = "binary"
MODES = (REGRESSION, BINARY)

LEAF = -1
MIN_GAIN = 1e-12


class EnsembleException(Exception):
    """Raised for invalid training data, configuration or model files."""


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.feature, self.threshold, self.left, self.right, self.leaf_value):
            arr.setflags(write=False)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf values for every row of `X`."""
        nodes = np.zeros(X.shape[0], dtype=int)
        active = self.feature[nodes] != LEAF
        while np.any(active):
            idx = np.nonzero(active)[0]
            current = nodes[idx]
            go_left = X[idx, self.feature[current]] <= self.threshold[current]
            nodes[idx] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return self.leaf_value[nodes]

    def to_dict(self) -> dict[str, list]:
        return {
            "feature": [int(v) for v in self.feature],
            "threshold": [float(v) for v in self.threshold],
            "left": [int(v) for v in self.left],
            "right": [int(v) for v in self.right],
            "leaf_value": [float(v) for v in self.leaf_value],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DecisionTree":
        try:
            tree = cls(
                np.array(data["feature"], dtype=int),
                np.array(data["threshold"], dtype=float),
                np.array(data["left"], dtype=int),
                np.array(data["right"], dtype=int),
                np.array(data["leaf_value"], dtype=float),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise EnsembleException(f"Malformed tree data: {e}") from e

        sizes = {len(tree.feature), len(tree.threshold), len(tree.left), len(tree.right), len(tree.leaf_value)}
        if len(sizes) != 1 or tree.node_count == 0:
            raise EnsembleException("Tree node arrays must be non-empty and of equal length")
        inner = tree.feature != LEAF
        children = np.concatenate([tree.left[inner], tree.right[inner]])
        if np.any(children <= 0) or np.any(children >= tree.node_count):
            raise EnsembleException("Tree child indices out of range")
        return tree


def _impurity(mode: str, w: np.ndarray, wy: np.ndarray, wyy: np.ndarray) -> np.ndarray:
    """Weighted impurity from (cumulative) weight sums, SSE or Gini times weight."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if mode == REGRESSION:
            value = wyy - np.where(w > 0, wy * wy / w, 0.0)
        else:
            value = np.where(w > 0, 2.0 * wy * (w - wy) / w, 0.0)
    return np.maximum(value, 0.0)


class _TreeBuilder:
    def __init__(
        self,
        mode: str,
        max_depth: int,
        min_samples_leaf: int,
        max_features: int | None,
        rng: np.random.Generator,
    ) -> None:
        self.mode = mode
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _candidate_features(self, n_features: int) -> np.ndarray:
        if self.max_features is None or self.max_features >= n_features:
            return np.arange(n_features)
        return np.sort(self.rng.choice(n_features, self.max_features, replace=False))

    def _best_split(
        self, X: np.ndarray, y: np.ndarray, w: np.ndarray, c: np.ndarray
    ) -> tuple[int, float, float] | None:
        total_w = w.sum()
        total_c = c.sum()
        parent = float(_impurity(self.mode, total_w, (w * y).sum(), (w * y * y).sum()))

        best: tuple[int, float, float] | None = None
        best_score = parent - MIN_GAIN
        min_leaf = self.min_samples_leaf

        for f in self._candidate_features(X.shape[1]):
            order = np.argsort(X[:, f], kind="stable")
            xs, ys, ws = X[order, f], y[order], w[order]
            cc = np.cumsum(c[order])[:-1]

            cw, cwy, cwyy = np.cumsum(ws), np.cumsum(ws * ys), np.cumsum(ws * ys * ys)
            # split after position i, left holds rows 0..i
            valid = (xs[:-1] < xs[1:]) & (cc >= min_leaf) & (total_c - cc >= min_leaf)
            if not np.any(valid):
                continue

            left = _impurity(self.mode, cw[:-1], cwy[:-1], cwyy[:-1])
            right = _impurity(self.mode, total_w - cw[:-1], cwy[-1] - cwy[:-1], cwyy[-1] - cwyy[:-1])
            score = np.where(valid, left + right, np.inf)

            i = int(np.argmin(score))
            if score[i] < best_score:
                best_score = float(score[i])
                best = (int(f), float((xs[i] + xs[i + 1]) / 2.0), best_score)

        return best

    def build(self, X: np.ndarray, y: np.ndarray, w: np.ndarray, c: np.ndarray, depth: int = 0) -> int:
        node = self._new_node()
        self.value[node] = float(np.dot(w, y) / w.sum())

        if depth >= self.max_depth or c.sum() < 2 * self.min_samples_leaf:
            return node

        split = self._best_split(X, y, w, c)
        if split is None:
            return node

        feature, threshold, _ = split
        mask = X[:, feature] <= threshold
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = self.build(X[mask], y[mask], w[mask], c[mask], depth + 1)
        self.right[node] = self.build(X[~mask], y[~mask], w[~mask], c[~mask], depth + 1)
        return node

    def tree(self) -> DecisionTree:
        return DecisionTree(
            np.array(self.feature, dtype=int),
            np.array(self.threshold, dtype=float),
            np.array(self.left, dtype=int),
            np.array(self.right, dtype=int),
            np.array(self.value, dtype=float),
        )


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    mode: str,
    max_depth: int,
    min_samples_leaf: int,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    counts: np.ndarray | None = None,
) -> DecisionTree:
    """Grow a single weighted tree.

    Args:
        X: Feature matrix, one row per distinct training row.
        y: Targets, 0/1 for binary mode.
        w: Strictly positive row weights.
        mode: `"regression"` or `"binary"`.
        max_depth: Maximum depth, 0 gives a single leaf.
        min_samples_leaf: Minimum number of training rows per leaf, counted with `counts`.
        max_features: Features tried per split, all if `None`.
        rng: Generator for feature subsampling.
        counts: How many training rows each row of `X` stands for, 1 each if `None`.

    Returns:
        The fitted `DecisionTree`.
    """
    if mode not in MODES:
        raise EnsembleException(f"Unknown tree mode '{mode}'")
    if X.shape[0] == 0:
        raise EnsembleException("Can't fit a tree on empty data")
    if np.any(w <= 0):
        raise EnsembleException("Row weights must be strictly positive")
    counts = np.ones(X.shape[0]) if counts is None else np.asarray(counts, dtype=float)
    if counts.shape != (X.shape[0],) or np.any(counts < 1):
        raise EnsembleException("Row counts must be at least 1, one per row")

    builder = _TreeBuilder(mode, max_depth, min_samples_leaf, max_features, rng or np.random.default_rng(0))
    builder.build(np.asarray(X, dtype=float), np.asarray(y, dtype=float), np.asarray(w, dtype=float), counts)
    tree = builder.tree()
    logger.debug(f"Fitted {mode} tree with {tree.node_count} nodes")
    return tree

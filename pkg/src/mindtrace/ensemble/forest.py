"""Bagged tree ensembles for presence regression and change classification.

Training rows are first collapsed into canonically sorted distinct
`(features, target)` rows with their multiplicities. Each tree then sees every
distinct row with a random Bayesian-bootstrap weight, a Gamma draw shaped by
the row's multiplicity (divided by the gcd of all multiplicities), taken from
a generator seeded by `(seed, tree_index)`. Leaf sizes count the original
training rows. Training is therefore independent of row order, reproducible
for a fixed seed regardless of how many worker threads build the trees, and
unchanged by duplicating the whole data set as long as `min_samples_leaf`
doesn't bind.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from mindtrace.ensemble.tree import BINARY, MODES, REGRESSION, DecisionTree, EnsembleException, fit_tree
from mindtrace.logger import logger

MODEL_FORMAT = "mindtrace-forest"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainingConfig:
    """Tree ensemble hyperparameters.

    Attributes:
        n_trees: Number of trees.
        max_depth: Maximum tree depth.
        min_samples_leaf: Minimum training rows per leaf.
        seed: Seed of the per-tree random generators.
        pos_weight_cap: Upper bound of the positive-class weight.
        threshold: Probability at or above which a binary prediction is positive.
        max_features: Features tried per split, all if `None`.
        n_jobs: Worker threads used to build trees.
        class_weighting: Whether binary training up-weights the positive class.
    """

    n_trees: int = 100
    max_depth: int = 8
    min_samples_leaf: int = 2
    seed: int = 0
    pos_weight_cap: float = 20.0
    threshold: float = 0.5
    max_features: int | None = None
    n_jobs: int = 1
    class_weighting: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise EnsembleException(f"n_trees must be at least 1, got {self.n_trees}")
        if self.max_depth < 0:
            raise EnsembleException(f"max_depth must not be negative, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise EnsembleException(f"min_samples_leaf must be at least 1, got {self.min_samples_leaf}")
        if self.seed < 0:
            raise EnsembleException(f"seed must be unsigned, got {self.seed}")
        if self.pos_weight_cap <= 0:
            raise EnsembleException(f"pos_weight_cap must be positive, got {self.pos_weight_cap}")
        if not 0.0 <= self.threshold <= 1.0:
            raise EnsembleException(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.max_features is not None and self.max_features < 1:
            raise EnsembleException(f"max_features must be at least 1, got {self.max_features}")
        if self.n_jobs < 1:
            raise EnsembleException(f"n_jobs must be at least 1, got {self.n_jobs}")


def pos_weight(n_neg: int, n_pos: int, cap: float = 20.0) -> float:
    """Positive-class weight `min(n_neg / n_pos, cap)`.

    Raises:
        EnsembleException: If there are no positive samples or `cap` isn't positive.
    """
    if n_pos < 1:
        raise EnsembleException("Can't weight the positive class without positive samples")
    if cap <= 0:
        raise EnsembleException(f"Weight cap must be positive, got {cap}")
    return min(n_neg / n_pos, cap)


@dataclass(frozen=True)
class ForestModel:
    """A trained tree ensemble.

    Attributes:
        trees: The fitted trees.
        mode: `"regression"` or `"binary"`.
        n_features: Expected input dimension.
        threshold: Positive-class probability threshold (binary mode).
    """

    trees: tuple[DecisionTree, ...]
    mode: str
    n_features: int
    threshold: float = 0.5

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise EnsembleException(f"Model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        """Mean tree output per row: the regression value or the positive probability."""
        X = self._check(X)
        return np.mean([tree.predict(X) for tree in self.trees], axis=0)

    def predict_label(self, X: np.ndarray) -> np.ndarray:
        if self.mode != BINARY:
            raise EnsembleException("Labels are only defined for binary models")
        return self.predict_raw(X) >= self.threshold

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "mode": self.mode,
            "n_features": self.n_features,
            "threshold": self.threshold,
            "trees": [tree.to_dict() for tree in self.trees],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ForestModel":
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise EnsembleException(
                f"Unsupported model format {data.get('format')} v{data.get('version')}"
            )
        mode = data.get("mode")
        if mode not in MODES:
            raise EnsembleException(f"Unknown model mode '{mode}'")
        trees = tuple(DecisionTree.from_dict(t) for t in data.get("trees") or [])
        if not trees:
            raise EnsembleException("Model holds no trees")
        return cls(trees, mode, int(data["n_features"]), float(data.get("threshold", 0.5)))

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise EnsembleException(f"Malformed model JSON: {e}") from e
        if not isinstance(data, dict):
            raise EnsembleException("Model JSON must be an object")
        return cls.from_dict(data)


def save_model(model: ForestModel, path: str | Path) -> None:
    Path(path).write_text(model.to_json(), encoding="utf-8")
    logger.info(f"Wrote {model.mode} model with {len(model.trees)} trees to {path}")


def load_model(path: str | Path) -> ForestModel:
    return ForestModel.from_json(Path(path).read_text(encoding="utf-8"))


def canonical_rows(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse `(X, y)` into sorted distinct rows and their multiplicities."""
    combined = np.column_stack([X, y])
    unique, counts = np.unique(combined, axis=0, return_counts=True)
    return unique[:, :-1], unique[:, -1], counts.astype(float)


def _fit_member(
    tree_idx: int,
    X: np.ndarray,
    y: np.ndarray,
    base: np.ndarray,
    counts: np.ndarray,
    class_weights: np.ndarray,
    mode: str,
    config: TrainingConfig,
) -> DecisionTree:
    rng = np.random.default_rng([config.seed, tree_idx])
    weights = rng.gamma(shape=base, scale=1.0) * class_weights
    # gamma draws can underflow to 0 for tiny shapes, keep every row in play
    weights = np.maximum(weights, np.finfo(float).tiny)
    return fit_tree(
        X, y, weights, mode, config.max_depth, config.min_samples_leaf, config.max_features, rng, counts
    )


def train_forest(X: np.ndarray, y: np.ndarray, mode: str, config: TrainingConfig | None = None) -> ForestModel:
    """Train a bagged ensemble on a feature matrix.

    Args:
        X: Feature matrix, one row per sample.
        y: Targets, real values for regression or booleans for binary mode.
        mode: `"regression"` or `"binary"`.
        config: Hyperparameters, defaults if `None`.

    Returns:
        The trained `ForestModel`.

    Raises:
        EnsembleException: On empty or inconsistent data, or single-class
            binary data.
    """
    config = config or TrainingConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)

    if X.shape[0] == 0 or y.shape[0] == 0:
        raise EnsembleException("Can't train on empty data")
    if X.shape[0] != y.shape[0]:
        raise EnsembleException(f"Got {X.shape[0]} feature rows for {y.shape[0]} targets")

    Xu, yu, counts = canonical_rows(X, y)
    base = counts / np.gcd.reduce(counts.astype(np.int64))

    class_weights = np.ones_like(yu)
    if mode == BINARY:
        n_pos = int(np.count_nonzero(y))
        n_neg = y.shape[0] - n_pos
        if n_pos == 0 or n_neg == 0:
            raise EnsembleException("Binary training needs both positive and negative samples")
        if config.class_weighting:
            weight = pos_weight(n_neg, n_pos, config.pos_weight_cap)
            class_weights = np.where(yu > 0, weight, 1.0)
            logger.debug(f"Positive class weight {weight:.4f} ({n_neg} negative, {n_pos} positive)")

    fit = partial(
        _fit_member, X=Xu, y=yu, base=base, counts=counts, class_weights=class_weights, mode=mode, config=config
    )
    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as executor:
            trees = tuple(executor.map(fit, range(config.n_trees)))
    else:
        trees = tuple(fit(idx) for idx in range(config.n_trees))

    logger.info(f"Trained {mode} forest: {config.n_trees} trees on {X.shape[0]} rows ({Xu.shape[0]} distinct)")
    return ForestModel(trees, mode, X.shape[1], config.threshold)

"""Correlation analysis and K-fold splits."""

import csv
import io
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np
from scipy import stats
from sklearn.model_selection import KFold

from mindtrace.evaluation.report import EvaluationException
from mindtrace.util import read_data_text

PEARSON = "pearson"
SPEARMAN = "spearman"

TASK1_RANKINGS = "fixtures/task1_rankings.csv"


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p: float
    n: int
    method: str = PEARSON

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def correlation(xs: Sequence[float], ys: Sequence[float], method: str = PEARSON) -> CorrelationResult:
    """Correlation coefficient with its two-sided p-value.

    Pearson's p-value comes from the t-distribution with `n - 2` degrees of freedom.

    Raises:
        EvaluationException: On a length mismatch, fewer than 3 points or a constant input.
    """
    if len(xs) != len(ys):
        raise EvaluationException(f"Got {len(xs)} x values and {len(ys)} y values")
    if len(xs) < 3:
        raise EvaluationException(f"Need at least 3 points, got {len(xs)}")
    x, y = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise EvaluationException("Correlation of a constant input is undefined")

    if method == PEARSON:
        result = stats.pearsonr(x, y)
    elif method == SPEARMAN:
        result = stats.spearmanr(x, y)
    else:
        raise EvaluationException(f"Unknown correlation method '{method}'")
    return CorrelationResult(float(result.statistic), float(result.pvalue), len(x), method)


def kfold_split(ids: Sequence[str], k: int, seed: int = 0) -> list[list[str]]:
    """Shuffle `ids` with `seed` and partition them into `k` folds.

    Fold sizes differ by at most one, larger folds come first.

    Raises:
        EvaluationException: If `k` is below 2 or above the number of ids.
    """
    if not 2 <= k <= len(ids):
        raise EvaluationException(f"k must be between 2 and {len(ids)}, got {k}")
    if len(set(ids)) != len(ids):
        raise EvaluationException("Duplicate ids can't be split into folds")

    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    return [[ids[i] for i in test] for _, test in splitter.split(np.zeros(len(ids)))]


@dataclass(frozen=True)
class Task1Row:
    team: str
    classification_rank: int
    presence_rank: int
    macro_f1: float
    rmse: float


def load_task1_rankings(text: str | None = None) -> list[Task1Row]:
    """Rows of the bundled combined element/presence ranking table, or of `text` in the same CSV layout."""
    return [
        Task1Row(
            team=row["team"],
            classification_rank=int(row["task11_rank"]),
            presence_rank=int(row["task12_rank"]),
            macro_f1=float(row["macro_f1"]),
            rmse=float(row["rmse"]),
        )
        for row in csv.DictReader(io.StringIO(text if text is not None else read_data_text(TASK1_RANKINGS)))
    ]

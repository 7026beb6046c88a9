"""Presence rating scores: MAE, RMSE, quadratic weighted kappa and Spearman."""

import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats
from sklearn.metrics import cohen_kappa_score, mean_absolute_error, mean_squared_error

from mindtrace.evaluation.report import EvaluationException, PostKey
from mindtrace.model.schema import ADAPTIVE, MALADAPTIVE
from mindtrace.model.timeline import PRESENCE_MAX, PRESENCE_MIN, PostAnnotation, Timeline

CATEGORIES = list(range(PRESENCE_MIN, PRESENCE_MAX + 1))


@dataclass(frozen=True)
class PresenceMetrics:
    mae: float
    rmse: float
    qwk: float
    spearman: float
    n: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def quadratic_weighted_kappa(pred: Sequence[int], gold: Sequence[int]) -> float:
    """Kappa over the five presence categories with squared-distance weights.

    Identical sequences score 1.0, also when kappa is otherwise undefined.
    """
    if list(pred) == list(gold):
        return 1.0
    kappa = cohen_kappa_score(gold, pred, labels=CATEGORIES, weights="quadratic")
    return 0.0 if math.isnan(kappa) else float(kappa)


def spearman_rho(pred: Sequence[int], gold: Sequence[int]) -> float:
    """Spearman correlation with average ranks for ties.

    1.0 for identical sequences, 0.0 wherever the coefficient is undefined.
    """
    if list(pred) == list(gold):
        return 1.0
    if len(pred) < 2 or len(set(pred)) < 2 or len(set(gold)) < 2:
        return 0.0
    rho = stats.spearmanr(pred, gold).statistic
    return 0.0 if math.isnan(rho) else float(rho)


def presence_metrics(pred: Sequence[int], gold: Sequence[int]) -> PresenceMetrics:
    """All presence metrics for one pair of rating sequences.

    Raises:
        EvaluationException: On a length mismatch, empty input or ratings outside 1-5.
    """
    if len(pred) != len(gold):
        raise EvaluationException(f"Got {len(pred)} predictions for {len(gold)} gold ratings")
    if not gold:
        raise EvaluationException("No ratings to score")
    for value in (*pred, *gold):
        if value not in CATEGORIES:
            raise EvaluationException(f"Presence rating {value} outside {PRESENCE_MIN}-{PRESENCE_MAX}")

    p, g = np.asarray(pred, dtype=float), np.asarray(gold, dtype=float)
    return PresenceMetrics(
        mae=float(mean_absolute_error(g, p)),
        rmse=float(np.sqrt(mean_squared_error(g, p))),
        qwk=quadratic_weighted_kappa(pred, gold),
        spearman=spearman_rho(pred, gold),
        n=len(gold),
    )


@dataclass(frozen=True)
class Task1PresenceReport:
    adaptive: PresenceMetrics
    maladaptive: PresenceMetrics
    combined: PresenceMetrics
    ranking_score: float

    def to_dict(self) -> dict[str, Any]:
        return {
            ADAPTIVE: self.adaptive.to_dict(),
            MALADAPTIVE: self.maladaptive.to_dict(),
            "combined": self.combined.to_dict(),
            "ranking_score": self.ranking_score,
        }


def task1_presence_report(
    predictions: Mapping[PostKey, PostAnnotation],
    timelines: Sequence[Timeline],
) -> Task1PresenceReport:
    """Score predicted presence ratings on every post with a gold rating.

    The ranking score is the mean of the adaptive and maladaptive RMSE,
    lower is better. The combined metrics pool both valences.

    Raises:
        EvaluationException: If a gold-rated post lacks a predicted rating.
    """
    pairs: dict[str, tuple[list[int], list[int]]] = {ADAPTIVE: ([], []), MALADAPTIVE: ([], [])}
    missing: list[str] = []

    for timeline in timelines:
        for post in timeline.posts:
            gold = post.gold_annotation
            if gold is None:
                continue
            predicted = predictions.get((timeline.timeline_id, post.post_id))
            for valence, name in ((ADAPTIVE, "adaptive_presence"), (MALADAPTIVE, "maladaptive_presence")):
                gold_value = getattr(gold, name)
                if gold_value is None:
                    continue
                pred_value = getattr(predicted, name) if predicted is not None else None
                if pred_value is None:
                    missing.append(f"{timeline.timeline_id}/{post.post_id} ({valence})")
                    continue
                pairs[valence][0].append(pred_value)
                pairs[valence][1].append(gold_value)

    if missing:
        raise EvaluationException(f"Missing presence predictions: {', '.join(missing[:10])}")

    adaptive = presence_metrics(*pairs[ADAPTIVE])
    maladaptive = presence_metrics(*pairs[MALADAPTIVE])
    combined = presence_metrics(
        pairs[ADAPTIVE][0] + pairs[MALADAPTIVE][0],
        pairs[ADAPTIVE][1] + pairs[MALADAPTIVE][1],
    )
    return Task1PresenceReport(adaptive, maladaptive, combined, (adaptive.rmse + maladaptive.rmse) / 2)

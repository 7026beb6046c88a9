"""Presence rating regression on one-hot label vectors.

Adaptive and maladaptive presence are modelled independently: each gets its
own regression forest mapping a post's one-hot label vector to a 1-5 rating.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from mindtrace.ensemble.forest import ForestModel, TrainingConfig, train_forest
from mindtrace.ensemble.tree import REGRESSION, EnsembleException
from mindtrace.logger import logger
from mindtrace.model.schema import ADAPTIVE, MALADAPTIVE, Label, LabelSchema, SchemaException, default_schema
from mindtrace.model.timeline import PRESENCE_MAX, PRESENCE_MIN, PostAnnotation, Timeline
from mindtrace.tagger.signatures import NgramSignatureSet, TaggerConfig, tag_post
from mindtrace.util import clamp, round_half_away


def one_hot_encode(labels: Iterable[Label], schema: LabelSchema | None = None) -> np.ndarray:
    """Binary indicator vector over the schema's label space.

    Raises:
        EnsembleException: If a label isn't part of the schema.
    """
    schema = schema or default_schema()
    vector = np.zeros(schema.dimension, dtype=float)
    for label in labels:
        try:
            vector[schema.index_of(label)] = 1.0
        except SchemaException as e:
            raise EnsembleException(str(e)) from e
    return vector


def train_presence_regressor(
    rows: Sequence[tuple[np.ndarray, int]],
    config: TrainingConfig | None = None,
) -> ForestModel:
    """Train a presence regressor on `(one-hot vector, rating)` pairs.

    Raises:
        EnsembleException: If there are fewer than 2 rows or a rating lies
            outside 1-5.
    """
    if len(rows) < 2:
        raise EnsembleException(f"Presence regression needs at least 2 rows, got {len(rows)}")

    targets = np.array([target for _, target in rows], dtype=float)
    if np.any(targets < PRESENCE_MIN) or np.any(targets > PRESENCE_MAX):
        raise EnsembleException(f"Presence targets must lie in [{PRESENCE_MIN},{PRESENCE_MAX}]")

    X = np.vstack([vector for vector, _ in rows])
    return train_forest(X, targets, REGRESSION, config)


def predict_presence(model: ForestModel, x: np.ndarray) -> int:
    """Predict a presence rating: the forest mean rounded half away from zero, clamped to 1-5."""
    if model.mode != REGRESSION:
        raise EnsembleException("Presence prediction needs a regression model")
    raw = float(model.predict_raw(x)[0])
    return int(clamp(round_half_away(raw), PRESENCE_MIN, PRESENCE_MAX))


def presence_rows(
    timelines: Sequence[Timeline],
    valence: str,
    schema: LabelSchema | None = None,
) -> list[tuple[np.ndarray, int]]:
    """Training rows for one valence from every gold-annotated post rated for it."""
    schema = schema or default_schema()
    name = f"{valence}_presence"
    rows = []
    for timeline in timelines:
        for post in timeline.posts:
            annotation = post.gold_annotation
            if annotation is None or getattr(annotation, name) is None:
                continue
            rows.append((one_hot_encode(annotation.labels, schema), getattr(annotation, name)))
    return rows


@dataclass(frozen=True)
class PresenceModels:
    """The adaptive and maladaptive presence regressors."""

    adaptive: ForestModel
    maladaptive: ForestModel

    def to_dict(self) -> dict[str, Any]:
        return {ADAPTIVE: self.adaptive.to_dict(), MALADAPTIVE: self.maladaptive.to_dict()}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")), encoding="utf-8")
        logger.info(f"Wrote presence models to {path}")

    @classmethod
    def load(cls, path: str | Path) -> "PresenceModels":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(ForestModel.from_dict(data[ADAPTIVE]), ForestModel.from_dict(data[MALADAPTIVE]))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise EnsembleException(f"Malformed presence model file {path}: {e}") from e


def train_presence_models(
    timelines: Sequence[Timeline],
    config: TrainingConfig | None = None,
    schema: LabelSchema | None = None,
) -> PresenceModels:
    """Train both presence regressors from gold-annotated timelines."""
    schema = schema or default_schema()
    models = {}
    for valence in (ADAPTIVE, MALADAPTIVE):
        rows = presence_rows(timelines, valence, schema)
        logger.info(f"Training {valence} presence regressor on {len(rows)} posts")
        models[valence] = train_presence_regressor(rows, config)
    return PresenceModels(models[ADAPTIVE], models[MALADAPTIVE])


def predict_annotations(
    timeline: Timeline,
    signatures: NgramSignatureSet,
    models: PresenceModels,
    tagger_config: TaggerConfig | None = None,
    schema: LabelSchema | None = None,
) -> list[PostAnnotation]:
    """Tag every post and rate both presences from the predicted labels.

    Returns:
        One `PostAnnotation` per post, in timeline order.
    """
    schema = schema or default_schema()
    annotations = []
    for post in timeline.posts:
        labels = tag_post(post, signatures, tagger_config)
        vector = one_hot_encode(labels, schema)
        annotations.append(
            PostAnnotation(
                labels=labels,
                adaptive_presence=predict_presence(models.adaptive, vector),
                maladaptive_presence=predict_presence(models.maladaptive, vector),
            )
        )
    return annotations

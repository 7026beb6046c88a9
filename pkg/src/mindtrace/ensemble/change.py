"""Switch and Escalation detection with weighted tree classifiers.

Each post is represented by its temporal-difference feature vector (see
`mindtrace.features.temporal`). Two independent binary forests predict
Switch and Escalation. The first post of a timeline is never a change.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from mindtrace.ensemble.forest import ForestModel, TrainingConfig, train_forest
from mindtrace.ensemble.tree import BINARY, EnsembleException
from mindtrace.features.tfidf import TfidfConfig, TfidfModel, fit_tfidf
from mindtrace.features.temporal import assemble_change_features, tfidf_representations
from mindtrace.features.text import Lexicon, tokenize
from mindtrace.logger import logger
from mindtrace.model.timeline import ChangePrediction, Timeline

TFIDF = "tfidf"
EMBEDDINGS = "embeddings"

Embeddings = Mapping[str, np.ndarray]


def train_change_classifier(
    rows: Sequence[tuple[np.ndarray, bool]],
    config: TrainingConfig | None = None,
) -> ForestModel:
    """Train one binary change classifier on `(feature vector, label)` pairs.

    Positive rows are up-weighted by `pos_weight()` unless the config turns
    class weighting off.

    Raises:
        EnsembleException: If the rows hold only one class.
    """
    if not rows:
        raise EnsembleException("Can't train a change classifier on empty data")
    X = np.vstack([vector for vector, _ in rows])
    y = np.array([bool(label) for _, label in rows], dtype=float)
    return train_forest(X, y, BINARY, config)


@dataclass(frozen=True)
class ChangeModel:
    """Everything needed to detect changes on new timelines.

    Attributes:
        switch: Switch classifier.
        escalation: Escalation classifier.
        representation: `"tfidf"` or `"embeddings"`.
        tfidf: Fitted TF-IDF model for the `"tfidf"` representation.
    """

    switch: ForestModel
    escalation: ForestModel
    representation: str = TFIDF
    tfidf: TfidfModel | None = None

    def __post_init__(self) -> None:
        if self.representation not in (TFIDF, EMBEDDINGS):
            raise EnsembleException(f"Unknown representation '{self.representation}'")
        if self.representation == TFIDF and self.tfidf is None:
            raise EnsembleException("TF-IDF change models need a fitted TF-IDF model")

    def to_dict(self) -> dict[str, Any]:
        return {
            "representation": self.representation,
            "tfidf": self.tfidf.to_dict() if self.tfidf else None,
            "switch": self.switch.to_dict(),
            "escalation": self.escalation.to_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")), encoding="utf-8")
        logger.info(f"Wrote change model to {path}")

    @classmethod
    def load(cls, path: str | Path) -> "ChangeModel":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            tfidf = TfidfModel.from_dict(data["tfidf"]) if data.get("tfidf") else None
            return cls(
                ForestModel.from_dict(data["switch"]),
                ForestModel.from_dict(data["escalation"]),
                data.get("representation", TFIDF),
                tfidf,
            )
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as e:
            raise EnsembleException(f"Malformed change model file {path}: {e}") from e


def _features(
    timeline: Timeline,
    tfidf: TfidfModel | None,
    embeddings: Embeddings | None,
    lexicon: Lexicon | None,
) -> np.ndarray:
    if embeddings is not None:
        return assemble_change_features(timeline, embeddings, lexicon)
    return assemble_change_features(timeline, tfidf_representations(timeline, tfidf), lexicon)


def train_change_models(
    timelines: Sequence[Timeline],
    config: TrainingConfig | None = None,
    tfidf_config: TfidfConfig | None = None,
    embeddings: Embeddings | None = None,
    lexicon: Lexicon | None = None,
) -> ChangeModel:
    """Train the Switch and Escalation classifiers on gold-labelled posts.

    Posts without a gold change label are left out. With `embeddings` given
    they are used as post representations, otherwise a TF-IDF model is fitted
    on all post texts first.
    """
    tfidf = None
    if embeddings is None:
        corpus = [tokenize(post.text) for timeline in timelines for post in timeline.posts]
        tfidf = fit_tfidf(corpus, tfidf_config)

    switch_rows, escalation_rows = [], []
    for timeline in timelines:
        features = _features(timeline, tfidf, embeddings, lexicon)
        for post, vector in zip(timeline.posts, features):
            if post.gold_change is None:
                continue
            switch_rows.append((vector, post.gold_change.switch))
            escalation_rows.append((vector, post.gold_change.escalation))

    logger.info(f"Training change classifiers on {len(switch_rows)} labelled posts")
    return ChangeModel(
        switch=train_change_classifier(switch_rows, config),
        escalation=train_change_classifier(escalation_rows, config),
        representation=EMBEDDINGS if embeddings is not None else TFIDF,
        tfidf=tfidf,
    )


def detect_changes_tree(
    timeline: Timeline,
    model: ChangeModel,
    embeddings: Embeddings | None = None,
    lexicon: Lexicon | None = None,
) -> list[ChangePrediction]:
    """Predict Switch/Escalation for every post of a timeline.

    Raises:
        EnsembleException: If the model needs embeddings and none are given.
    """
    if model.representation == EMBEDDINGS and embeddings is None:
        raise EnsembleException("This change model was trained on embeddings, pass an embeddings file")

    features = _features(timeline, model.tfidf, embeddings if model.representation == EMBEDDINGS else None, lexicon)
    switch = model.switch.predict_label(features)
    escalation = model.escalation.predict_label(features)

    predictions = []
    for post in timeline.posts:
        first = post.position == 0
        predictions.append(
            ChangePrediction(
                timeline.timeline_id,
                post.post_id,
                post.position,
                switch=False if first else bool(switch[post.position]),
                escalation=False if first else bool(escalation[post.position]),
            )
        )
    return predictions

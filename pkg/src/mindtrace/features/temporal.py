"""Temporal-difference features for change detection.

Each post vector is built as

    [ h_t - h_{t-1} | h_t * h_{t-1} | position | linguistic features ]

where `h` is the post representation (TF-IDF or external embeddings) and the
first post of a timeline uses a zero vector as `h_{t-1}`.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from mindtrace.features.text import FEATURE_NAMES, FeatureException, Lexicon, linguistic_features, tokenize
from mindtrace.features.tfidf import TfidfModel
from mindtrace.logger import logger
from mindtrace.model.timeline import Timeline


@dataclass(frozen=True)
class TemporalFeatures:
    diff: np.ndarray
    product: np.ndarray
    position: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.diff, self.product, [self.position]])


def temporal_features(
    curr: np.ndarray,
    prev: np.ndarray | None,
    position: int,
    timeline_len: int,
) -> TemporalFeatures:
    """Difference and product of a post representation with its predecessor.

    Args:
        curr: Representation of the current post.
        prev: Representation of the previous post, `None` for the first post.
        position: Position of the current post.
        timeline_len: Number of posts in the timeline.

    Returns:
        `TemporalFeatures` with `position` normalized to `[0, 1]`.

    Raises:
        FeatureException: On a dimension mismatch or `timeline_len < 1`.
    """
    if timeline_len < 1:
        raise FeatureException(f"timeline_len must be at least 1, got {timeline_len}")

    curr = np.asarray(curr, dtype=float)
    prev = np.zeros_like(curr) if prev is None else np.asarray(prev, dtype=float)
    if curr.shape != prev.shape:
        raise FeatureException(f"Representation shapes differ: {curr.shape} vs {prev.shape}")

    normalized = 0.0 if timeline_len == 1 else position / (timeline_len - 1)
    return TemporalFeatures(curr - prev, curr * prev, normalized)


def change_feature_names(dimension: int) -> list[str]:
    """Column names of `assemble_change_features()` output for a representation size."""
    return (
        [f"diff_{i}" for i in range(dimension)]
        + [f"product_{i}" for i in range(dimension)]
        + ["position"]
        + list(FEATURE_NAMES)
    )


def assemble_change_features(
    timeline: Timeline,
    representations: Sequence[np.ndarray] | Mapping[str, np.ndarray],
    lexicon: Lexicon | None = None,
) -> np.ndarray:
    """Build the change-detection feature matrix of a timeline.

    Args:
        timeline: The timeline.
        representations: One vector per post, either in post order or keyed by
            `post_id`.
        lexicon: Sentiment lexicon for the linguistic features.

    Returns:
        Array of shape `(len(timeline), 2 * dim + 1 + 14)`.

    Raises:
        FeatureException: If a representation is missing or the count or
            dimensions don't match.
    """
    if isinstance(representations, Mapping):
        missing = [p.post_id for p in timeline.posts if p.post_id not in representations]
        if missing:
            raise FeatureException(f"No representation for posts {missing} of {timeline.timeline_id}")
        vectors = [representations[p.post_id] for p in timeline.posts]
    else:
        vectors = list(representations)
        if len(vectors) != len(timeline.posts):
            raise FeatureException(
                f"Got {len(vectors)} representations for {len(timeline.posts)} posts of {timeline.timeline_id}"
            )

    rows = []
    prev = None
    for post, vector in zip(timeline.posts, vectors):
        temporal = temporal_features(vector, prev, post.position, len(timeline.posts))
        ling = linguistic_features(post.text, lexicon).as_vector()
        rows.append(np.concatenate([temporal.as_vector(), ling]))
        prev = vector

    return np.vstack(rows)


def tfidf_representations(timeline: Timeline, model: TfidfModel) -> list[np.ndarray]:
    return [model.transform(tokenize(post.text).tokens) for post in timeline.posts]


def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Read a JSON-lines embeddings file of `{"post_id": ..., "vector": [...]}` records.

    Raises:
        FeatureException: On malformed records, duplicate ids or mixed dimensions.
    """
    embeddings: dict[str, np.ndarray] = {}
    dimension = None

    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                post_id = record["post_id"]
                vector = np.array(record["vector"], dtype=float)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise FeatureException(f"{path}:{lineno}: malformed embedding record: {e}") from e

            if vector.ndim != 1:
                raise FeatureException(f"{path}:{lineno}: vector must be a flat list")
            if dimension is None:
                dimension = vector.shape[0]
            elif vector.shape[0] != dimension:
                raise FeatureException(
                    f"{path}:{lineno}: vector dimension {vector.shape[0]}, expected {dimension}"
                )
            if post_id in embeddings:
                raise FeatureException(f"{path}:{lineno}: duplicate post_id '{post_id}'")

            embeddings[post_id] = vector

    logger.info(f"Loaded {len(embeddings)} embeddings of dimension {dimension} from {path}")
    return embeddings

"""TF-IDF post representations.

Fitting delegates document-frequency counting to scikit-learn's
`TfidfVectorizer` with the smoothed idf, `ln((1 + N) / (1 + df)) + 1`. The
fitted vocabulary and idf weights are then held in a plain, serializable
`TfidfModel` that transforms token streams with numpy alone.
"""

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from sklearn.feature_extraction.text import TfidfVectorizer

from mindtrace.features.text import FeatureException, TokenizedText
from mindtrace.logger import logger


@dataclass(frozen=True)
class TfidfConfig:
    """Vocabulary limits applied while fitting.

    Attributes:
        min_df: Minimum number of documents a term must appear in.
        max_features: Maximum vocabulary size, `None` for unlimited.
    """

    min_df: int = 1
    max_features: int | None = None

    def __post_init__(self) -> None:
        if self.min_df < 1:
            raise FeatureException(f"min_df must be at least 1, got {self.min_df}")
        if self.max_features is not None and self.max_features < 1:
            raise FeatureException(f"max_features must be at least 1, got {self.max_features}")


def _identity(tokens: Sequence[str]) -> Sequence[str]:
    return tokens


@dataclass(frozen=True)
class TfidfModel:
    """A fitted TF-IDF vocabulary.

    Attributes:
        vocabulary: Term to dense column index `0..V-1`.
        idf: Inverse document frequency per column, all strictly positive.
        config: The `TfidfConfig` the model was fitted with.
    """

    vocabulary: Mapping[str, int]
    idf: np.ndarray = field(compare=False)
    config: TfidfConfig = TfidfConfig()

    def __post_init__(self) -> None:
        if sorted(self.vocabulary.values()) != list(range(len(self.vocabulary))):
            raise FeatureException("Vocabulary indices must be dense 0..V-1")
        if self.idf.shape != (len(self.vocabulary),):
            raise FeatureException(
                f"idf has shape {self.idf.shape}, vocabulary has {len(self.vocabulary)} terms"
            )
        if np.any(self.idf <= 0):
            raise FeatureException("idf values must be strictly positive")
        self.idf.setflags(write=False)

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def idf_of(self, term: str) -> float | None:
        idx = self.vocabulary.get(term)
        return None if idx is None else float(self.idf[idx])

    def transform(self, tokens: Sequence[str]) -> np.ndarray:
        """Return the L2-normalized tf-idf vector of a token sequence.

        Unknown terms are ignored, a document without known terms maps to the
        zero vector.
        """
        vector = np.zeros(self.dimension, dtype=float)
        for token in tokens:
            idx = self.vocabulary.get(token)
            if idx is not None:
                vector[idx] += 1.0

        vector *= self.idf
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        return vector

    def transform_many(self, documents: Sequence[TokenizedText]) -> np.ndarray:
        if not documents:
            return np.zeros((0, self.dimension), dtype=float)
        return np.vstack([self.transform(doc.tokens) for doc in documents])

    def to_dict(self) -> dict[str, Any]:
        terms = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        return {
            "terms": terms,
            "idf": [float(v) for v in self.idf],
            "min_df": self.config.min_df,
            "max_features": self.config.max_features,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TfidfModel":
        try:
            terms = list(data["terms"])
            idf = np.array(data["idf"], dtype=float)
            config = TfidfConfig(int(data.get("min_df", 1)), data.get("max_features"))
        except (KeyError, TypeError, ValueError) as e:
            raise FeatureException(f"Malformed TF-IDF model data: {e}") from e
        return cls({term: idx for idx, term in enumerate(terms)}, idf, config)


def fit_tfidf(corpus: Sequence[TokenizedText], config: TfidfConfig | None = None) -> TfidfModel:
    """Fit a `TfidfModel` on a tokenized corpus.

    Args:
        corpus: Tokenized documents.
        config: Vocabulary limits, defaults if `None`.

    Returns:
        The fitted model.

    Raises:
        FeatureException: If the corpus is empty or yields no vocabulary.
    """
    config = config or TfidfConfig()
    if not corpus:
        raise FeatureException("Can't fit TF-IDF on an empty corpus")

    vectorizer = TfidfVectorizer(
        analyzer=_identity,
        lowercase=False,
        min_df=config.min_df,
        max_features=config.max_features,
        smooth_idf=True,
        sublinear_tf=False,
        norm="l2",
    )
    try:
        vectorizer.fit([list(doc.tokens) for doc in corpus])
    except ValueError as e:
        raise FeatureException(f"TF-IDF fit failed: {e}") from e

    vocabulary = {str(term): int(idx) for term, idx in vectorizer.vocabulary_.items()}
    model = TfidfModel(vocabulary, np.asarray(vectorizer.idf_, dtype=float).copy(), config)
    logger.info(f"Fitted TF-IDF on {len(corpus)} documents, vocabulary size {model.dimension}")
    return model

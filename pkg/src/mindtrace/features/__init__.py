"""Post text features: linguistic features, TF-IDF and temporal differences."""

from mindtrace.features.temporal import (
    TemporalFeatures,
    assemble_change_features,
    change_feature_names,
    load_embeddings,
    temporal_features,
    tfidf_representations,
)
from mindtrace.features.text import (
    FEATURE_NAMES,
    FeatureException,
    Lexicon,
    LinguisticFeatures,
    TokenizedText,
    clean_tokens,
    default_lexicon,
    default_stopwords,
    linguistic_features,
    load_lexicon,
    tokenize,
)
from mindtrace.features.tfidf import TfidfConfig, TfidfModel, fit_tfidf

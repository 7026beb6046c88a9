"""Rule-based subelement tagging with log-likelihood ranked n-grams."""

from mindtrace.tagger.llr import TaggerException, llr_score
from mindtrace.tagger.signatures import (
    AUGMENTED,
    GOLD,
    EvidenceText,
    LabeledCorpus,
    NgramSignatureSet,
    ScoredNgram,
    TaggerConfig,
    build_corpus,
    extract_signatures,
    load_signatures,
    tag_post,
    tag_text,
)

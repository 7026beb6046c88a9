"""Text cleaning and the hand-crafted linguistic features of a post.

Word-level counts (`log_len`, `avg_word_len`, the lexicon fractions and
`words_per_sent`) use whitespace-separated words. Lexicon lookups strip
surrounding punctuation and lowercase each word before matching.

Sentences are the non-empty segments left after splitting the raw text on
runs of `.`, `!` and `?`.
"""

import math
import re
from dataclasses import astuple, dataclass, fields
from functools import cache
from pathlib import Path

import numpy as np

from mindtrace.logger import logger
from mindtrace.model.timeline import REMOVED_MARKERS
from mindtrace.util import load_word_list, safe_div, split_words

RE_TOKEN = re.compile(r"[^\W_]+")
RE_SENTENCE_SPLIT = re.compile(r"[.!?]+")
RE_WORD_STRIP = re.compile(r"^[^\w]+|[^\w]+$")

PUNCTUATION = frozenset("!?.,;:")
EMO_PUNCT_CAP = 10
ELLIPSES = ("...", "…")

NEGATIVE_LEXICON = "negative.txt"
POSITIVE_LEXICON = "positive.txt"
STOPWORDS = "stopwords.txt"


class FeatureException(Exception):
    """Raised for invalid feature inputs, e.g. an empty corpus or mismatched dimensions."""


@dataclass(frozen=True)
class TokenizedText:
    """Lowercased word tokens of a text plus its sentence count.

    Attributes:
        tokens: Lowercased tokens, split on runs of non-alphanumeric characters.
        sentences: Number of non-empty `[.!?]+` separated segments.
        raw: The original text.
    """

    tokens: tuple[str, ...]
    sentences: int
    raw: str


def count_sentences(raw: str) -> int:
    return sum(1 for segment in RE_SENTENCE_SPLIT.split(raw) if segment.strip())


def tokenize(raw: str) -> TokenizedText:
    """Tokenize `raw` into lowercase alphanumeric tokens and count its sentences.

    Examples:
        `"Hi. Bye!"` gives tokens `("hi", "bye")` and 2 sentences, `"a?!b"`
        gives 2 sentences, an empty string gives no tokens and 0 sentences.
    """
    return TokenizedText(tuple(RE_TOKEN.findall(raw.lower())), count_sentences(raw), raw)


@dataclass(frozen=True)
class Lexicon:
    """Negative and positive sentiment word lists."""

    negative: frozenset[str]
    positive: frozenset[str]


@cache
def default_lexicon() -> Lexicon:
    return Lexicon(load_word_list(NEGATIVE_LEXICON), load_word_list(POSITIVE_LEXICON))


def _read_words(path: str | Path) -> frozenset[str]:
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


def load_lexicon(negative: str | Path | None = None, positive: str | Path | None = None) -> Lexicon:
    """Load sentiment word lists from files, using the bundled list for any path left as `None`."""
    default = default_lexicon()
    lexicon = Lexicon(
        _read_words(negative) if negative else default.negative,
        _read_words(positive) if positive else default.positive,
    )
    logger.debug(f"Lexicon: {len(lexicon.negative)} negative, {len(lexicon.positive)} positive words")
    return lexicon


@cache
def default_stopwords() -> frozenset[str]:
    return load_word_list(STOPWORDS)


def clean_tokens(raw: str, stopwords: frozenset[str] | None = None) -> tuple[str, ...]:
    """Tokenize `raw` and drop stopwords, the stream n-gram signatures work on."""
    stop = default_stopwords() if stopwords is None else stopwords
    return tuple(token for token in tokenize(raw).tokens if token not in stop)


@dataclass(frozen=True)
class LinguisticFeatures:
    """The 14 per-post linguistic features, in vector order."""

    log_len: float
    n_sentences: float
    avg_word_len: float
    frac_upper: float
    frac_punct: float
    n_exclaim: float
    n_question: float
    n_ellipsis: float
    emo_punct: float
    frac_neg: float
    frac_pos: float
    sentiment_balance: float
    words_per_sent: float
    has_removed: float

    def as_vector(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in fields(LinguisticFeatures))


def linguistic_features(raw: str, lexicon: Lexicon | None = None) -> LinguisticFeatures:
    """Compute the linguistic features of a post text.

    Any ratio with a zero denominator is 0.

    Args:
        raw: Post text, possibly empty.
        lexicon: Sentiment word lists, the bundled ones if `None`.

    Returns:
        The populated `LinguisticFeatures`.
    """
    lexicon = lexicon or default_lexicon()

    words = split_words(raw)
    n_words = len(words)
    n_sentences = count_sentences(raw)
    n_chars = len(raw)

    normalized = [RE_WORD_STRIP.sub("", word).lower() for word in words]
    frac_neg = safe_div(sum(1 for w in normalized if w in lexicon.negative), n_words)
    frac_pos = safe_div(sum(1 for w in normalized if w in lexicon.positive), n_words)

    n_exclaim = raw.count("!")
    n_question = raw.count("?")

    return LinguisticFeatures(
        log_len=math.log1p(n_words),
        n_sentences=float(n_sentences),
        avg_word_len=safe_div(sum(len(w) for w in words), n_words),
        frac_upper=safe_div(sum(1 for c in raw if c.isupper()), n_chars),
        frac_punct=safe_div(sum(1 for c in raw if c in PUNCTUATION), n_chars),
        n_exclaim=float(n_exclaim),
        n_question=float(n_question),
        n_ellipsis=float(sum(raw.count(e) for e in ELLIPSES)),
        emo_punct=float(min(n_exclaim + n_question, EMO_PUNCT_CAP)),
        frac_neg=frac_neg,
        frac_pos=frac_pos,
        sentiment_balance=frac_neg - frac_pos,
        words_per_sent=safe_div(n_words, n_sentences),
        has_removed=1.0 if raw.strip() in REMOVED_MARKERS else 0.0,
    )

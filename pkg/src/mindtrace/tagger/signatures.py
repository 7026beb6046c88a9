"""Label-conditioned n-gram signatures and rule-based post tagging.

Every label of the schema collects evidence texts into a `LabeledCorpus`.
Bigrams and trigrams over the cleaned (lowercased, stopword-free) token
stream of each label's corpus are scored one-vs-rest against all other
labels with `llr_score()`, and the top-k n-grams per label form its
signature. A post is tagged with a label when at least `min_match` distinct
signature n-grams of that label occur in the post's cleaned token stream.

Only n-grams that are at least as frequent in the label corpus as in the
rest are kept, G² alone doesn't tell over- and under-representation apart.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from mindtrace.features.text import clean_tokens
from mindtrace.logger import logger
from mindtrace.model.schema import Label, LabelSchema, SchemaException, default_schema
from mindtrace.model.timeline import Post, Timeline
from mindtrace.tagger.llr import TaggerException, llr_score, positively_associated

GOLD = "gold"
AUGMENTED = "augmented"

Ngram = tuple[str, ...]


@dataclass(frozen=True)
class TaggerConfig:
    """N-gram tagger settings.

    Attributes:
        k: Number of top-ranked n-grams kept per label.
        min_match: Distinct signature n-grams needed to assign a label.
        orders: N-gram orders to extract.
    """

    k: int = 25
    min_match: int = 1
    orders: tuple[int, ...] = (2, 3)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise TaggerException(f"k must be at least 1, got {self.k}")
        if self.min_match < 1:
            raise TaggerException(f"min_match must be at least 1, got {self.min_match}")
        if not self.orders or any(n not in (2, 3) for n in self.orders):
            raise TaggerException(f"orders must be a non-empty subset of (2, 3), got {self.orders}")


@dataclass(frozen=True)
class EvidenceText:
    text: str
    source: str = GOLD


@dataclass(frozen=True)
class LabeledCorpus:
    """Evidence texts per label.

    Attributes:
        documents: Mapping of label to its evidence texts.
    """

    documents: Mapping[Label, tuple[EvidenceText, ...]] = field(default_factory=dict)

    def labels(self) -> list[Label]:
        return sorted(label for label, docs in self.documents.items() if docs)

    def texts(self, label: Label) -> list[str]:
        return [doc.text for doc in self.documents.get(label, ())]

    def size(self) -> int:
        return sum(len(docs) for docs in self.documents.values())

    def with_texts(self, label: Label, texts: Iterable[str], source: str) -> "LabeledCorpus":
        """Return a copy with `texts` appended to `label`'s evidence, skipping blank and already present ones."""
        docs = list(self.documents.get(label, ()))
        present = {doc.text for doc in docs}
        for text in texts:
            text = text.strip()
            if text and text not in present:
                docs.append(EvidenceText(text, source))
                present.add(text)

        documents = dict(self.documents)
        documents[label] = tuple(docs)
        return LabeledCorpus(documents)

    def to_dict(self) -> dict[str, Any]:
        return {
            label.key(): [{"text": doc.text, "source": doc.source} for doc in self.documents[label]]
            for label in self.labels()
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], schema: LabelSchema | None = None) -> "LabeledCorpus":
        schema = schema or default_schema()
        documents = {}
        try:
            for key, entries in data.items():
                label = schema.validate(Label.from_key(key))
                documents[label] = tuple(
                    EvidenceText(str(e["text"]), str(e.get("source", GOLD))) for e in entries
                )
        except SchemaException as e:
            raise TaggerException(f"Invalid corpus label: {e}") from e
        except (KeyError, TypeError, AttributeError) as e:
            raise TaggerException(f"Malformed corpus data: {e}") from e
        return cls(documents)


def build_corpus(timelines: Sequence[Timeline], schema: LabelSchema | None = None) -> LabeledCorpus:
    """Collect gold evidence per label from annotated timelines.

    Evidence spans are used when a label carries them, the whole post text
    otherwise. Posts without gold annotation are skipped.
    """
    schema = schema or default_schema()
    collected: dict[Label, list[str]] = {}

    for timeline in timelines:
        for post in timeline.posts:
            annotation = post.gold_annotation
            if annotation is None:
                continue
            for label in sorted(annotation.labels):
                schema.validate(label)
                spans = annotation.evidence_for(label) or [post.text]
                collected.setdefault(label, []).extend(spans)

    corpus = LabeledCorpus()
    for label in sorted(collected):
        corpus = corpus.with_texts(label, collected[label], GOLD)

    logger.info(f"Built corpus of {corpus.size()} evidence texts over {len(corpus.labels())} labels")
    return corpus


@dataclass(frozen=True, order=True)
class ScoredNgram:
    ngram: Ngram
    llr: float

    def to_dict(self) -> dict[str, Any]:
        return {"ngram": list(self.ngram), "llr": self.llr}


@dataclass(frozen=True)
class NgramSignatureSet:
    """Ranked signature n-grams per label.

    Attributes:
        signatures: Per label, n-grams sorted by llr descending, then lexicographically.
        k: The top-k limit the set was built with.
        omitted: Labels left out because their cleaned corpus was empty.
    """

    signatures: Mapping[Label, tuple[ScoredNgram, ...]]
    k: int
    omitted: tuple[Label, ...] = ()

    def labels(self) -> list[Label]:
        return sorted(self.signatures)

    def ngrams(self, label: Label) -> list[Ngram]:
        return [s.ngram for s in self.signatures.get(label, ())]

    def is_empty(self) -> bool:
        return not any(self.signatures.values())

    def to_dict(self) -> dict[str, list[dict[str, Any]]]:
        return {
            label.key(): [s.to_dict() for s in self.signatures[label]]
            for label in self.labels()
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], schema: LabelSchema | None = None) -> "NgramSignatureSet":
        schema = schema or default_schema()
        signatures = {}
        k = 1
        try:
            for key, entries in data.items():
                label = schema.validate(Label.from_key(key))
                scored = tuple(ScoredNgram(tuple(e["ngram"]), float(e["llr"])) for e in entries)
                signatures[label] = scored
                k = max(k, len(scored))
        except SchemaException as e:
            raise TaggerException(f"Invalid signature label: {e}") from e
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise TaggerException(f"Malformed signature data: {e}") from e
        return cls(signatures, k)


def load_signatures(path: str | Path, schema: LabelSchema | None = None) -> NgramSignatureSet:
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise TaggerException(f"Malformed signature file {path}: {e}") from e
    if not isinstance(data, dict):
        raise TaggerException(f"Signature file {path} must hold a JSON object")
    return NgramSignatureSet.from_dict(data, schema)


def ngrams_of(tokens: Sequence[str], orders: Iterable[int]) -> list[Ngram]:
    grams = []
    for n in orders:
        grams.extend(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return grams


def _rank_label(
    counts: Counter,
    totals: Mapping[int, int],
    rest_counts: Counter,
    rest_totals: Mapping[int, int],
    k: int,
) -> tuple[ScoredNgram, ...]:
    scored = []
    for ngram, k11 in counts.items():
        n = len(ngram)
        k12 = rest_counts.get(ngram, 0)
        k21 = totals[n] - k11
        k22 = rest_totals.get(n, 0) - k12
        if not positively_associated(k11, k12, k21, k22):
            continue
        scored.append(ScoredNgram(ngram, llr_score(k11, k12, k21, k22)))

    scored.sort(key=lambda s: (-s.llr, s.ngram))
    return tuple(scored[:k])


def extract_signatures(corpus: LabeledCorpus, config: TaggerConfig | None = None) -> NgramSignatureSet:
    """Rank n-gram collocations per label against all other labels.

    Args:
        corpus: Evidence texts per label.
        config: Tagger settings, defaults if `None`.

    Returns:
        The `NgramSignatureSet`, labels with an empty cleaned corpus listed in `omitted`.

    Raises:
        TaggerException: If the corpus holds no documents at all.
    """
    config = config or TaggerConfig()
    labels = corpus.labels()
    if not labels:
        raise TaggerException("Can't extract signatures from an empty corpus")

    label_counts: dict[Label, Counter] = {}
    omitted = []
    for label in labels:
        counts: Counter = Counter()
        for text in corpus.texts(label):
            counts.update(ngrams_of(clean_tokens(text), config.orders))
        if counts:
            label_counts[label] = counts
        else:
            logger.warning(f"No n-grams for label {label.abbreviation()} after cleaning, omitting it")
            omitted.append(label)

    all_counts: Counter = Counter()
    for counts in label_counts.values():
        all_counts.update(counts)
    all_totals = _order_totals(all_counts)

    signatures = {}
    for label, counts in label_counts.items():
        totals = _order_totals(counts)
        rest_counts = all_counts - counts
        rest_totals = {n: all_totals.get(n, 0) - totals.get(n, 0) for n in config.orders}
        signatures[label] = _rank_label(counts, totals, rest_counts, rest_totals, config.k)

    logger.info(f"Extracted signatures for {len(signatures)} labels, {len(omitted)} omitted")
    return NgramSignatureSet(signatures, config.k, tuple(omitted))


def _order_totals(counts: Counter) -> dict[int, int]:
    totals: dict[int, int] = {}
    for ngram, count in counts.items():
        totals[len(ngram)] = totals.get(len(ngram), 0) + count
    return totals


def tag_text(text: str, signatures: NgramSignatureSet, config: TaggerConfig | None = None) -> frozenset[Label]:
    """Return the labels whose signature n-grams occur at least `min_match` times in `text`."""
    config = config or TaggerConfig()
    if signatures.is_empty():
        raise TaggerException("Signature set is empty")

    present = set(ngrams_of(clean_tokens(text), config.orders))
    matched = set()
    for label in signatures.labels():
        hits = sum(1 for ngram in signatures.ngrams(label) if ngram in present)
        if hits >= config.min_match:
            matched.add(label)
    return frozenset(matched)


def tag_post(post: Post, signatures: NgramSignatureSet, config: TaggerConfig | None = None) -> frozenset[Label]:
    """Tag a post with every label its cleaned text matches, see `tag_text()`."""
    return tag_text(post.text, signatures, config)

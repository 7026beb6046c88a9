"""Two-stage mining of dynamic signatures of change.

Sequences are split by well-being trajectory into improvement and
deterioration. Within each direction they are batched and every batch is
sent to the model once to extract its recurring self-state dynamics
(stage 1). The batch outputs of a direction are then synthesized into one
short signature with a handful of exemplar sequences (stage 2).

Signature length and exemplar count are enforced after the fact, whatever
the model returns.
"""

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from mindtrace.features.text import clean_tokens
from mindtrace.llm.client import InferenceClient, TransportException
from mindtrace.llm.prompts import (
    build_batch_patterns_prompt,
    build_compress_prompt,
    build_signature_prompt,
    system_prompt,
)
from mindtrace.llm.pipelines import PipelineException
from mindtrace.llm.validation import ValidationExhaustedException, request_validated
from mindtrace.logger import logger
from mindtrace.model.schema import Label
from mindtrace.model.timeline import Timeline
from mindtrace.summarizer.template import (
    DETERIORATION,
    IMPROVEMENT,
    SummarizerConfig,
    derive_direction,
    wellbeing_delta,
)
from mindtrace.util import jaccard, map_jobs, truncate_words, word_count

TRAJECTORIES = (IMPROVEMENT, DETERIORATION)


class MinerException(Exception):
    """Raised for invalid miner input, like an empty batch or too few sequences."""


@dataclass(frozen=True)
class MinerConfig:
    """Signature mining settings.

    Attributes:
        batch_size: Sequences per stage-1 request.
        word_limit: Maximum signature length in whitespace words.
        min_exemplars: Minimum exemplar sequences per signature.
        max_exemplars: Maximum exemplar sequences per signature.
    """

    batch_size: int = 10
    word_limit: int = 90
    min_exemplars: int = 5
    max_exemplars: int = 10

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise MinerException(f"batch_size must be at least 1, got {self.batch_size}")
        if self.word_limit < 1:
            raise MinerException(f"word_limit must be at least 1, got {self.word_limit}")
        if not 1 <= self.min_exemplars <= self.max_exemplars:
            raise MinerException(
                f"Need 1 <= min_exemplars <= max_exemplars, got {self.min_exemplars}/{self.max_exemplars}"
            )


@dataclass(frozen=True)
class BundlePost:
    position: int
    text: str
    labels: frozenset[Label] = frozenset()
    adaptive_presence: int | None = None
    maladaptive_presence: int | None = None
    wellbeing: int | None = None


@dataclass(frozen=True)
class SequenceBundle:
    """A sequence with everything stage 1 gets to see about it.

    Attributes:
        sequence_id: Unique id of the sequence within a run.
        posts: Per-post labels, presence ratings and well-being.
        summary: Gold summary of the sequence, if there is one.
    """

    sequence_id: str
    posts: tuple[BundlePost, ...]
    summary: str | None = None

    def __post_init__(self) -> None:
        if not self.posts:
            raise MinerException(f"Sequence {self.sequence_id} has no posts")

    @property
    def wellbeing(self) -> list[int | None]:
        return [post.wellbeing for post in self.posts]

    def text(self) -> str:
        """Post texts and summary, the text exemplar ranking compares against."""
        parts = [post.text for post in self.posts]
        if self.summary:
            parts.append(self.summary)
        return " ".join(parts)


@dataclass(frozen=True)
class DynamicSignature:
    """A short description of a recurring change pattern and sequences showing it."""

    direction: str
    text: str
    exemplar_ids: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"signature": self.text, "exemplars": list(self.exemplar_ids)}


@dataclass(frozen=True)
class MiningResult:
    """Signatures per direction and the raw stage-1 outputs they were built from."""

    signatures: dict[str, DynamicSignature]
    audit: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "signatures": {direction: sig.to_dict() for direction, sig in self.signatures.items()},
            "audit": {direction: list(patterns) for direction, patterns in self.audit.items()},
        }


def bundle_from_timeline(timeline: Timeline, summary: str | None = None) -> SequenceBundle:
    posts = []
    for post in timeline.posts:
        annotation = post.gold_annotation
        posts.append(
            BundlePost(
                position=post.position,
                text=post.text,
                labels=annotation.labels if annotation else frozenset(),
                adaptive_presence=annotation.adaptive_presence if annotation else None,
                maladaptive_presence=annotation.maladaptive_presence if annotation else None,
                wellbeing=post.wellbeing,
            )
        )
    return SequenceBundle(timeline.timeline_id, tuple(posts), summary)


def classify_trajectory(bundle: SequenceBundle, config: SummarizerConfig | None = None) -> str:
    """Improvement or deterioration of a sequence's well-being.

    Fluctuating sequences go to the side their delta points at, a zero or
    missing delta counts as deterioration.
    """
    direction = derive_direction(bundle.wellbeing, config)
    if direction in TRAJECTORIES:
        return direction
    delta = wellbeing_delta(bundle.wellbeing)
    return IMPROVEMENT if delta is not None and delta > 0 else DETERIORATION


def _presence(value: int | None) -> str:
    return "-" if value is None else str(value)


def format_bundle(bundle: SequenceBundle) -> str:
    lines = [f"Sequence {bundle.sequence_id}:"]
    for post in bundle.posts:
        labels = ", ".join(sorted(label.abbreviation() for label in post.labels)) or "none"
        lines.append(
            f"[{post.position}] labels: {labels}"
            f" | presence A/M: {_presence(post.adaptive_presence)}/{_presence(post.maladaptive_presence)}"
            f" | wellbeing: {_presence(post.wellbeing)}"
        )
    if bundle.summary:
        lines.append(f"Summary: {' '.join(bundle.summary.split())}")
    return "\n".join(lines)


def batch_sequences(bundles: Sequence[SequenceBundle], batch_size: int) -> list[list[SequenceBundle]]:
    if batch_size < 1:
        raise MinerException(f"batch_size must be at least 1, got {batch_size}")
    return [list(bundles[i : i + batch_size]) for i in range(0, len(bundles), batch_size)]


def _patterns_ok(data: dict[str, Any]) -> str | None:
    patterns = data["patterns"]
    if not patterns or not all(isinstance(p, str) and p.strip() for p in patterns):
        return "'patterns' must be a non-empty list of non-empty strings"
    return None


def extract_batch_patterns(
    batch: Sequence[SequenceBundle],
    direction: str,
    client: InferenceClient,
    batch_index: int = 0,
) -> str:
    """Stage 1: one request for the recurring dynamics of a batch.

    Returns:
        The extracted patterns, one per line.

    Raises:
        MinerException: If the batch is empty.
        PipelineException: If the request or its validation fails, with `batch_index`.
    """
    if not batch:
        raise MinerException(f"Batch {batch_index} is empty")

    prompt = build_batch_patterns_prompt(direction, [format_bundle(bundle) for bundle in batch])
    try:
        result = request_validated(client, prompt, {"patterns": list}, system_prompt(), check=_patterns_ok)
    except (TransportException, ValidationExhaustedException) as e:
        raise PipelineException(f"Pattern extraction failed for {direction} batch: {e}", batch_index) from e

    logger.debug(f"{direction} batch {batch_index}: {len(result.data['patterns'])} patterns")
    return "\n".join(pattern.strip() for pattern in result.data["patterns"])


def _signature_ok(data: dict[str, Any]) -> str | None:
    return None if data["signature"].strip() else "'signature' is empty"


def select_exemplars(
    proposed: Sequence[Any],
    bundles: Sequence[SequenceBundle],
    signature: str,
    config: MinerConfig,
) -> tuple[str, ...]:
    """Validate proposed exemplar ids and fill up or cut down to the allowed range.

    Unknown and duplicate ids are dropped. Missing exemplars are taken from
    the remaining sequences ranked by token overlap with the signature, ties
    by id.
    """
    candidates = {bundle.sequence_id: bundle for bundle in bundles}
    if len(candidates) < config.min_exemplars:
        raise MinerException(
            f"Need at least {config.min_exemplars} candidate sequences, got {len(candidates)}"
        )

    chosen: list[str] = []
    for sequence_id in proposed:
        if isinstance(sequence_id, str) and sequence_id in candidates and sequence_id not in chosen:
            chosen.append(sequence_id)
    chosen = chosen[: config.max_exemplars]

    if len(chosen) < config.min_exemplars:
        logger.warning(f"Model proposed {len(chosen)} valid exemplars, padding to {config.min_exemplars}")
        signature_tokens = clean_tokens(signature)
        ranked = sorted(
            (sid for sid in candidates if sid not in chosen),
            key=lambda sid: (-jaccard(signature_tokens, clean_tokens(candidates[sid].text())), sid),
        )
        chosen.extend(ranked[: config.min_exemplars - len(chosen)])

    return tuple(chosen)


def synthesize_signature(
    patterns: Sequence[str],
    direction: str,
    bundles: Sequence[SequenceBundle],
    client: InferenceClient,
    config: MinerConfig | None = None,
) -> DynamicSignature:
    """Stage 2: merge the batch patterns of a direction into one signature.

    A signature over the word limit gets one compression request, what's
    still too long afterwards is cut at the last sentence end that fits.

    Raises:
        MinerException: Without patterns or with too few candidate sequences.
        PipelineException: If a request or its validation fails.
    """
    config = config or MinerConfig()
    if not patterns:
        raise MinerException(f"No stage-1 patterns for {direction}")

    candidate_ids = [bundle.sequence_id for bundle in bundles]
    if len(set(candidate_ids)) < config.min_exemplars:
        raise MinerException(
            f"Need at least {config.min_exemplars} {direction} sequences, got {len(set(candidate_ids))}"
        )

    system = system_prompt()
    fields = {"signature": str, "exemplar_ids": list}
    prompt = build_signature_prompt(
        direction, patterns, candidate_ids, config.word_limit, config.min_exemplars, config.max_exemplars
    )
    try:
        result = request_validated(client, prompt, fields, system, check=_signature_ok)
        text = " ".join(result.data["signature"].split())
        proposed = result.data["exemplar_ids"]

        if word_count(text) > config.word_limit:
            logger.info(f"{direction} signature has {word_count(text)} words, asking for a shorter one")
            prompt = build_compress_prompt(direction, text, proposed, word_count(text), config.word_limit)
            result = request_validated(client, prompt, fields, system, check=_signature_ok)
            text = " ".join(result.data["signature"].split())
    except (TransportException, ValidationExhaustedException) as e:
        raise PipelineException(f"Signature synthesis failed for {direction}: {e}", 0) from e

    if word_count(text) > config.word_limit:
        logger.warning(f"{direction} signature still has {word_count(text)} words, truncating")
        text = truncate_words(text, config.word_limit)

    return DynamicSignature(direction, text, select_exemplars(proposed, bundles, text, config))


def group_by_direction(
    bundles: Sequence[SequenceBundle],
    summarizer: SummarizerConfig | None = None,
) -> dict[str, list[SequenceBundle]]:
    seen: set[str] = set()
    groups: dict[str, list[SequenceBundle]] = {direction: [] for direction in TRAJECTORIES}
    for bundle in bundles:
        if bundle.sequence_id in seen:
            raise MinerException(f"Duplicate sequence id '{bundle.sequence_id}'")
        seen.add(bundle.sequence_id)
        groups[classify_trajectory(bundle, summarizer)].append(bundle)
    return groups


def mine_signatures(
    bundles: Sequence[SequenceBundle],
    client: InferenceClient,
    config: MinerConfig | None = None,
    summarizer: SummarizerConfig | None = None,
    jobs: int = 1,
) -> MiningResult:
    """Run both stages for both directions.

    Stage-1 batches of all directions run concurrently on up to `jobs`
    threads, stage 2 starts once they're all done. Directions with fewer
    sequences than `min_exemplars` are skipped before any request is made.
    """
    config = config or MinerConfig()
    groups = group_by_direction(bundles, summarizer)

    work: list[tuple[str, int, list[SequenceBundle]]] = []
    for direction in TRAJECTORIES:
        if not groups[direction]:
            logger.warning(f"No {direction} sequences, skipping that signature")
            continue
        if len(groups[direction]) < config.min_exemplars:
            logger.warning(
                f"Only {len(groups[direction])} {direction} sequences, need {config.min_exemplars}, "
                "skipping that signature"
            )
            continue
        for batch in batch_sequences(groups[direction], config.batch_size):
            work.append((direction, len(work), batch))

    logger.info(f"Extracting patterns from {len(work)} batches")
    outputs = map_jobs(lambda item: extract_batch_patterns(item[2], item[0], client, item[1]), work, jobs)

    audit: dict[str, list[str]] = {}
    for (direction, _, _), text in zip(work, outputs):
        audit.setdefault(direction, []).append(text)

    signatures = {
        direction: synthesize_signature(patterns, direction, groups[direction], client, config)
        for direction, patterns in audit.items()
    }
    return MiningResult(signatures, audit)


def bundles_from_timelines(
    timelines: Sequence[Timeline],
    summaries: Mapping[str, str] | None = None,
) -> list[SequenceBundle]:
    summaries = summaries or {}
    return [bundle_from_timeline(t, summaries.get(t.timeline_id)) for t in timelines]

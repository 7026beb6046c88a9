"""LLM-backed pipelines: change detection, evidence augmentation and summarization.

Timelines and labels may be processed concurrently (`jobs`), while the
client caps the number of requests in flight. Posts of one timeline are
always processed in order, oldest first.
"""

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from mindtrace.llm.client import InferenceClient, TransportException
from mindtrace.llm.prompts import (
    CHANGE_WINDOW,
    FewShotBank,
    FewShotSelector,
    build_augmentation_prompt,
    build_change_prompt,
    build_summary_prompt,
    system_prompt,
)
from mindtrace.llm.validation import (
    CHANGE_FIELDS,
    ChangeResponse,
    ValidationExhaustedException,
    request_validated,
)
from mindtrace.logger import logger
from mindtrace.model.schema import LabelSchema, default_schema
from mindtrace.model.timeline import ChangeLabel, ChangePrediction, Timeline, context_window
from mindtrace.tagger.signatures import AUGMENTED, LabeledCorpus
from mindtrace.util import map_jobs


class PipelineException(Exception):
    """Wraps a backend or validation failure with the index of the failing item.

    Attributes:
        index: Post position, label index or batch index that failed.
    """

    def __init__(self, message: str, index: int) -> None:
        super().__init__(f"{message} (at index {index})")
        self.index = index


def detect_changes_llm(
    timeline: Timeline,
    bank: FewShotBank,
    client: InferenceClient,
    window_size: int = CHANGE_WINDOW,
) -> list[ChangePrediction]:
    """Predict Switch/Escalation for every post with the few-shot prompt.

    The first post is always `(false, false)` and never sent to the endpoint.

    Raises:
        PipelineException: If a request or its validation fails, with the post position.
    """
    system = system_prompt()
    predictions = [
        ChangePrediction(timeline.timeline_id, timeline.posts[0].post_id, 0, False, False)
    ]

    for post in timeline.posts[1:]:
        prompt = build_change_prompt(context_window(timeline, post.position, window_size), post, bank)
        try:
            result = request_validated(client, prompt, CHANGE_FIELDS, system)
        except (TransportException, ValidationExhaustedException) as e:
            raise PipelineException(f"Change detection failed for {timeline.timeline_id}: {e}", post.position) from e

        if result.retries:
            logger.info(f"{timeline.timeline_id}/{post.post_id}: {result.retries} retries")

        response = ChangeResponse.from_dict(result.data)
        predictions.append(
            ChangePrediction(
                timeline.timeline_id,
                post.post_id,
                post.position,
                response.switch,
                response.escalation,
                response.justification,
            )
        )

    return predictions


def detect_changes_llm_many(
    timelines: Sequence[Timeline],
    bank: FewShotBank,
    client: InferenceClient,
    window_size: int = CHANGE_WINDOW,
    jobs: int = 1,
) -> list[list[ChangePrediction]]:
    return map_jobs(lambda t: detect_changes_llm(t, bank, client, window_size), timelines, jobs)


def _examples_ok(data: dict[str, Any]) -> str | None:
    examples = data["examples"]
    if not examples or not all(isinstance(e, str) and e.strip() for e in examples):
        return "'examples' must be a non-empty list of non-empty strings"
    return None


def augment_corpus(
    corpus: LabeledCorpus,
    client: InferenceClient,
    schema: LabelSchema | None = None,
    n_new: int = 5,
    max_evidence: int = 10,
    jobs: int = 1,
) -> LabeledCorpus:
    """Ask the model for additional evidence of every label and merge it into the corpus.

    Labels without a definition in the schema are left as they are. At most
    `max_evidence` gold texts are shown per prompt.

    Raises:
        PipelineException: If a request or its validation fails, with the label index.
    """
    schema = schema or default_schema()
    system = system_prompt()
    labels = corpus.labels()

    def generate(item: tuple[int, Any]) -> list[str]:
        idx, label = item
        definition = schema.definition(label)
        if not definition:
            logger.warning(f"No definition for {label.abbreviation()}, not augmenting it")
            return []

        evidence = corpus.texts(label)[:max_evidence]
        prompt = build_augmentation_prompt(label, definition, evidence, n_new, schema)
        try:
            result = request_validated(client, prompt, {"examples": list}, system, check=_examples_ok)
        except (TransportException, ValidationExhaustedException) as e:
            raise PipelineException(f"Augmentation failed for {label.abbreviation()}: {e}", idx) from e
        return [text.strip() for text in result.data["examples"]]

    generated = map_jobs(generate, list(enumerate(labels)), jobs)

    augmented = corpus
    for label, texts in zip(labels, generated):
        augmented = augmented.with_texts(label, texts, AUGMENTED)

    logger.info(f"Augmented corpus from {corpus.size()} to {augmented.size()} evidence texts")
    return augmented


@dataclass(frozen=True)
class LlmSummary:
    timeline_id: str
    summary: str
    retries: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {"timeline_id": self.timeline_id, "summary": self.summary}


def _summary_ok(data: dict[str, Any]) -> str | None:
    return None if data["summary"].strip() else "'summary' is empty"


def summarize_llm(
    timelines: Sequence[Timeline],
    client: InferenceClient,
    selector: FewShotSelector,
    changes: Mapping[str, Sequence[ChangeLabel | None]] | None = None,
    jobs: int = 1,
) -> list[LlmSummary]:
    """Summarize every sequence with a few-shot prompt.

    Args:
        timelines: Sequences to summarize.
        client: Inference client.
        selector: Few-shot example selector, the i-th sequence gets `selector.select(i)`.
        changes: Optional change labels per timeline id, overriding gold labels.
        jobs: Worker threads.

    Raises:
        PipelineException: If a request or its validation fails, with the sequence index.
    """
    system = system_prompt()

    def summarize(item: tuple[int, Timeline]) -> LlmSummary:
        idx, timeline = item
        prompt = build_summary_prompt(
            timeline, selector.select(idx), (changes or {}).get(timeline.timeline_id)
        )
        try:
            result = request_validated(client, prompt, {"summary": str}, system, check=_summary_ok)
        except (TransportException, ValidationExhaustedException) as e:
            raise PipelineException(f"Summarization failed for {timeline.timeline_id}: {e}", idx) from e
        return LlmSummary(timeline.timeline_id, " ".join(result.data["summary"].split()), result.retries)

    return map_jobs(summarize, list(enumerate(timelines)), jobs)

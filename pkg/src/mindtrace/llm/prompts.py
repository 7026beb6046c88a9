"""Prompt builders and few-shot example banks.

All builders are pure: identical inputs render byte-identical prompts. The
wording lives in the `prompts` Jinja templates, see
`mindtrace.llm.templater`.
"""

import json
from dataclasses import dataclass
from functools import cache
from pathlib import Path
from typing import Any, Sequence

import yaml

from mindtrace.llm.templater import PROMPTS, Templater, get_templater
from mindtrace.llm.validation import ChangeResponse
from mindtrace.logger import logger
from mindtrace.model.schema import Label, LabelSchema, default_schema
from mindtrace.model.timeline import ChangeLabel, Post, Timeline
from mindtrace.util import read_data_text

CHANGE_WINDOW = 5
CHANGE_CATEGORIES = ("switch_only", "escalation_only", "both", "neither", "first_post")

DEFAULT_CHANGE_BANK = "change_fewshot.yaml"
DEFAULT_SUMMARY_EXAMPLES = "summary_examples.yaml"


class PromptException(Exception):
    """Raised for invalid prompt inputs or malformed example banks."""


@dataclass(frozen=True)
class FewShotExample:
    category: str
    context: tuple[str, ...]
    current: str
    response: ChangeResponse

    @property
    def answer(self) -> str:
        return json.dumps(self.response.to_dict(), ensure_ascii=False)


@dataclass(frozen=True)
class FewShotBank:
    """Change-detection examples, exactly one per category in `CHANGE_CATEGORIES`."""

    examples: tuple[FewShotExample, ...]

    def __post_init__(self) -> None:
        categories = sorted(e.category for e in self.examples)
        if categories != sorted(CHANGE_CATEGORIES):
            raise PromptException(f"Few-shot bank needs one example per category {CHANGE_CATEGORIES}, got {categories}")

        first = self.by_category("first_post")
        if first.context or first.response.switch or first.response.escalation:
            raise PromptException("The first_post example must have no context and no change")

    def by_category(self, category: str) -> FewShotExample:
        for example in self.examples:
            if example.category == category:
                return example
        raise KeyError(category)

    def ordered(self) -> list[FewShotExample]:
        return [self.by_category(c) for c in CHANGE_CATEGORIES]


def _load_yaml(path: str | Path | None, default: str) -> Any:
    text = read_data_text(default) if path is None else Path(path).read_text(encoding="utf-8")
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise PromptException(f"Failed to parse {path or default}: {e}") from e


def load_fewshot_bank(path: str | Path | None = None) -> FewShotBank:
    """Load a change-detection few-shot bank, the bundled one if `path` is `None`."""
    data = _load_yaml(path, DEFAULT_CHANGE_BANK)
    try:
        examples = tuple(
            FewShotExample(
                category=str(entry["category"]),
                context=tuple(str(t) for t in entry.get("context") or []),
                current=str(entry["current"]),
                response=ChangeResponse(
                    bool(entry["answer"]["switch"]),
                    bool(entry["answer"]["escalation"]),
                    str(entry["answer"]["justification"]),
                ),
            )
            for entry in data
        )
    except (KeyError, TypeError) as e:
        raise PromptException(f"Malformed few-shot bank {path or DEFAULT_CHANGE_BANK}: {e}") from e
    return FewShotBank(examples)


@cache
def default_fewshot_bank() -> FewShotBank:
    return load_fewshot_bank()


@dataclass(frozen=True)
class SummaryExample:
    sequence: str
    summary: str


def load_summary_examples(path: str | Path | None = None) -> tuple[SummaryExample, ...]:
    """Load few-shot summarization examples, the bundled ones if `path` is `None`."""
    data = _load_yaml(path, DEFAULT_SUMMARY_EXAMPLES)
    try:
        examples = tuple(SummaryExample(str(e["sequence"]).strip(), str(e["summary"]).strip()) for e in data or [])
    except (KeyError, TypeError) as e:
        raise PromptException(f"Malformed summary examples {path or DEFAULT_SUMMARY_EXAMPLES}: {e}") from e
    logger.debug(f"Loaded {len(examples)} summary examples")
    return examples


class FewShotSelector:
    """Round-robin selection of summary examples.

    The sequence at index `i` gets examples `i * n_shots ... i * n_shots + n_shots - 1`
    modulo the bank size, so selection depends only on the index and not on
    the order in which sequences are processed.
    """

    def __init__(self, examples: Sequence[SummaryExample], n_shots: int = 2) -> None:
        if n_shots < 0:
            raise PromptException(f"n_shots must not be negative, got {n_shots}")
        self.examples = tuple(examples)
        self.n_shots = min(n_shots, len(self.examples))

    def select(self, index: int) -> list[SummaryExample]:
        if not self.n_shots:
            return []
        start = index * self.n_shots
        return [self.examples[(start + j) % len(self.examples)] for j in range(self.n_shots)]


def system_prompt(templater: Templater | None = None) -> str:
    return (templater or get_templater()).render("system", PROMPTS)


def build_change_prompt(
    window: Sequence[Post],
    current: Post,
    bank: FewShotBank,
    templater: Templater | None = None,
) -> str:
    """Render the Switch/Escalation prompt for one post.

    Args:
        window: Up to 5 preceding posts, oldest first.
        current: The post to classify.
        bank: The five few-shot examples.
        templater: Templater to render with, the context's one if `None`.

    Raises:
        PromptException: If the window holds more than 5 posts.
    """
    if len(window) > CHANGE_WINDOW:
        raise PromptException(f"Context window holds {len(window)} posts, at most {CHANGE_WINDOW} allowed")

    return (templater or get_templater()).render(
        "change", PROMPTS, examples=bank.ordered(), window=list(window), current=current
    )


def build_augmentation_prompt(
    label: Label,
    definition: str,
    evidence: Sequence[str],
    n_new: int,
    schema: LabelSchema | None = None,
    templater: Templater | None = None,
) -> str:
    """Render the prompt asking for `n_new` further evidence snippets of `label`.

    Raises:
        PromptException: If the definition or evidence is empty, or `n_new < 1`.
    """
    if not definition.strip():
        raise PromptException(f"No definition for label {label.abbreviation()}")
    if not evidence:
        raise PromptException(f"No evidence for label {label.abbreviation()}")
    if n_new < 1:
        raise PromptException(f"n_new must be at least 1, got {n_new}")

    schema = schema or default_schema()
    return (templater or get_templater()).render(
        "augmentation",
        PROMPTS,
        label=label,
        element_name=schema.element_name(label.element),
        definition=definition.strip(),
        evidence=list(evidence),
        n_new=n_new,
    )


def format_sequence_lines(timeline: Timeline, changes: Sequence[ChangeLabel | None] | None = None) -> list[str]:
    """One line per post with position, well-being, change markers and text.

    Gold subelement labels and presence ratings are never included.
    """
    if changes is not None and len(changes) != len(timeline.posts):
        raise PromptException(f"Got {len(changes)} change labels for {len(timeline.posts)} posts")

    lines = []
    for idx, post in enumerate(timeline.posts):
        change = changes[idx] if changes is not None else post.gold_change
        parts = [f"[{post.position}]"]
        if post.wellbeing is not None:
            parts.append(f"(wellbeing {post.wellbeing})")
        if change is not None and change.switch:
            parts.append("[SWITCH]")
        if change is not None and change.escalation:
            parts.append("[ESCALATION]")
        parts.append(" ".join(post.text.split()))
        lines.append(" ".join(parts))
    return lines


def build_summary_prompt(
    timeline: Timeline,
    examples: Sequence[SummaryExample],
    changes: Sequence[ChangeLabel | None] | None = None,
    templater: Templater | None = None,
) -> str:
    """Render the few-shot summarization prompt for a post sequence.

    Args:
        timeline: The sequence; its gold annotations are left out of the prompt.
        examples: Few-shot examples, may be empty.
        changes: Change labels overriding the posts' gold change labels.
        templater: Templater to render with, the context's one if `None`.
    """
    return (templater or get_templater()).render(
        "summary", PROMPTS, examples=list(examples), lines=format_sequence_lines(timeline, changes)
    )


def build_batch_patterns_prompt(direction: str, blocks: Sequence[str], templater: Templater | None = None) -> str:
    return (templater or get_templater()).render("batch_patterns", PROMPTS, direction=direction, blocks=list(blocks))


def build_signature_prompt(
    direction: str,
    patterns: Sequence[str],
    candidate_ids: Sequence[str],
    word_limit: int,
    min_exemplars: int,
    max_exemplars: int,
    templater: Templater | None = None,
) -> str:
    return (templater or get_templater()).render(
        "signature",
        PROMPTS,
        direction=direction,
        patterns=list(patterns),
        candidate_ids=list(candidate_ids),
        word_limit=word_limit,
        min_exemplars=min_exemplars,
        max_exemplars=max_exemplars,
    )


def build_compress_prompt(
    direction: str,
    signature: str,
    exemplar_ids: Sequence[str],
    word_count: int,
    word_limit: int,
    templater: Templater | None = None,
) -> str:
    return (templater or get_templater()).render(
        "compress",
        PROMPTS,
        direction=direction,
        signature=signature,
        exemplar_ids=list(exemplar_ids),
        word_count=word_count,
        word_limit=word_limit,
    )

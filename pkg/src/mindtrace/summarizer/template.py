"""Deterministic sequence summaries from self-state dynamics.

A summary is assembled from six fixed parts, each rendered from its own
`summary` Jinja template:

1. `central_theme` - the opening global statement.
2. `initial_state` - maladaptive-dominant when `M >= A`, adaptive otherwise,
   naming up to `max_features` subelements of the dominant side.
3. `interaction_dynamics` - maladaptive intensification when `M > A`,
   adaptive strengthening otherwise.
4. `transition` - switch or escalation.
5. `outcome` - deterioration, improvement or fluctuation.
6. `global_closers` - the two remaining global statements.

`M` and `A` are the total maladaptive and adaptive presence of the sequence.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Iterable, Sequence

from mindtrace.llm.templater import SUMMARY, Templater, get_templater
from mindtrace.model.schema import ADAPTIVE, MALADAPTIVE
from mindtrace.model.timeline import ChangeLabel, PostAnnotation, Timeline
from mindtrace.util import map_jobs

SWITCH = "switch"
ESCALATION = "escalation"

IMPROVEMENT = "improvement"
DETERIORATION = "deterioration"
FLUCTUATION = "fluctuation"
DIRECTIONS = (IMPROVEMENT, DETERIORATION, FLUCTUATION)

SUM = "sum"
MEAN = "mean"

NO_FEATURES = "a range of self-state processes"


class SummarizerException(Exception):
    """Raised for invalid summarizer inputs or configuration."""


@dataclass(frozen=True)
class SummarizerConfig:
    """Summary generation settings.

    Attributes:
        aggregation: How per-post presence ratings are totalled, `"sum"` or `"mean"`.
        improvement_threshold: Well-being delta above which a sequence improves.
        deterioration_threshold: Negative well-being delta below which it deteriorates.
        max_features: Maximum number of subelements named in the initial-state sentence.
    """

    aggregation: str = SUM
    improvement_threshold: float = 0.5
    deterioration_threshold: float = -0.5
    max_features: int = 5

    def __post_init__(self) -> None:
        if self.aggregation not in (SUM, MEAN):
            raise SummarizerException(f"aggregation must be '{SUM}' or '{MEAN}', got '{self.aggregation}'")
        if self.deterioration_threshold > self.improvement_threshold:
            raise SummarizerException("deterioration_threshold must not exceed improvement_threshold")
        if self.max_features < 1:
            raise SummarizerException(f"max_features must be at least 1, got {self.max_features}")


@dataclass(frozen=True)
class SummaryInputs:
    """Everything a template summary depends on.

    Attributes:
        maladaptive_score: Total maladaptive presence `M`.
        adaptive_score: Total adaptive presence `A`.
        adaptive_features: Adaptive subelement names.
        maladaptive_features: Maladaptive subelement names.
        delta: Structural change type, `"switch"` or `"escalation"`.
        direction: Well-being trajectory.
    """

    maladaptive_score: float
    adaptive_score: float
    adaptive_features: frozenset[str] = frozenset()
    maladaptive_features: frozenset[str] = frozenset()
    delta: str = ESCALATION
    direction: str = FLUCTUATION

    def __post_init__(self) -> None:
        if self.maladaptive_score < 0 or self.adaptive_score < 0:
            raise SummarizerException("Dominance scores must not be negative")
        if self.delta not in (SWITCH, ESCALATION):
            raise SummarizerException(f"Unknown change type '{self.delta}'")
        if self.direction not in DIRECTIONS:
            raise SummarizerException(f"Unknown direction '{self.direction}'")

    @property
    def maladaptive_dominant(self) -> bool:
        return self.maladaptive_score >= self.adaptive_score

    @property
    def maladaptive_intensifies(self) -> bool:
        return self.maladaptive_score > self.adaptive_score

    def to_dict(self) -> dict[str, Any]:
        return {
            "maladaptive_score": self.maladaptive_score,
            "adaptive_score": self.adaptive_score,
            "adaptive_features": sorted(self.adaptive_features),
            "maladaptive_features": sorted(self.maladaptive_features),
            "delta": self.delta,
            "direction": self.direction,
        }


@dataclass(frozen=True)
class SummaryParts:
    central_theme: str
    initial_state: str
    interaction_dynamics: str
    transition: str
    outcome: str
    global_closers: str


PART_NAMES: tuple[str, ...] = tuple(f.name for f in fields(SummaryParts))


@dataclass(frozen=True)
class StructuredSummary:
    """The rendered parts and their concatenation, joined by single spaces."""

    parts: SummaryParts
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {"parts": asdict(self.parts), "text": self.text}


def compute_dominance(
    annotations: Sequence[PostAnnotation | None],
    aggregation: str = SUM,
) -> tuple[float, float]:
    """Total maladaptive and adaptive presence of a sequence.

    Absent ratings count as 0. With `"mean"` aggregation the totals are
    divided by the number of posts.

    Returns:
        The pair `(M, A)`.

    Raises:
        SummarizerException: If the sequence is empty.
    """
    if not annotations:
        raise SummarizerException("Can't compute dominance of an empty sequence")

    maladaptive = sum((a.maladaptive_presence or 0) for a in annotations if a is not None)
    adaptive = sum((a.adaptive_presence or 0) for a in annotations if a is not None)
    if aggregation == MEAN:
        return maladaptive / len(annotations), adaptive / len(annotations)
    return float(maladaptive), float(adaptive)


def derive_transition(changes: Iterable[ChangeLabel | None]) -> str:
    """`"switch"` if any post switches, `"escalation"` otherwise, including when nothing changes."""
    return SWITCH if any(c is not None and c.switch for c in changes) else ESCALATION


def wellbeing_delta(wellbeing: Iterable[int | None]) -> float | None:
    """Mean of the last third minus mean of the first third of the present scores.

    A third holds `max(1, n // 3)` scores. Returns `None` when no score is present.
    """
    scores = [w for w in wellbeing if w is not None]
    if not scores:
        return None
    k = max(1, len(scores) // 3)
    return sum(scores[-k:]) / k - sum(scores[:k]) / k


def derive_direction(wellbeing: Iterable[int | None], config: SummarizerConfig | None = None) -> str:
    """Classify the well-being trajectory as improvement, deterioration or fluctuation."""
    config = config or SummarizerConfig()
    delta = wellbeing_delta(wellbeing)
    if delta is None:
        return FLUCTUATION
    if delta > config.improvement_threshold:
        return IMPROVEMENT
    if delta < config.deterioration_threshold:
        return DETERIORATION
    return FLUCTUATION


def feature_sets(annotations: Iterable[PostAnnotation | None]) -> tuple[frozenset[str], frozenset[str]]:
    """Adaptive and maladaptive subelement names over a sequence."""
    adaptive: set[str] = set()
    maladaptive: set[str] = set()
    for annotation in annotations:
        if annotation is not None:
            adaptive |= annotation.subelements(ADAPTIVE)
            maladaptive |= annotation.subelements(MALADAPTIVE)
    return frozenset(adaptive), frozenset(maladaptive)


def format_features(features: Iterable[str], limit: int = 5) -> str:
    names = sorted(features)[:limit]
    return ", ".join(names) if names else NO_FEATURES


def summary_inputs(
    timeline: Timeline,
    annotations: Sequence[PostAnnotation | None] | None = None,
    changes: Sequence[ChangeLabel | None] | None = None,
    config: SummarizerConfig | None = None,
) -> SummaryInputs:
    """Collect `SummaryInputs` for a sequence.

    Annotations and change labels default to the posts' gold values.
    """
    config = config or SummarizerConfig()
    if annotations is None:
        annotations = [post.gold_annotation for post in timeline.posts]
    if changes is None:
        changes = [post.gold_change for post in timeline.posts]
    if len(annotations) != len(timeline.posts) or len(changes) != len(timeline.posts):
        raise SummarizerException(f"Annotations or changes don't match the posts of {timeline.timeline_id}")

    maladaptive, adaptive = compute_dominance(annotations, config.aggregation)
    adaptive_features, maladaptive_features = feature_sets(annotations)
    return SummaryInputs(
        maladaptive_score=maladaptive,
        adaptive_score=adaptive,
        adaptive_features=adaptive_features,
        maladaptive_features=maladaptive_features,
        delta=derive_transition(changes),
        direction=derive_direction((post.wellbeing for post in timeline.posts), config),
    )


def render_summary(
    inputs: SummaryInputs,
    config: SummarizerConfig | None = None,
    templater: Templater | None = None,
) -> StructuredSummary:
    """Assemble the template summary for `inputs`.

    The output depends on nothing but the inputs, the config and the templates.
    """
    config = config or SummarizerConfig()
    templater = templater or get_templater()

    dominant = inputs.maladaptive_features if inputs.maladaptive_dominant else inputs.adaptive_features
    context = {
        "maladaptive_dominant": inputs.maladaptive_dominant,
        "maladaptive_intensifies": inputs.maladaptive_intensifies,
        "features": format_features(dominant, config.max_features),
        "delta": inputs.delta,
        "direction": inputs.direction,
    }

    parts = SummaryParts(**{name: templater.render(name, SUMMARY, **context) for name in PART_NAMES})
    text = " ".join(part for part in (getattr(parts, name) for name in PART_NAMES) if part)
    return StructuredSummary(parts, text)


def summarize_template(
    timelines: Sequence[Timeline],
    config: SummarizerConfig | None = None,
    jobs: int = 1,
) -> list[dict[str, Any]]:
    """Template summaries of every timeline from its gold annotations and change labels."""

    def summarize(timeline: Timeline) -> dict[str, Any]:
        inputs = summary_inputs(timeline, config=config)
        summary = render_summary(inputs, config)
        return {"timeline_id": timeline.timeline_id, "inputs": inputs.to_dict(), **summary.to_dict()}

    return map_jobs(summarize, timelines, jobs)

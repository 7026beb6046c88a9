"""Element and subelement classification scores.

Element presence is scored as one binary task per element and valence,
pooled over posts. Per valence the element F1s are macro-averaged, and the
final score is the mean of both valence macros.

Subelements are scored per element as multi-label classes, each class a
(valence, subelement) pair, macro-averaged over the classes that appear in
gold or predictions. Two averages are reported: the mean of the per-element
macros, and the macro over all classes of all elements at once.

Only posts with gold labels take part.
"""

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from mindtrace.evaluation.report import EvaluationException, PostKey, require_predictions
from mindtrace.model.schema import ADAPTIVE, MALADAPTIVE, VALENCES, Label, LabelSchema, default_schema
from mindtrace.model.timeline import PostAnnotation, Timeline
from mindtrace.util import safe_div


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise EvaluationException(f"Negative confusion counts {self}")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @classmethod
    def of(cls, predicted: bool, gold: bool) -> "ConfusionCounts":
        return cls(int(predicted and gold), int(predicted and not gold), int(gold and not predicted))

    @classmethod
    def pooled(cls, pairs: Iterable[tuple[bool, bool]]) -> "ConfusionCounts":
        """Sum of the counts of `(predicted, gold)` pairs."""
        total = cls()
        for predicted, gold in pairs:
            total = total + cls.of(predicted, gold)
        return total


def prf1(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Precision, recall and F1, each 0 when its denominator is 0."""
    precision = safe_div(counts.tp, counts.tp + counts.fp)
    recall = safe_div(counts.tp, counts.tp + counts.fn)
    return precision, recall, safe_div(2 * precision * recall, precision + recall)


def f1(counts: ConfusionCounts) -> float:
    return prf1(counts)[2]


@dataclass(frozen=True)
class Task1ClassificationReport:
    """Element and subelement scores.

    Attributes:
        element_f1: F1 per valence and element.
        adaptive_macro_f1: Mean adaptive element F1.
        maladaptive_macro_f1: Mean maladaptive element F1.
        final: Mean of both valence macros.
        subelement_f1: Subelement macro F1 per element, elements without any
            gold or predicted subelement are left out.
        subelement_macro_f1: Mean of `subelement_f1`.
        subelement_pooled_macro_f1: Macro F1 over all subelement classes.
        n_posts: Number of evaluated posts.
    """

    element_f1: dict[str, dict[str, float]]
    adaptive_macro_f1: float
    maladaptive_macro_f1: float
    final: float
    subelement_f1: dict[str, float] = field(default_factory=dict)
    subelement_macro_f1: float = 0.0
    subelement_pooled_macro_f1: float = 0.0
    n_posts: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_posts": self.n_posts,
            "element_f1": self.element_f1,
            "adaptive_macro_f1": self.adaptive_macro_f1,
            "maladaptive_macro_f1": self.maladaptive_macro_f1,
            "final": self.final,
            "subelement_f1": self.subelement_f1,
            "subelement_macro_f1": self.subelement_macro_f1,
            "subelement_pooled_macro_f1": self.subelement_pooled_macro_f1,
        }


def _mean(values: Sequence[float]) -> float:
    return safe_div(sum(values), len(values))


def evaluated_posts(timelines: Sequence[Timeline]) -> list[tuple[PostKey, PostAnnotation]]:
    """Posts with gold labels, the ones classification is scored on."""
    return [
        ((timeline.timeline_id, post.post_id), post.gold_annotation)
        for timeline in timelines
        for post in timeline.posts
        if post.gold_annotation is not None and post.gold_annotation.labels
    ]


def task1_classification_report(
    predictions: Mapping[PostKey, frozenset[Label] | PostAnnotation],
    timelines: Sequence[Timeline],
    schema: LabelSchema | None = None,
) -> Task1ClassificationReport:
    """Score predicted label sets against the gold labels of `timelines`.

    Raises:
        EvaluationException: If a scored post has no prediction or a label
            isn't part of the schema.
    """
    schema = schema or default_schema()
    posts = evaluated_posts(timelines)
    require_predictions(predictions, timelines, [key for key, _ in posts])

    pairs: list[tuple[frozenset[Label], frozenset[Label]]] = []
    for key, gold in posts:
        predicted = predictions[key]
        labels = predicted.labels if isinstance(predicted, PostAnnotation) else frozenset(predicted)
        unknown = [label.abbreviation() for label in labels | gold.labels if label not in schema]
        if unknown:
            raise EvaluationException(f"Labels of {key[0]}/{key[1]} not in schema: {sorted(unknown)}")
        pairs.append((labels, gold.labels))

    def has(labels: frozenset[Label], element: str, valence: str) -> bool:
        return any(label.element == element and label.valence == valence for label in labels)

    element_f1: dict[str, dict[str, float]] = {valence: {} for valence in VALENCES}
    for valence in VALENCES:
        for element in schema.elements:
            counts = ConfusionCounts.pooled(
                (has(pred, element, valence), has(gold, element, valence)) for pred, gold in pairs
            )
            element_f1[valence][element] = f1(counts)

    adaptive = _mean(list(element_f1[ADAPTIVE].values()))
    maladaptive = _mean(list(element_f1[MALADAPTIVE].values()))

    subelement_f1: dict[str, float] = {}
    pooled: list[float] = []
    for element in schema.elements:
        classes = sorted(
            {label for pred, gold in pairs for label in pred | gold if label.element == element}
        )
        if not classes:
            continue
        scores = [
            f1(ConfusionCounts.pooled((label in pred, label in gold) for pred, gold in pairs))
            for label in classes
        ]
        subelement_f1[element] = _mean(scores)
        pooled.extend(scores)

    return Task1ClassificationReport(
        element_f1=element_f1,
        adaptive_macro_f1=adaptive,
        maladaptive_macro_f1=maladaptive,
        final=(adaptive + maladaptive) / 2,
        subelement_f1=subelement_f1,
        subelement_macro_f1=_mean(list(subelement_f1.values())),
        subelement_pooled_macro_f1=_mean(pooled),
        n_posts=len(pairs),
    )

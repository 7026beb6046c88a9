"""Switch and Escalation scores at post and timeline level.

Post level pools the counts of all posts, timeline level scores each
timeline on its own and takes the unweighted mean. Each level's macro F1 is
the mean of the Switch and Escalation F1, the final score is the mean of
both levels. Every post counts, a post without a gold change label is
treated as no change.
"""

from dataclasses import asdict, dataclass
from typing import Any, Mapping, Protocol, Sequence

from mindtrace.evaluation.classification import ConfusionCounts, f1, prf1
from mindtrace.evaluation.report import PostKey, require_predictions
from mindtrace.model.timeline import Timeline

CHANGE_TYPES = ("switch", "escalation")


class HasChange(Protocol):
    switch: bool
    escalation: bool


@dataclass(frozen=True)
class LabelScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Task2Report:
    post_level: dict[str, LabelScores]
    timeline_level: dict[str, float]
    post_macro_f1: float
    timeline_macro_f1: float
    final: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "post_level": {name: asdict(scores) for name, scores in self.post_level.items()},
            "timeline_level": dict(self.timeline_level),
            "post_macro_f1": self.post_macro_f1,
            "timeline_macro_f1": self.timeline_macro_f1,
            "final": self.final,
        }


def task2_report(predictions: Mapping[PostKey, HasChange], timelines: Sequence[Timeline]) -> Task2Report:
    """Score change predictions for every post of `timelines`.

    Raises:
        EvaluationException: Listing posts without a prediction.
    """
    require_predictions(predictions, timelines)

    def pairs(timeline: Timeline, name: str) -> list[tuple[bool, bool]]:
        return [
            (
                bool(getattr(predictions[(timeline.timeline_id, post.post_id)], name)),
                bool(post.gold_change is not None and getattr(post.gold_change, name)),
            )
            for post in timeline.posts
        ]

    post_level: dict[str, LabelScores] = {}
    timeline_level: dict[str, float] = {}
    for name in CHANGE_TYPES:
        per_timeline = [ConfusionCounts.pooled(pairs(timeline, name)) for timeline in timelines]
        total = sum(per_timeline, ConfusionCounts())
        post_level[name] = LabelScores(*prf1(total))
        timeline_level[name] = sum(f1(c) for c in per_timeline) / len(per_timeline) if per_timeline else 0.0

    post_macro = sum(post_level[name].f1 for name in CHANGE_TYPES) / len(CHANGE_TYPES)
    timeline_macro = sum(timeline_level.values()) / len(CHANGE_TYPES)
    return Task2Report(post_level, timeline_level, post_macro, timeline_macro, (post_macro + timeline_macro) / 2)

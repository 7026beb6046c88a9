import json
from pathlib import Path
from typing import Any, NamedTuple

from mindtrace.model.schema import ADAPTIVE, MALADAPTIVE, Label
from mindtrace.model.timeline import ChangeLabel, Post, PostAnnotation, Timeline, timeline_from_dict


def label(abbreviation: str) -> Label:
    """Build a label from its short form, e.g. `"C-S-:hopelessness"`."""
    head, subelement = abbreviation.split(":")
    valence = ADAPTIVE if head.endswith("+") else MALADAPTIVE
    return Label(head[:-1], valence, subelement)


def make_post(
    post_id: str,
    position: int,
    text: str = "",
    wellbeing: int | None = None,
    labels: list[str] | None = None,
    adaptive: int | None = None,
    maladaptive: int | None = None,
    switch: bool | None = None,
    escalation: bool | None = None,
) -> Post:
    annotation = None
    if labels is not None or adaptive is not None or maladaptive is not None:
        annotation = PostAnnotation(frozenset(label(a) for a in labels or []), adaptive, maladaptive)
    change = None
    if switch is not None or escalation is not None:
        change = ChangeLabel(bool(switch), bool(escalation))
    return Post(post_id, position, text, wellbeing, annotation, change)


def make_timeline(timeline_id: str, *posts: Post) -> Timeline:
    return Timeline(timeline_id, tuple(posts))


def plain_timeline(timeline_id: str, texts: list[str], wellbeing: list[int | None] | None = None) -> Timeline:
    wellbeing = wellbeing or [None] * len(texts)
    return make_timeline(
        timeline_id,
        *(make_post(f"{timeline_id}-p{i}", i, text, w) for i, (text, w) in enumerate(zip(texts, wellbeing))),
    )


def change_reply(switch: bool, escalation: bool, justification: str = "short reason") -> str:
    return json.dumps({"switch": switch, "escalation": escalation, "justification": justification})


def write_json(path: Path, data: Any) -> str:
    path.write_text(json.dumps(data, ensure_ascii=False), encoding="utf-8")
    return str(path)


def read_json(path: Path | str) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


POSITIVE_TEXT = "I laughed with friends today and cooked a proper dinner before bed."
NEGATIVE_TEXT = "I was crying all night and cancelled plans again with everyone."

POSITIVE_LABELS = [
    {"element": "A", "valence": "adaptive", "subelement": "joy", "evidence": "laughed with friends today"},
    {"element": "B-S", "valence": "adaptive", "subelement": "self-care", "evidence": "cooked a proper dinner"},
]
NEGATIVE_LABELS = [
    {"element": "A", "valence": "maladaptive", "subelement": "sadness", "evidence": "crying all night"},
    {"element": "B-O", "valence": "maladaptive", "subelement": "withdrawal", "evidence": "cancelled plans again"},
]

PHASE_PATTERNS = ["ppnnnp", "pnnnpp", "nnppnn", "ppppnn", "nnnppp", "pnpnnn"]


def annotated_timeline_dicts() -> list[dict[str, Any]]:
    """Six fully annotated timelines alternating between a coping and a distressed phase.

    A post switches when its phase differs from the previous post's and
    escalates when it stays distressed.
    """
    timelines = []
    for idx, pattern in enumerate(PHASE_PATTERNS):
        posts = []
        for pos, phase in enumerate(pattern):
            positive = phase == "p"
            prev = pattern[pos - 1] if pos else None
            posts.append(
                {
                    "post_id": f"t{idx}-p{pos}",
                    "position": pos,
                    "text": (POSITIVE_TEXT if positive else NEGATIVE_TEXT) + f" Entry {idx} {pos}.",
                    "wellbeing": 7 if positive else 3,
                    "labels": POSITIVE_LABELS if positive else NEGATIVE_LABELS,
                    "adaptive_presence": 4 if positive else 2,
                    "maladaptive_presence": 1 if positive else 4,
                    "switch": prev is not None and prev != phase,
                    "escalation": prev == "n" and phase == "n",
                }
            )
        timelines.append({"timeline_id": f"t{idx}", "posts": posts})
    return timelines


def annotated_timelines() -> list[Timeline]:
    return [timeline_from_dict(data) for data in annotated_timeline_dicts()]


class StringCompareData(NamedTuple):
    content: str
    expected: str


class WordLimitData(NamedTuple):
    text: str
    limit: int
    expected: str


class RoundData(NamedTuple):
    value: float
    expected: int


class TokenizeData(NamedTuple):
    raw: str
    tokens: tuple[str, ...]
    sentences: int


class ContingencyTable(NamedTuple):
    k11: int
    k12: int
    k21: int
    k22: int


class SummaryCase(NamedTuple):
    maladaptive: float
    adaptive: float
    delta: str
    direction: str
    expected: list[str]

"""Timeline types, JSON ingestion and context windows.

A timeline document is a UTF-8 JSON object:

```json
{"timeline_id": "t1",
 "posts": [{"post_id": "p1", "position": 0, "text": "...", "wellbeing": 4,
            "labels": [{"element": "A", "valence": "maladaptive",
                        "subelement": "sadness", "evidence": "..."}],
            "adaptive_presence": 2, "maladaptive_presence": 4,
            "switch": false, "escalation": false}]}
```

Everything except `timeline_id`, `post_id` and `text` is optional. Label
`evidence` is an extension of the base format, carrying the annotated span
that supports a label.

All types are frozen and can be shared between threads.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from mindtrace.logger import logger
from mindtrace.model.schema import Label, LabelSchema, SchemaException, default_schema

PRESENCE_MIN = 1
PRESENCE_MAX = 5
REMOVED_MARKERS = ("[removed]", "[deleted]")


class TimelineException(Exception):
    """Raised when a timeline document can't be parsed.

    Attributes:
        offset: Byte offset into the raw document where parsing failed,
            `None` when the error isn't tied to a location.
    """

    def __init__(self, message: str, offset: int | None = None) -> None:
        super().__init__(message if offset is None else f"{message} (at byte {offset})")
        self.offset = offset


class TimelineValidationException(TimelineException):
    """Raised when a well-formed document violates the timeline rules.

    Attributes:
        field: Name of the offending field.
    """

    def __init__(self, message: str, field_name: str) -> None:
        super().__init__(message)
        self.field = field_name


@dataclass(frozen=True)
class PostAnnotation:
    """Self-state annotation of a single post.

    Attributes:
        labels: Set of label triples present in the post.
        adaptive_presence: Adaptive presence rating 1-5, or `None`.
        maladaptive_presence: Maladaptive presence rating 1-5, or `None`.
        evidence: Optional `(label, span)` pairs backing the labels.
    """

    labels: frozenset[Label] = frozenset()
    adaptive_presence: int | None = None
    maladaptive_presence: int | None = None
    evidence: tuple[tuple[Label, str], ...] = ()

    def __post_init__(self) -> None:
        for name in ("adaptive_presence", "maladaptive_presence"):
            value = getattr(self, name)
            if value is not None and not PRESENCE_MIN <= value <= PRESENCE_MAX:
                raise TimelineValidationException(
                    f"{name} {value} outside [{PRESENCE_MIN},{PRESENCE_MAX}]", name
                )

    def evidence_for(self, label: Label) -> list[str]:
        return [span for lbl, span in self.evidence if lbl == label]

    def subelements(self, valence: str) -> set[str]:
        """Subelement names of all labels with the given valence."""
        return {label.subelement for label in self.labels if label.valence == valence}


@dataclass(frozen=True)
class ChangeLabel:
    """Switch / Escalation state of a post."""

    switch: bool = False
    escalation: bool = False
    justification: str | None = None


@dataclass(frozen=True)
class ChangePrediction:
    """Predicted change state for one post of a timeline.

    Attributes:
        timeline_id: Timeline the post belongs to.
        post_id: Post identifier.
        position: Post position within its timeline.
        switch: Predicted Switch flag.
        escalation: Predicted Escalation flag.
        justification: Optional free-text reasoning (LLM path only).
    """

    timeline_id: str
    post_id: str
    position: int
    switch: bool
    escalation: bool
    justification: str | None = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "timeline_id": self.timeline_id,
            "post_id": self.post_id,
            "position": self.position,
            "switch": self.switch,
            "escalation": self.escalation,
        }
        if self.justification is not None:
            data["justification"] = self.justification
        return data


@dataclass(frozen=True)
class Post:
    """A single post of a timeline."""

    post_id: str
    position: int
    text: str
    wellbeing: int | None = None
    gold_annotation: PostAnnotation | None = None
    gold_change: ChangeLabel | None = None

    @property
    def removed(self) -> bool:
        return self.text.strip() in REMOVED_MARKERS


@dataclass(frozen=True)
class Timeline:
    """An ordered sequence of posts.

    Raises:
        TimelineValidationException: On construction, if there are no posts,
            positions aren't `0..n-1` in order, or the first post is marked
            as a change.
    """

    timeline_id: str
    posts: tuple[Post, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.posts:
            raise TimelineValidationException(f"Timeline {self.timeline_id} has no posts", "posts")

        for idx, post in enumerate(self.posts):
            if post.position != idx:
                raise TimelineValidationException(
                    f"Post {post.post_id} has position {post.position}, expected {idx}",
                    "position",
                )

        first = self.posts[0].gold_change
        if first is not None and (first.switch or first.escalation):
            raise TimelineValidationException(
                f"First post of {self.timeline_id} can't be a change", "switch"
            )

    def __len__(self) -> int:
        return len(self.posts)


def context_window(timeline: Timeline, index: int, size: int) -> tuple[Post, ...]:
    """Return up to `size` posts strictly preceding `index`, oldest first.

    Args:
        timeline: The timeline to slice.
        index: Position of the current post.
        size: Maximum number of preceding posts.

    Returns:
        A tuple of `min(size, index)` posts, never including the post itself.

    Raises:
        IndexError: If `index` is outside the timeline.
        ValueError: If `size` is negative.
    """
    if not 0 <= index < len(timeline.posts):
        raise IndexError(f"Post index {index} outside timeline of {len(timeline.posts)} posts")
    if size < 0:
        raise ValueError(f"Window size must not be negative, got {size}")

    return timeline.posts[max(0, index - size) : index]


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _optional_int(data: dict[str, Any], name: str, where: str) -> int | None:
    value = data.get(name)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise TimelineValidationException(f"{where}: '{name}' must be an integer", name)
    return value


def _optional_bool(data: dict[str, Any], name: str, where: str) -> bool | None:
    value = data.get(name)
    if value is None:
        return None
    if not isinstance(value, bool):
        raise TimelineValidationException(f"{where}: '{name}' must be a boolean", name)
    return value


def _parse_labels(raw: Any, schema: LabelSchema, where: str) -> tuple[frozenset[Label], tuple]:
    if not isinstance(raw, list):
        raise TimelineValidationException(f"{where}: 'labels' must be a list", "labels")

    labels = set()
    evidence = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise TimelineValidationException(f"{where}: label entries must be objects", "labels")
        try:
            label = Label(str(entry["element"]), str(entry["valence"]), str(entry["subelement"]))
        except KeyError as e:
            raise TimelineValidationException(f"{where}: label is missing {e}", "labels") from None

        try:
            schema.validate(label)
        except SchemaException as e:
            raise TimelineValidationException(f"{where}: {e}", "labels") from None

        labels.add(label)
        span = entry.get("evidence")
        if isinstance(span, str) and span.strip():
            evidence.append((label, span))

    return frozenset(labels), tuple(sorted(evidence))


def _parse_post(data: Any, idx: int, schema: LabelSchema) -> tuple[int | None, Post]:
    where = f"posts[{idx}]"
    if not isinstance(data, dict):
        raise TimelineValidationException(f"{where} must be an object", "posts")

    post_id = data.get("post_id")
    text = data.get("text")
    if not isinstance(post_id, str) or not post_id:
        raise TimelineValidationException(f"{where}: 'post_id' must be a non-empty string", "post_id")
    if not isinstance(text, str):
        raise TimelineValidationException(f"{where}: 'text' must be a string", "text")

    position = _optional_int(data, "position", where)
    wellbeing = _optional_int(data, "wellbeing", where)

    annotation = None
    adaptive = _optional_int(data, "adaptive_presence", where)
    maladaptive = _optional_int(data, "maladaptive_presence", where)
    if "labels" in data or adaptive is not None or maladaptive is not None:
        labels, evidence = _parse_labels(data.get("labels") or [], schema, where)
        annotation = PostAnnotation(labels, adaptive, maladaptive, evidence)

    change = None
    switch = _optional_bool(data, "switch", where)
    escalation = _optional_bool(data, "escalation", where)
    if switch is not None or escalation is not None:
        change = ChangeLabel(bool(switch), bool(escalation))

    # position is fixed up by the caller once all posts are known
    return position, Post(post_id, 0, text, wellbeing, annotation, change)


def timeline_from_dict(data: Any, schema: LabelSchema | None = None) -> Timeline:
    """Build and validate a `Timeline` from decoded JSON data.

    Posts without a `position` take their array index. When every post has
    an explicit position, posts are sorted by it and the positions must then
    be exactly `0..n-1`. Mixing explicit and missing positions is rejected.

    Args:
        data: Decoded JSON object.
        schema: Schema labels are validated against, the bundled default if `None`.

    Returns:
        The validated `Timeline`.

    Raises:
        TimelineValidationException: On any rule violation.
    """
    schema = schema or default_schema()

    if not isinstance(data, dict):
        raise TimelineValidationException("Timeline document must be an object", "timeline_id")

    timeline_id = data.get("timeline_id")
    if not isinstance(timeline_id, str) or not timeline_id:
        raise TimelineValidationException("'timeline_id' must be a non-empty string", "timeline_id")

    raw_posts = data.get("posts")
    if not isinstance(raw_posts, list) or not raw_posts:
        raise TimelineValidationException(f"Timeline {timeline_id} needs a non-empty 'posts' list", "posts")

    parsed = [_parse_post(p, idx, schema) for idx, p in enumerate(raw_posts)]

    seen: set[str] = set()
    for _, post in parsed:
        if post.post_id in seen:
            raise TimelineValidationException(
                f"Duplicate post_id '{post.post_id}' in timeline {timeline_id}", "post_id"
            )
        seen.add(post.post_id)

    explicit = [position for position, _ in parsed if position is not None]
    if explicit and len(explicit) != len(parsed):
        raise TimelineValidationException(
            f"Timeline {timeline_id} mixes posts with and without 'position'", "position"
        )

    if explicit:
        if sorted(explicit) != list(range(len(parsed))):
            raise TimelineValidationException(
                f"Positions of timeline {timeline_id} must be 0..{len(parsed) - 1}", "position"
            )
        if explicit != sorted(explicit):
            logger.debug(f"Re-sorting posts of timeline {timeline_id} by position")
        parsed.sort(key=lambda item: item[0])

    posts = tuple(
        Post(post.post_id, idx, post.text, post.wellbeing, post.gold_annotation, post.gold_change)
        for idx, (_, post) in enumerate(parsed)
    )
    return Timeline(timeline_id, posts)


def _decode(raw: bytes) -> Any:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TimelineException(f"Invalid UTF-8: {e.reason}", e.start) from e

    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise TimelineException(f"Malformed JSON: {e.msg}", _byte_offset(text, e.pos)) from e


def parse_timeline(raw: bytes, schema: LabelSchema | None = None) -> Timeline:
    """Parse and validate a single timeline document.

    Args:
        raw: UTF-8 encoded JSON document.
        schema: Schema labels are validated against, the bundled default if `None`.

    Returns:
        The validated `Timeline`.

    Raises:
        TimelineException: If the document isn't valid UTF-8 JSON, carrying
            the byte offset of the failure.
        TimelineValidationException: If the content breaks a timeline rule.
    """
    return timeline_from_dict(_decode(raw), schema)


def parse_timelines(raw: bytes, schema: LabelSchema | None = None) -> list[Timeline]:
    """Parse a document holding either one timeline object or an array of them.

    Raises:
        TimelineException: See `parse_timeline()`.
        TimelineValidationException: Also raised for duplicate timeline ids.
    """
    data = _decode(raw)
    items = data if isinstance(data, list) else [data]
    timelines = [timeline_from_dict(item, schema) for item in items]

    ids = [t.timeline_id for t in timelines]
    if len(set(ids)) != len(ids):
        raise TimelineValidationException("Duplicate timeline_id in document", "timeline_id")

    return timelines


def load_timelines(path: str | Path, schema: LabelSchema | None = None) -> list[Timeline]:
    """Read and parse a timeline file, see `parse_timelines()`."""
    timelines = parse_timelines(Path(path).read_bytes(), schema)
    logger.info(f"Read {len(timelines)} timelines from {path}")
    return timelines


def post_to_dict(post: Post) -> dict[str, Any]:
    data: dict[str, Any] = {
        "post_id": post.post_id,
        "position": post.position,
        "text": post.text,
    }
    if post.wellbeing is not None:
        data["wellbeing"] = post.wellbeing

    annotation = post.gold_annotation
    if annotation is not None:
        # one entry per evidence span, a label may repeat
        labels = []
        for label in sorted(annotation.labels):
            spans = annotation.evidence_for(label)
            if not spans:
                labels.append(label.to_dict())
            for span in spans:
                labels.append({**label.to_dict(), "evidence": span})
        data["labels"] = labels
        if annotation.adaptive_presence is not None:
            data["adaptive_presence"] = annotation.adaptive_presence
        if annotation.maladaptive_presence is not None:
            data["maladaptive_presence"] = annotation.maladaptive_presence

    if post.gold_change is not None:
        data["switch"] = post.gold_change.switch
        data["escalation"] = post.gold_change.escalation

    return data


def timeline_to_dict(timeline: Timeline) -> dict[str, Any]:
    return {
        "timeline_id": timeline.timeline_id,
        "posts": [post_to_dict(post) for post in timeline.posts],
    }


def serialize_timeline(timeline: Timeline) -> bytes:
    """Serialize a timeline back into the UTF-8 JSON document format."""
    return json.dumps(timeline_to_dict(timeline), ensure_ascii=False, indent=2).encode("utf-8")


def serialize_timelines(timelines: Sequence[Timeline]) -> bytes:
    return json.dumps(
        [timeline_to_dict(t) for t in timelines], ensure_ascii=False, indent=2
    ).encode("utf-8")

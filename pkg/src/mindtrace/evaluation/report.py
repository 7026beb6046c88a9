"""Shared evaluation plumbing: errors, prediction records and report rendering.

Prediction files are JSON, either a bare list of records or an object with
a `records` list (and usually a provenance `header`). A record always has
`timeline_id` and `post_id` for post-level tasks, or `timeline_id` and a
summary text for sequence-level tasks.
"""

import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from mindtrace.logger import logger
from mindtrace.model.schema import Label, LabelSchema, SchemaException, default_schema
from mindtrace.model.timeline import (
    ChangeLabel,
    PostAnnotation,
    Timeline,
    TimelineValidationException,
)

PostKey = tuple[str, str]
"""`(timeline_id, post_id)`."""

ZERO_DIVISION_NOTE = "precision, recall and F1 with a zero denominator are 0"


class EvaluationException(Exception):
    """Raised for mismatched, missing or degenerate evaluation inputs."""


def read_records(path: str | Path) -> list[dict[str, Any]]:
    """Load the records of a prediction or output file.

    Raises:
        EvaluationException: If the file isn't valid JSON or has no record list.
    """
    try:
        data = json.loads(Path(path).read_bytes())
    except json.JSONDecodeError as e:
        raise EvaluationException(f"{path} is not valid JSON: {e}") from e

    records = data.get("records") if isinstance(data, dict) else data
    if not isinstance(records, list) or not all(isinstance(r, dict) for r in records):
        raise EvaluationException(f"{path} has no list of record objects")
    logger.debug(f"Read {len(records)} records from {path}")
    return records


def _key(record: Mapping[str, Any]) -> PostKey:
    timeline_id, post_id = record.get("timeline_id"), record.get("post_id")
    if not isinstance(timeline_id, str) or not isinstance(post_id, str):
        raise EvaluationException(f"Record without string timeline_id/post_id: {record}")
    return timeline_id, post_id


def _unique(pairs: Iterable[tuple[PostKey, Any]]) -> dict[PostKey, Any]:
    result: dict[PostKey, Any] = {}
    for key, value in pairs:
        if key in result:
            raise EvaluationException(f"Duplicate prediction for {key[0]}/{key[1]}")
        result[key] = value
    return result


def annotation_predictions(
    records: Sequence[Mapping[str, Any]],
    schema: LabelSchema | None = None,
) -> dict[PostKey, PostAnnotation]:
    """Per-post label sets and presence ratings from prediction records.

    Raises:
        EvaluationException: On duplicates, malformed records or labels outside the schema.
    """
    schema = schema or default_schema()

    def parse(record: Mapping[str, Any]) -> tuple[PostKey, PostAnnotation]:
        key = _key(record)
        try:
            labels = frozenset(
                schema.validate(Label(item["element"], item["valence"], item["subelement"]))
                for item in record.get("labels", [])
            )
            annotation = PostAnnotation(
                labels,
                record.get("adaptive_presence"),
                record.get("maladaptive_presence"),
            )
        except (KeyError, TypeError) as e:
            raise EvaluationException(f"Malformed labels for {key[0]}/{key[1]}: {e}") from e
        except (SchemaException, TimelineValidationException) as e:
            raise EvaluationException(f"Invalid prediction for {key[0]}/{key[1]}: {e}") from e
        return key, annotation

    return _unique(parse(record) for record in records)


def change_predictions(records: Sequence[Mapping[str, Any]]) -> dict[PostKey, ChangeLabel]:
    def parse(record: Mapping[str, Any]) -> tuple[PostKey, ChangeLabel]:
        key = _key(record)
        switch, escalation = record.get("switch"), record.get("escalation")
        if not isinstance(switch, bool) or not isinstance(escalation, bool):
            raise EvaluationException(f"Prediction for {key[0]}/{key[1]} needs boolean switch/escalation")
        return key, ChangeLabel(switch, escalation)

    return _unique(parse(record) for record in records)


def summary_texts(records: Sequence[Mapping[str, Any]], field: str = "summary") -> dict[str, str]:
    """Summary text per timeline id, read from `field` (template outputs use `"text"`)."""
    texts: dict[str, str] = {}
    for record in records:
        timeline_id = record.get("timeline_id")
        text = record.get(field, record.get("text"))
        if not isinstance(timeline_id, str) or not isinstance(text, str):
            raise EvaluationException(f"Summary record needs string timeline_id and {field}: {record}")
        if timeline_id in texts:
            raise EvaluationException(f"Duplicate summary for {timeline_id}")
        texts[timeline_id] = text
    return texts


def require_predictions(
    predictions: Mapping[PostKey, Any],
    timelines: Sequence[Timeline],
    keys: Iterable[PostKey] | None = None,
) -> None:
    """Check every evaluated post has a prediction.

    Raises:
        EvaluationException: Listing the post ids without one.
    """
    if keys is None:
        keys = [(t.timeline_id, p.post_id) for t in timelines for p in t.posts]
    missing = [f"{tid}/{pid}" for tid, pid in keys if (tid, pid) not in predictions]
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise EvaluationException(f"Missing predictions for {len(missing)} posts: {shown}")


def _flatten(data: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(data, Mapping):
        rows = []
        for key, value in data.items():
            rows.extend(_flatten(value, f"{prefix}.{key}" if prefix else str(key)))
        return rows
    return [(prefix, data)]


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def render_report_text(report: Mapping[str, Any], header: Mapping[str, Any] | None = None) -> str:
    """Render a (nested) report as two aligned columns, header block first."""
    lines = []
    if header:
        for key, value in _flatten(header):
            lines.append(f"# {key}: {_format_value(value)}")
        lines.append(f"# note: {ZERO_DIVISION_NOTE}")
        lines.append("")

    rows = [(key, _format_value(value)) for key, value in _flatten(report)]
    width = max((len(key) for key, _ in rows), default=0)
    lines.extend(f"{key.ljust(width)}  {value}" for key, value in rows)
    return "\n".join(lines) + "\n"

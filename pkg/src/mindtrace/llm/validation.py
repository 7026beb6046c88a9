"""Structured-output extraction and validation with retries.

Model answers are searched for the first JSON object, prose around it is
ignored. The object must contain every expected field with the expected
type, extra fields are allowed. Malformed answers trigger a retry callback
until the retries are used up.
"""

import json
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from mindtrace.llm.client import InferenceClient
from mindtrace.logger import logger

FORMAT_REMINDER = "Reminder: answer with a single JSON object in exactly the required format and nothing else."

FieldTypes = Mapping[str, type | tuple[type, ...]]
Check = Callable[[dict[str, Any]], str | None]

_decoder = json.JSONDecoder()


class ValidationExhaustedException(Exception):
    """Raised when no attempt produced a valid structured answer.

    Attributes:
        attempts: Every raw answer received, in order.
    """

    def __init__(self, message: str, attempts: list[str]) -> None:
        super().__init__(f"{message} after {len(attempts)} attempts")
        self.attempts = attempts


@dataclass(frozen=True)
class ValidatedResponse:
    data: dict[str, Any]
    attempts: tuple[str, ...]

    @property
    def retries(self) -> int:
        return len(self.attempts) - 1


@dataclass(frozen=True)
class ChangeResponse:
    switch: bool
    escalation: bool
    justification: str

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ChangeResponse":
        return cls(data["switch"], data["escalation"], data["justification"])

    def to_dict(self) -> dict[str, Any]:
        return {"switch": self.switch, "escalation": self.escalation, "justification": self.justification}


CHANGE_FIELDS: FieldTypes = {"switch": bool, "escalation": bool, "justification": str}


def extract_first_json(raw: str) -> dict[str, Any] | None:
    """Return the first JSON object embedded in `raw`, or `None`."""
    idx = raw.find("{")
    while idx != -1:
        try:
            value, _ = _decoder.raw_decode(raw, idx)
        except json.JSONDecodeError:
            pass
        else:
            if isinstance(value, dict):
                return value
        idx = raw.find("{", idx + 1)
    return None


def _type_ok(value: Any, expected: type | tuple[type, ...]) -> bool:
    expected_types = expected if isinstance(expected, tuple) else (expected,)
    # bool is an int subclass, but never a valid int or float here
    if isinstance(value, bool) and bool not in expected_types:
        return False
    return isinstance(value, expected_types)


def validate_fields(data: Mapping[str, Any], fields: FieldTypes) -> str | None:
    """Return a description of the first problem in `data`, `None` if it's valid."""
    for name, expected in fields.items():
        if name not in data:
            return f"missing field '{name}'"
        if not _type_ok(data[name], expected):
            return f"field '{name}' has type {type(data[name]).__name__}"
    return None


def parse_validated(
    raw: str,
    fields: FieldTypes,
    retry_fn: Callable[[], str] | None = None,
    max_retries: int = 3,
    check: Check | None = None,
) -> ValidatedResponse:
    """Parse a structured answer, retrying while it's malformed.

    Args:
        raw: The first raw answer.
        fields: Expected field names and types.
        retry_fn: Called to obtain a fresh raw answer, at most `max_retries` times.
        max_retries: Number of re-asks after the first reply.
        check: Optional extra validation returning a problem description or `None`.

    Returns:
        The first valid object together with every raw attempt.

    Raises:
        ValidationExhaustedException: If all `1 + max_retries` attempts are malformed.
    """
    if max_retries < 0:
        raise ValueError(f"max_retries must not be negative, got {max_retries}")

    attempts = [raw]
    while True:
        data = extract_first_json(attempts[-1])
        problem = "no JSON object found" if data is None else validate_fields(data, fields)
        if problem is None and check is not None:
            problem = check(data)
        if problem is None:
            if len(attempts) > 1:
                logger.info(f"Valid answer after {len(attempts) - 1} retries")
            return ValidatedResponse(data, tuple(attempts))

        retries_left = max_retries - (len(attempts) - 1)
        logger.warning(f"Malformed answer ({problem}), {retries_left} retries left")
        if retries_left <= 0 or retry_fn is None:
            raise ValidationExhaustedException(f"No valid answer ({problem})", attempts)
        attempts.append(retry_fn())


def with_reminder(prompt: str) -> str:
    return f"{prompt}\n\n{FORMAT_REMINDER}"


def request_validated(
    client: InferenceClient,
    prompt: str,
    fields: FieldTypes,
    system: str | None = None,
    check: Check | None = None,
) -> ValidatedResponse:
    """Send `prompt` and validate the answer, retrying with a format reminder appended.

    Args:
        client: An `InferenceClient`, its config's `max_retries` sets the retry limit.
        prompt: The prompt text.
        fields: Expected field names and types.
        system: Optional system message.
        check: Optional extra validation.
    """
    first = client.complete(prompt, system)
    return parse_validated(
        first,
        fields,
        retry_fn=lambda: client.complete(with_reminder(prompt), system),
        max_retries=client.config.max_retries,
        check=check,
    )

"""Utility helpers for mindtrace processing.

This module contains small, focused helpers that are reused by the feature,
summarizer, miner and evaluation modules. Functions are side-effect free
except for logging.

Provided utilities:
- Word helpers: `split_words`, `word_count`, `truncate_words`.
- Numeric helpers: `round_half_away`, `clamp`, `safe_div`.
- Set helpers: `jaccard`.
- Package data: `read_data_text`, `load_word_list`.
- Provenance: `canonical_json`, `sha256_hex`.
- Concurrency: `map_jobs`.
"""

import contextvars
import hashlib
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from typing import Any, Callable, Iterable, Sequence, TypeVar

from mindtrace.logger import logger

RE_SENTENCE_END = re.compile(r"[.!?]+")


def split_words(text: str) -> list[str]:
    """Split `text` on whitespace runs.

    Args:
        text: Any string, possibly empty.

    Returns:
        The list of whitespace-separated words, empty for blank input.
    """
    return text.split()


def word_count(text: str) -> int:
    """Return the number of whitespace-separated words in `text`."""
    return len(split_words(text))


def truncate_words(text: str, limit: int) -> str:
    """Cut `text` down to at most `limit` whitespace words.

    The cut happens at the last sentence end (`.`, `!`, `?`) that still fits
    within the limit. When no sentence end fits, the first `limit` words are
    kept as they are.

    Args:
        text: Text to shorten.
        limit: Maximum number of words to keep.

    Returns:
        `text` unchanged when it's short enough, a shortened copy otherwise.
    """
    words = split_words(text)
    if len(words) <= limit:
        return text

    head = words[:limit]
    for idx in range(len(head) - 1, -1, -1):
        if RE_SENTENCE_END.search(head[idx][-1:]):
            return " ".join(head[: idx + 1])

    logger.debug(f"No sentence boundary within {limit} words, hard cut")
    return " ".join(head)


def round_half_away(value: float) -> int:
    """Round to the nearest integer, halves away from zero (2.5 -> 3, -2.5 -> -3)."""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def clamp(value: float, low: float, high: float) -> float:
    """Limit `value` to the closed range `[low, high]`."""
    return max(low, min(high, value))


def safe_div(numerator: float, denominator: float) -> float:
    """Divide, returning 0.0 for a zero denominator."""
    if denominator == 0:
        return 0.0
    return numerator / denominator


def jaccard(first: Iterable[str], second: Iterable[str]) -> float:
    """Jaccard overlap of two token collections, 0.0 when both are empty."""
    a, b = set(first), set(second)
    return safe_div(len(a & b), len(a | b))


def read_data_text(name: str) -> str:
    """Read a text file shipped in the `mindtrace.data` package.

    Args:
        name: File name relative to the data package, e.g. `"stopwords.txt"`.

    Returns:
        The file content decoded as UTF-8.
    """
    return resources.files("mindtrace.data").joinpath(name).read_text(encoding="utf-8")


def load_word_list(name: str) -> frozenset[str]:
    """Load a bundled word list, one lowercase word per line, `#` comments allowed."""
    words = set()
    for line in read_data_text(name).splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    logger.debug(f"Loaded {len(words)} words from {name}")
    return frozenset(words)


def canonical_json(data: Any) -> str:
    """Serialize `data` to JSON with sorted keys and no insignificant whitespace."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(text: str) -> str:
    """Hex SHA-256 digest of `text` encoded as UTF-8."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


T = TypeVar("T")
R = TypeVar("R")


def map_jobs(fn: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> list[R]:
    """Apply `fn` to every item, on up to `jobs` worker threads.

    Results keep the order of `items`. Each task runs in a copy of the
    caller's context, so context variables like the active templater carry
    over into the workers. The first exception raised by `fn` propagates.
    """
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(contextvars.copy_context().run, fn, item) for item in items]
        return [future.result() for future in futures]

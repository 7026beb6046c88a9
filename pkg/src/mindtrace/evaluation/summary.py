"""Summary scores: ROUGE-L recall and rank aggregation over several metrics."""

import csv
import io
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats

from mindtrace.evaluation.report import EvaluationException
from mindtrace.util import read_data_text, split_words

TASK31_RANKINGS = "fixtures/task31_rankings.csv"


def lcs_length(first: Sequence[str], second: Sequence[str]) -> int:
    """Length of the longest common subsequence of two token sequences."""
    if not first or not second:
        return 0
    previous = [0] * (len(second) + 1)
    for token in first:
        current = [0]
        for j, other in enumerate(second, 1):
            current.append(previous[j - 1] + 1 if token == other else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l_recall(candidate: str, reference: str) -> float:
    """LCS of the whitespace tokens of both texts divided by the reference length.

    Raises:
        EvaluationException: If the reference has no tokens.
    """
    reference_tokens = split_words(reference)
    if not reference_tokens:
        raise EvaluationException("Reference summary is empty")
    return lcs_length(split_words(candidate), reference_tokens) / len(reference_tokens)


@dataclass(frozen=True)
class RankedSystem:
    name: str
    metric_ranks: tuple[int, ...]
    average_rank: float
    final_rank: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "metric_ranks": list(self.metric_ranks),
            "average_rank": self.average_rank,
            "final_rank": self.final_rank,
        }


def competition_ranks(values: Sequence[float], higher_is_better: bool = True) -> list[int]:
    """Rank 1 for the best value, ties share the lowest rank of their group."""
    array = np.asarray(values, dtype=float)
    return [int(r) for r in stats.rankdata(-array if higher_is_better else array, method="min")]


def rank_average(
    scores: Mapping[str, Sequence[float]],
    higher_is_better: Sequence[bool],
) -> list[RankedSystem]:
    """Rank systems per metric, average the ranks and rank the averages.

    Args:
        scores: Metric values per system name, one value per metric.
        higher_is_better: Direction of every metric.

    Returns:
        Systems in final rank order, ties by name.

    Raises:
        EvaluationException: If a system has the wrong number of scores.
    """
    names = list(scores)
    for name in names:
        if len(scores[name]) != len(higher_is_better):
            raise EvaluationException(
                f"System {name} has {len(scores[name])} scores for {len(higher_is_better)} metrics"
            )
    if not names:
        return []

    columns = [
        competition_ranks([scores[name][m] for name in names], better)
        for m, better in enumerate(higher_is_better)
    ]
    per_system = [tuple(column[i] for column in columns) for i in range(len(names))]
    averages = [sum(ranks) / len(ranks) for ranks in per_system]
    finals = competition_ranks(averages, higher_is_better=False)

    systems = [
        RankedSystem(name, ranks, average, final)
        for name, ranks, average, final in zip(names, per_system, averages, finals)
    ]
    return sorted(systems, key=lambda s: (s.final_rank, s.name))


@dataclass(frozen=True)
class Task31Report:
    per_sequence: dict[str, float]
    mean_rouge_l_recall: float

    def to_dict(self) -> dict[str, Any]:
        return {"per_sequence": dict(self.per_sequence), "mean_rouge_l_recall": self.mean_rouge_l_recall}


def task31_report(candidates: Mapping[str, str], references: Mapping[str, str]) -> Task31Report:
    """ROUGE-L recall of every reference summary and their mean.

    Raises:
        EvaluationException: If a reference has no candidate or there are no references.
    """
    if not references:
        raise EvaluationException("No reference summaries")
    missing = sorted(set(references) - set(candidates))
    if missing:
        raise EvaluationException(f"Missing summaries for {', '.join(missing)}")

    per_sequence = {tid: rouge_l_recall(candidates[tid], references[tid]) for tid in sorted(references)}
    return Task31Report(per_sequence, sum(per_sequence.values()) / len(per_sequence))


@dataclass(frozen=True)
class Task31Row:
    rank: int
    team: str
    submission_id: str
    scores: tuple[float, float, float, float]
    ranks: tuple[int, int, int, int]
    average_rank: float


TASK31_METRICS = ("cs", "ct", "rouge_l", "bert")
TASK31_HIGHER_IS_BETTER = (True, False, True, True)


def load_task31_rankings(text: str | None = None) -> list[Task31Row]:
    """Rows of the bundled official summary ranking table, or of `text` in the same CSV layout."""
    rows = []
    for row in csv.DictReader(io.StringIO(text if text is not None else read_data_text(TASK31_RANKINGS))):
        rows.append(
            Task31Row(
                rank=int(row["rank"]),
                team=row["team"],
                submission_id=row["submission_id"],
                scores=tuple(float(row[m]) for m in TASK31_METRICS),
                ranks=tuple(int(row[f"{m}_rank"]) for m in TASK31_METRICS),
                average_rank=float(row["avg_rank"]),
            )
        )
    return rows

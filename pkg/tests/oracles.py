"""Slow, obviously correct reference implementations the metrics are checked against."""

import math
from functools import lru_cache
from typing import Sequence


def g2(k11: int, k12: int, k21: int, k22: int) -> float:
    table = [[k11, k12], [k21, k22]]
    total = k11 + k12 + k21 + k22
    rows = [k11 + k12, k21 + k22]
    cols = [k11 + k21, k12 + k22]
    value = 0.0
    for i in range(2):
        for j in range(2):
            k = table[i][j]
            if k > 0:
                value += k * math.log(k * total / (rows[i] * cols[j]))
    return 2.0 * value


def prf1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def qwk(pred: Sequence[int], gold: Sequence[int], categories: Sequence[int] = (1, 2, 3, 4, 5)) -> float:
    k = len(categories)
    index = {c: i for i, c in enumerate(categories)}
    n = len(gold)

    observed = [[0.0] * k for _ in range(k)]
    for g, p in zip(gold, pred):
        observed[index[g]][index[p]] += 1

    gold_hist = [sum(row) for row in observed]
    pred_hist = [sum(observed[i][j] for i in range(k)) for j in range(k)]

    numerator = denominator = 0.0
    for i in range(k):
        for j in range(k):
            weight = (i - j) ** 2 / (k - 1) ** 2
            numerator += weight * observed[i][j]
            denominator += weight * gold_hist[i] * pred_hist[j] / n
    return 1.0 - numerator / denominator


def average_ranks(values: Sequence[float]) -> list[float]:
    ranks = [0.0] * len(values)
    order = sorted(range(len(values)), key=lambda i: values[i])
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for idx in order[i : j + 1]:
            ranks[idx] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sx = math.sqrt(sum((x - mx) ** 2 for x in xs))
    sy = math.sqrt(sum((y - my) ** 2 for y in ys))
    return cov / (sx * sy)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    return pearson(average_ranks(xs), average_ranks(ys))


def lcs(first: Sequence[str], second: Sequence[str]) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(first) or j == len(second):
            return 0
        if first[i] == second[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def change_f1(pairs: Sequence[tuple[bool, bool]]) -> float:
    """F1 of `(predicted, gold)` pairs, counted one by one."""
    tp = fp = fn = 0
    for predicted, gold in pairs:
        if predicted and gold:
            tp += 1
        elif predicted:
            fp += 1
        elif gold:
            fn += 1
    return prf1(tp, fp, fn)[2]

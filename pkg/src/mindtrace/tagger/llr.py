"""Log-likelihood ratio (G²) for 2x2 contingency tables.

The table for an n-gram and a label corpus is laid out as

|              | label corpus | other labels |
|--------------|--------------|--------------|
| n-gram       | k11          | k12          |
| other n-gram | k21          | k22          |
"""

import numpy as np
from scipy.special import xlogy


class TaggerException(Exception):
    """Raised for invalid tagger inputs or configuration."""


def expected_counts(table: np.ndarray) -> np.ndarray:
    """Expected cell counts of a contingency table under independence."""
    total = table.sum()
    return np.outer(table.sum(axis=1), table.sum(axis=0)) / total


def llr_score(k11: int, k12: int, k21: int, k22: int) -> float:
    """Return Dunning's G² statistic of a 2x2 contingency table.

    `G² = 2 * sum(k_ij * ln(k_ij / E_ij))` with `0 * ln(0) = 0`, where `E_ij`
    are the expected counts under independence.

    Args:
        k11: N-gram count in the label corpus.
        k12: N-gram count in the rest.
        k21: Other n-gram count in the label corpus.
        k22: Other n-gram count in the rest.

    Returns:
        The non-negative G² value, 0 under exact independence.

    Raises:
        TaggerException: If a count is negative or all counts are zero.
    """
    table = np.array([[k11, k12], [k21, k22]], dtype=float)
    if np.any(table < 0):
        raise TaggerException(f"Contingency counts must not be negative: {table.tolist()}")
    if table.sum() == 0:
        raise TaggerException("Contingency table is all zeros")

    expected = expected_counts(table)
    # zero cells have zero expectation only when their whole row or column is
    # empty, xlogy() maps those to 0 without evaluating the ratio
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(table > 0, table / expected, 1.0)
    g2 = 2.0 * float(xlogy(table, ratio).sum())
    return max(g2, 0.0)


def positively_associated(k11: int, k12: int, k21: int, k22: int) -> bool:
    """True if the n-gram is at least as frequent in the label corpus as in the rest."""
    return k11 * k22 >= k12 * k21

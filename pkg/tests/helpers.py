"""Shared test oracles and statistical utilities."""

from __future__ import annotations

import numpy as np
from scipy.stats import chi2_contingency, chisquare


def enumerate_distance_law(n: int, k: int, r: float) -> np.ndarray:
    """Exhaustive child-distance law over all 2^n flip masks.

    Each mask is weighted p^(#flips) (1-p)^(n-#flips); the parent is the
    canonical point with its first k bits set.
    """
    p = r / n
    parent = (1 << k) - 1
    law = np.zeros(n + 1)
    for mask in range(1 << n):
        flips = mask.bit_count()
        weight = p**flips * (1.0 - p) ** (n - flips)
        law[(parent ^ mask).bit_count()] += weight
    return law


def pool_adjacent(counts: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Merge adjacent cells until every pooled cell has enough expectation."""
    pooled_counts: list[float] = []
    pooled_expected: list[float] = []
    acc_c = acc_e = 0.0
    for c, e in zip(counts, expected):
        acc_c += c
        acc_e += e
        if acc_e >= min_expected:
            pooled_counts.append(acc_c)
            pooled_expected.append(acc_e)
            acc_c = acc_e = 0.0
    if acc_e > 0:
        if pooled_expected:
            pooled_counts[-1] += acc_c
            pooled_expected[-1] += acc_e
        else:
            pooled_counts.append(acc_c)
            pooled_expected.append(acc_e)
    return np.array(pooled_counts), np.array(pooled_expected)


def gof_pvalue(counts: np.ndarray, probs: np.ndarray, min_expected: float = 5.0) -> float:
    """Chi-square goodness-of-fit p-value with adjacent-cell pooling."""
    total = counts.sum()
    pooled_c, pooled_e = pool_adjacent(counts, probs * total, min_expected)
    pooled_e *= pooled_c.sum() / pooled_e.sum()
    return float(chisquare(pooled_c, pooled_e).pvalue)


def two_sample_chisquare_pvalue(
    counts_a: np.ndarray, counts_b: np.ndarray, min_total: float = 10.0
) -> float:
    """Two-sample chi-square homogeneity p-value with adjacent-cell pooling."""
    combined = counts_a + counts_b
    pooled_a: list[float] = []
    pooled_b: list[float] = []
    acc_a = acc_b = acc = 0.0
    for a, b, c in zip(counts_a, counts_b, combined):
        acc_a += a
        acc_b += b
        acc += c
        if acc >= min_total:
            pooled_a.append(acc_a)
            pooled_b.append(acc_b)
            acc_a = acc_b = acc = 0.0
    if acc > 0 and pooled_a:
        pooled_a[-1] += acc_a
        pooled_b[-1] += acc_b
    elif acc > 0:
        pooled_a.append(acc_a)
        pooled_b.append(acc_b)
    table = np.array([pooled_a, pooled_b])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    return float(chi2_contingency(table).pvalue)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())

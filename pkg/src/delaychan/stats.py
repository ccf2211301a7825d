"""Small statistics helpers shared by the harness and the test suite."""

from __future__ import annotations

import math
from collections import Counter
from typing import NamedTuple

from scipy.stats import chi2


class WilsonInterval(NamedTuple):
    low: float
    high: float


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> WilsonInterval:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return WilsonInterval(max(0.0, center - half), min(1.0, center + half))


class ChiSquareResult(NamedTuple):
    statistic: float
    dof: int
    p_value: float
    n_cells: int


def two_sample_chisquare(outcomes_a, outcomes_b, min_expected: float = 5.0) -> ChiSquareResult:
    """Homogeneity chi-square between two samples of hashable outcomes.

    Cells whose pooled expected count falls below ``min_expected`` are
    merged into one residual cell, the standard fix for sparse tables.
    """
    ca, cb = Counter(outcomes_a), Counter(outcomes_b)
    na, nb = sum(ca.values()), sum(cb.values())
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    total = na + nb
    keys = sorted(set(ca) | set(cb), key=repr)
    cells = []
    rest_a = rest_b = 0
    for key in keys:
        pooled = ca[key] + cb[key]
        if pooled * na / total >= min_expected and pooled * nb / total >= min_expected:
            cells.append((ca[key], cb[key]))
        else:
            rest_a += ca[key]
            rest_b += cb[key]
    if rest_a or rest_b:
        cells.append((rest_a, rest_b))
    if len(cells) < 2:
        # No resolution left after pooling: the samples are indistinguishable.
        return ChiSquareResult(0.0, 0, 1.0, len(cells))
    stat = 0.0
    for oa, ob in cells:
        pooled = oa + ob
        ea = pooled * na / total
        eb = pooled * nb / total
        stat += (oa - ea) ** 2 / ea + (ob - eb) ** 2 / eb
    dof = len(cells) - 1
    return ChiSquareResult(stat, dof, float(chi2.sf(stat, dof)), len(cells))

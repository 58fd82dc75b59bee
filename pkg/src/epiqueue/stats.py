"""Empirical distributions and the goodness-of-fit machinery behind every check."""
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import special

MIN_EXPECTED = 5.0


class InsufficientData(ValueError):
    """Too few samples or bins for a chi-square test."""


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Counts of integer outcomes."""

    support_start: int
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [k for k in self.counts if k < self.support_start]
        if bad:
            raise ValueError(f"values {sorted(bad)[:5]} lie below support_start={self.support_start}")

    @classmethod
    def from_samples(cls, samples, support_start=None):
        values = np.asarray(samples, dtype=np.int64)
        if support_start is None:
            support_start = int(values.min()) if values.size else 0
        ks, cs = np.unique(values, return_counts=True)
        return cls(int(support_start), {int(k): int(c) for k, c in zip(ks, cs)})

    @property
    def total(self):
        return sum(self.counts.values())

    @property
    def max_value(self):
        return max(self.counts) if self.counts else self.support_start

    def count(self, k):
        return self.counts.get(k, 0)

    def mean(self):
        n = self.total
        return sum(k * c for k, c in self.counts.items()) / n

    def frequencies(self, start, stop):
        """Relative frequencies for ``start .. stop`` inclusive."""
        n = self.total
        return np.array([self.count(k) / n for k in range(start, stop + 1)])

    def merged(self, other):
        c = Counter(self.counts)
        c.update(other.counts)
        return EmpiricalDistribution(min(self.support_start, other.support_start), dict(c))

    def to_dict(self):
        return {"support_start": self.support_start, "total": self.total,
                "counts": {str(k): self.counts[k] for k in sorted(self.counts)}}


@dataclass(frozen=True)
class GofBin:
    low: int
    high: int | None  # None means open-ended
    observed: object
    expected: object

    def to_dict(self):
        return {"low": self.low, "high": self.high,
                "observed": _jsonable(self.observed), "expected": _jsonable(self.expected)}


@dataclass(frozen=True)
class GofReport:
    statistic: float
    degrees_of_freedom: int
    p_value: float
    bins: list
    kind: str = "gof"

    def passes(self, alpha=0.001):
        return self.p_value > alpha

    def to_dict(self):
        return {"kind": self.kind, "statistic": self.statistic,
                "degrees_of_freedom": self.degrees_of_freedom, "p_value": self.p_value,
                "bins": [b.to_dict() for b in self.bins]}


def _jsonable(x):
    if isinstance(x, tuple):
        return [float(v) for v in x]
    return float(x)


def chi2_sf(x, df):
    """Chi-square survival function via the regularised upper incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def geometric_mle(emp):
    """``1 / mean``: maximum-likelihood geometric parameter on ``{1, 2, ...}``."""
    if emp.total < 1:
        raise InsufficientData("empty sample")
    if emp.support_start < 1:
        raise ValueError("geometric_mle expects support starting at 1")
    return 1.0 / emp.mean()


def _merge_bins(cells, key):
    """Greedy merge so that ``key(cell) >= MIN_EXPECTED`` for every bin.

    ``cells`` is a list of ``[low, high, obs..., exp...]`` lists ordered by
    value. Undersized bins are folded into their left neighbour, scanning from
    the right; a leftmost undersized bin is folded into its right neighbour.
    """
    merged = []
    acc = None
    for cell in reversed(cells):
        if acc is None:
            acc = list(cell)
        else:
            acc = _combine(cell, acc)
        if key(acc) >= MIN_EXPECTED:
            merged.append(acc)
            acc = None
    merged.reverse()
    if acc is not None:
        if merged:
            merged[0] = _combine(acc, merged[0])
        else:
            merged = [acc]
    return merged


def _combine(left, right):
    out = [left[0], right[1]]
    out.extend(l + r for l, r in zip(left[2:], right[2:]))
    return out


def chi_square_gof(emp, pmf):
    """Pearson goodness of fit of ``emp`` against a fully specified ``pmf``.

    Bins are single values from the lower support bound upward, the last bin
    is open-ended and carries the pmf tail; undersized bins are merged until
    every expected count is at least 5. No parameters are treated as fitted.
    """
    n = emp.total
    if n < 50:
        raise InsufficientData(f"need at least 50 samples, got {n}")
    lo = min(emp.support_start, pmf.support_start)
    hi = max(emp.max_value, pmf.support_end)
    cells = []
    for k in range(lo, hi):
        cells.append([k, k, float(emp.count(k)), n * pmf.prob(k)])
    tail_obs = float(sum(c for v, c in emp.counts.items() if v >= hi))
    cells.append([hi, None, tail_obs, n * pmf.sf(hi)])
    bins = _merge_bins(cells, key=lambda c: c[3])
    if len(bins) < 2:
        raise InsufficientData("fewer than 2 bins survive merging; raise the sample size")
    stat = 0.0
    out = []
    for low, high, o, e in bins:
        if e > 0:
            stat += (o - e) ** 2 / e
        elif o > 0:
            stat = math.inf
        out.append(GofBin(low, high, o, e))
    df = len(bins) - 1
    return GofReport(stat, df, chi2_sf(stat, df), out, kind="gof")


def two_sample_chi_square(a, b):
    """Chi-square homogeneity test of two integer samples."""
    na, nb = a.total, b.total
    if na < 50 or nb < 50:
        raise InsufficientData(f"need at least 50 samples in each group, got {na} and {nb}")
    lo = min(a.support_start, b.support_start)
    hi = max(a.max_value, b.max_value)
    fa, fb = na / (na + nb), nb / (na + nb)
    cells = []
    for k in range(lo, hi + 1):
        oa, ob = float(a.count(k)), float(b.count(k))
        cells.append([k, k, oa, ob, (oa + ob) * fa, (oa + ob) * fb])
    cells[-1][1] = None
    bins = _merge_bins(cells, key=lambda c: min(c[4], c[5]))
    if len(bins) < 2:
        raise InsufficientData("fewer than 2 bins survive merging; raise the sample size")
    stat = 0.0
    out = []
    for low, high, oa, ob, ea, eb in bins:
        stat += (oa - ea) ** 2 / ea + (ob - eb) ** 2 / eb
        out.append(GofBin(low, high, (oa, ob), (ea, eb)))
    df = len(bins) - 1
    return GofReport(stat, df, chi2_sf(stat, df), out, kind="two-sample")


def total_variation(emp, pmf):
    """Half the L1 distance between the empirical law and ``pmf``."""
    n = emp.total
    if n < 1:
        raise InsufficientData("empty sample")
    lo = min(emp.support_start, pmf.support_start)
    hi = max(emp.max_value, pmf.support_end)
    dist = 0.0
    for k in range(lo, hi + 1):
        dist += abs(emp.count(k) / n - pmf.prob(k))
    dist += pmf.tail_mass
    return 0.5 * dist

"""Nonparametric tests and the reporting tables built on them.

The rank tests use midranks for ties.  Below the exactness threshold
(combined n <= 12) p-values come from the exact permutation distribution,
computed by dynamic programming over integer doubled ranks; above it, the
normal approximation with tie and continuity correction is used.  The
binomial test always sums exact tail probabilities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Mapping, Sequence

import numpy as np

from .annotation import quartile_split
from .model import Quartile, ScoredRequest
from .strategies import DISPLAY_NAMES, STRATEGIES, StrategyProfile

#: Largest combined sample size for which rank tests enumerate exactly.
EXACT_THRESHOLD = 12


class TestMethod(Enum):
    MANN_WHITNEY_U = "mann_whitney_u"
    WILCOXON_SIGNED_RANK = "wilcoxon_signed_rank"
    BINOMIAL_EXACT = "binomial_exact"
    PEARSON = "pearson"


class Sidedness(Enum):
    TWO = "two"
    GREATER = "greater"
    LESS = "less"

    @classmethod
    def parse(cls, value: "Sidedness | str") -> "Sidedness":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f"unknown sidedness {value!r} (expected two/greater/less)")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float | None
    method: TestMethod
    sidedness: Sidedness
    n: tuple[int, ...]
    exact: bool = False

    def __post_init__(self) -> None:
        if self.p_value is not None and not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value out of range: {self.p_value}")

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method.value,
            "sidedness": self.sidedness.value,
            "n": list(self.n),
            "exact": self.exact,
            "stars": self.stars,
        }


def significance_stars(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with tied values sharing the mean of their rank span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _tie_counts(values: Sequence[float]) -> list[int]:
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return list(counts.values())


def _subset_rank_sum_distribution(doubled: Sequence[int], size: int) -> dict[int, int]:
    """Count size-``size`` subsets of ``doubled`` by their sum (exact DP)."""
    ways: list[dict[int, int]] = [dict() for _ in range(size + 1)]
    ways[0][0] = 1
    for value in doubled:
        for k in range(min(size, len(doubled)) - 1, -1, -1):
            if not ways[k]:
                continue
            target = ways[k + 1]
            for total, count in ways[k].items():
                target[total + value] = target.get(total + value, 0) + count
    return ways[size]


def _directional_p(
    distribution: Mapping[int, int], observed: int, total: int, sidedness: Sidedness
) -> float:
    at_least = sum(c for v, c in distribution.items() if v >= observed)
    at_most = sum(c for v, c in distribution.items() if v <= observed)
    if sidedness is Sidedness.GREATER:
        return at_least / total
    if sidedness is Sidedness.LESS:
        return at_most / total
    return min(1.0, 2.0 * min(at_least, at_most) / total)


def mann_whitney_u(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    sidedness: Sidedness | str = Sidedness.TWO,
) -> TestResult:
    """Rank-sum test of whether ``sample_a`` tends larger than ``sample_b``.

    The statistic is U for sample_a.  ``greater`` means the alternative that
    a's values tend to exceed b's.
    """
    sidedness = Sidedness.parse(sidedness)
    na, nb = len(sample_a), len(sample_b)
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    pooled = list(sample_a) + list(sample_b)
    ranks = midranks(pooled)
    rank_sum_a = sum(ranks[:na])
    u_a = rank_sum_a - na * (na + 1) / 2.0
    n = na + nb

    if n <= EXACT_THRESHOLD:
        doubled = [int(round(2 * r)) for r in ranks]
        dist = _subset_rank_sum_distribution(doubled, na)
        observed = int(round(2 * rank_sum_a))
        p = _directional_p(dist, observed, math.comb(n, na), sidedness)
        return TestResult(u_a, p, TestMethod.MANN_WHITNEY_U, sidedness, (na, nb), exact=True)

    mu = na * nb / 2.0
    tie_term = sum(t**3 - t for t in _tie_counts(pooled))
    sigma_sq = (na * nb / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        return TestResult(u_a, 1.0, TestMethod.MANN_WHITNEY_U, sidedness, (na, nb))
    sigma = math.sqrt(sigma_sq)
    if sidedness is Sidedness.GREATER:
        p = _norm_sf((u_a - mu - 0.5) / sigma)
    elif sidedness is Sidedness.LESS:
        p = _norm_sf((mu - u_a - 0.5) / sigma)
    else:
        z = (abs(u_a - mu) - 0.5) / sigma
        p = min(1.0, 2.0 * _norm_sf(max(z, 0.0)))
    return TestResult(u_a, p, TestMethod.MANN_WHITNEY_U, sidedness, (na, nb))


def wilcoxon_signed_rank(
    paired_a: Sequence[float],
    paired_b: Sequence[float],
    sidedness: Sidedness | str = Sidedness.TWO,
) -> TestResult:
    """Signed-rank test on paired samples; zero differences are dropped.

    The statistic is the positive-rank sum W+; ``greater`` means the
    alternative that a exceeds b.
    """
    sidedness = Sidedness.parse(sidedness)
    if len(paired_a) != len(paired_b):
        raise ValueError("paired samples must have equal length")
    if not paired_a:
        raise ValueError("paired samples must be non-empty")
    diffs = [a - b for a, b in zip(paired_a, paired_b) if a != b]
    m = len(diffs)
    if m == 0:
        raise ValueError("degenerate pairing: all differences are zero")
    abs_ranks = midranks([abs(d) for d in diffs])
    w_plus = sum(r for d, r in zip(diffs, abs_ranks) if d > 0)

    if m <= EXACT_THRESHOLD:
        doubled = [int(round(2 * r)) for r in abs_ranks]
        # Distribution of doubled W+ over the 2^m equiprobable sign vectors.
        dist: dict[int, int] = {0: 1}
        for value in doubled:
            new: dict[int, int] = {}
            for total, count in dist.items():
                new[total] = new.get(total, 0) + count
                new[total + value] = new.get(total + value, 0) + count
            dist = new
        observed = int(round(2 * w_plus))
        p = _directional_p(dist, observed, 2**m, sidedness)
        return TestResult(w_plus, p, TestMethod.WILCOXON_SIGNED_RANK, sidedness, (m,), exact=True)

    mu = m * (m + 1) / 4.0
    tie_term = sum(t**3 - t for t in _tie_counts([abs(d) for d in diffs]))
    sigma_sq = m * (m + 1) * (2 * m + 1) / 24.0 - tie_term / 48.0
    if sigma_sq <= 0:
        return TestResult(w_plus, 1.0, TestMethod.WILCOXON_SIGNED_RANK, sidedness, (m,))
    sigma = math.sqrt(sigma_sq)
    if sidedness is Sidedness.GREATER:
        p = _norm_sf((w_plus - mu - 0.5) / sigma)
    elif sidedness is Sidedness.LESS:
        p = _norm_sf((mu - w_plus - 0.5) / sigma)
    else:
        z = (abs(w_plus - mu) - 0.5) / sigma
        p = min(1.0, 2.0 * _norm_sf(max(z, 0.0)))
    return TestResult(w_plus, p, TestMethod.WILCOXON_SIGNED_RANK, sidedness, (m,))


def _binomial_pmf_vector(n: int, p0: float) -> list[float]:
    if n <= 1000:
        q0 = 1.0 - p0
        return [math.comb(n, k) * p0**k * q0 ** (n - k) for k in range(n + 1)]
    log_p, log_q = math.log(p0), math.log(1.0 - p0)
    lg_n = math.lgamma(n + 1)
    return [
        math.exp(
            lg_n - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * log_p + (n - k) * log_q
        )
        for k in range(n + 1)
    ]


def binomial_test(
    k: int,
    n: int,
    p0: float,
    sidedness: Sidedness | str = Sidedness.TWO,
) -> TestResult:
    """Exact binomial tail test of ``k`` successes in ``n`` trials vs ``p0``.

    Two-sided p sums every outcome whose probability does not exceed the
    observed outcome's (the minimum-likelihood convention).
    """
    sidedness = Sidedness.parse(sidedness)
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"need 0 < p0 < 1, got {p0}")
    pmf = _binomial_pmf_vector(n, p0)
    if sidedness is Sidedness.GREATER:
        p = sum(pmf[k:])
    elif sidedness is Sidedness.LESS:
        p = sum(pmf[: k + 1])
    else:
        cutoff = pmf[k] * (1.0 + 1e-7)
        p = sum(x for x in pmf if x <= cutoff)
    return TestResult(
        float(k), min(1.0, p), TestMethod.BINOMIAL_EXACT, sidedness, (n,), exact=True
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Pearson correlation coefficient; no p-value is attached."""
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    xm, ym = xa - xa.mean(), ya - ya.mean()
    var_x, var_y = float(xm @ xm), float(ym @ ym)
    if var_x == 0.0 or var_y == 0.0:
        raise ValueError("zero variance sample")
    r = float(xm @ ym) / math.sqrt(var_x * var_y)
    return TestResult(r, None, TestMethod.PEARSON, Sidedness.TWO, (len(x),))


# ---------------------------------------------------------------------------
# Reporting constructs: the per-strategy table and group comparisons.

TOP_QUARTILE_BASELINE = 0.25


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    display_name: str
    n_matching: int
    mean_politeness: float | None
    politeness_p: TestResult | None
    top_quartile_pct: float | None
    quartile_p: TestResult | None

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "display_name": self.display_name,
            "n": self.n_matching,
            "mean_politeness": self.mean_politeness,
            "politeness_test": self.politeness_p.as_dict() if self.politeness_p else None,
            "top_quartile_pct": self.top_quartile_pct,
            "quartile_test": self.quartile_p.as_dict() if self.quartile_p else None,
        }


def strategy_table(
    scored: Sequence[ScoredRequest],
    profiles: Mapping[str, StrategyProfile],
) -> list[StrategyRow]:
    """Per-strategy politeness summary over a scored, quartiled corpus.

    For each strategy: the mean politeness of requests exhibiting it, a
    rank test of those requests against the rest, the percentage falling in
    the top quartile, and a binomial test of that percentage against the
    25% chance baseline.
    """
    if not scored:
        raise ValueError("empty corpus")
    for request in scored:
        if request.quartile is None:
            raise ValueError(f"request {request.id}: quartile not assigned")
        if request.id not in profiles:
            raise ValueError(f"request {request.id}: no strategy profile supplied")

    rows = []
    for name in STRATEGIES:
        matching = [s for s in scored if profiles[s.id][name]]
        rest = [s for s in scored if not profiles[s.id][name]]
        if not matching:
            rows.append(StrategyRow(name, DISPLAY_NAMES[name], 0, None, None, None, None))
            continue
        scores = [s.politeness for s in matching]
        mean_score = float(np.mean(scores))
        politeness_p = (
            mann_whitney_u(scores, [s.politeness for s in rest], Sidedness.TWO)
            if rest
            else None
        )
        in_top = sum(1 for s in matching if s.quartile is Quartile.Q4)
        pct = 100.0 * in_top / len(matching)
        quartile_p = binomial_test(in_top, len(matching), TOP_QUARTILE_BASELINE, Sidedness.TWO)
        rows.append(
            StrategyRow(name, DISPLAY_NAMES[name], len(matching), mean_score, politeness_p, pct, quartile_p)
        )
    return rows


@dataclass(frozen=True)
class GroupStats:
    label: str
    n: int
    mean_score: float
    top_quartile_pct: float
    politeness_test: TestResult | None
    quartile_test: TestResult

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "mean_score": self.mean_score,
            "top_quartile_pct": self.top_quartile_pct,
            "politeness_test": self.politeness_test.as_dict() if self.politeness_test else None,
            "quartile_test": self.quartile_test.as_dict(),
        }


@dataclass(frozen=True)
class GroupComparison:
    group_key: str
    score_source: str
    reference: str | None
    n_total: int
    groups: tuple[GroupStats, ...]
    excluded_requests: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "group_key": self.group_key,
            "score_source": self.score_source,
            "reference": self.reference,
            "n_total": self.n_total,
            "groups": [g.as_dict() for g in self.groups],
            "n_excluded": len(self.excluded_requests),
        }


def group_compare(
    scored: Sequence[ScoredRequest],
    group_key: str,
    reference: str | None = None,
    score_source: str = "human",
) -> GroupComparison:
    """Compare politeness across metadata-defined groups.

    Scores may be human politeness or calibrated predicted scores; say which
    via ``score_source`` (recorded, not interpreted).  Top-quartile
    membership is computed against the analyzed population's own score
    distribution.  Each group gets a rank test against the reference group
    when one is named, otherwise against its complement.  Requests missing
    the group key are excluded with a diagnostic.
    """
    included = [s for s in scored if group_key in s.request.metadata]
    excluded = tuple(s.id for s in scored if group_key not in s.request.metadata)
    if not included:
        raise ValueError(f"no request carries metadata key {group_key!r}")
    if len(included) < 4:
        raise ValueError("need at least 4 requests with the group key")
    quartiled = quartile_split(included)

    by_group: dict[str, list[ScoredRequest]] = {}
    for request in quartiled:
        by_group.setdefault(request.request.metadata[group_key], []).append(request)
    if reference is not None and reference not in by_group:
        raise ValueError(f"reference group {reference!r} not present under key {group_key!r}")

    groups = []
    for label in sorted(by_group):
        members = by_group[label]
        scores = [s.politeness for s in members]
        if reference is None:
            others = [s.politeness for g, ms in by_group.items() if g != label for s in ms]
        elif label == reference:
            others = []
        else:
            others = [s.politeness for s in by_group[reference]]
        politeness_test = mann_whitney_u(scores, others, Sidedness.TWO) if others else None
        in_top = sum(1 for s in members if s.quartile is Quartile.Q4)
        quartile_test = binomial_test(
            in_top, len(members), TOP_QUARTILE_BASELINE, Sidedness.TWO
        )
        groups.append(
            GroupStats(
                label=label,
                n=len(members),
                mean_score=float(np.mean(scores)),
                top_quartile_pct=100.0 * in_top / len(members),
                politeness_test=politeness_test,
                quartile_test=quartile_test,
            )
        )
    return GroupComparison(
        group_key=group_key,
        score_source=score_source,
        reference=reference,
        n_total=len(included),
        groups=tuple(groups),
        excluded_requests=excluded,
    )


def strategy_table_to_csv(rows: Sequence[StrategyRow], handle: IO[str]) -> None:
    writer = csv.writer(handle)
    writer.writerow(
        [
            "strategy",
            "n",
            "mean_politeness",
            "politeness_U",
            "politeness_p",
            "politeness_stars",
            "top_quartile_pct",
            "quartile_p",
            "quartile_stars",
        ]
    )
    for row in rows:
        writer.writerow(
            [
                row.display_name,
                row.n_matching,
                "" if row.mean_politeness is None else f"{row.mean_politeness:.4f}",
                "" if row.politeness_p is None else f"{row.politeness_p.statistic:.1f}",
                "" if row.politeness_p is None else f"{row.politeness_p.p_value:.3g}",
                "" if row.politeness_p is None else row.politeness_p.stars,
                "" if row.top_quartile_pct is None else f"{row.top_quartile_pct:.1f}",
                "" if row.quartile_p is None else f"{row.quartile_p.p_value:.3g}",
                "" if row.quartile_p is None else row.quartile_p.stars,
            ]
        )

"""Annotation normalization, score aggregation and agreement measures.

Politeness scores come from slider annotations: each worker's raw scores are
z-score normalized (population convention, over all of that worker's
annotations across batches) and a request's politeness is the mean of its
normalized scores.  Workers whose raw scores are constant carry no ranking
information and are dropped with a diagnostic.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import DataFormatError
from .model import AnnotationSet, Quartile, ScoredRequest

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizedScores:
    """Per-request normalized scores plus normalization diagnostics."""

    by_request: dict[str, dict[str, float]]  # request id -> worker id -> z-score
    dropped_workers: tuple[str, ...]
    worker_means: dict[str, float]
    worker_sds: dict[str, float]

    def politeness(self) -> dict[str, float]:
        return {
            rid: float(np.mean(list(scores.values())))
            for rid, scores in self.by_request.items()
        }


def normalize_scores(batches: Iterable[AnnotationSet]) -> NormalizedScores:
    """Z-score every worker's raw scores over their full annotation set.

    The population (divide-by-n) standard deviation is used, so each kept
    worker's normalized scores have mean 0 and standard deviation 1 exactly.
    Workers with fewer than two distinct raw values are dropped.
    """
    raw_by_worker: dict[str, dict[str, float]] = {}
    batch_ids: set[str] = set()
    for batch in batches:
        if batch.batch_id in batch_ids:
            raise ValueError(f"duplicate batch id {batch.batch_id!r}")
        batch_ids.add(batch.batch_id)
        for worker, scores in batch.worker_scores.items():
            bucket = raw_by_worker.setdefault(worker, {})
            for rid, value in scores.items():
                if rid in bucket:
                    raise ValueError(
                        f"worker {worker!r} scored request {rid!r} more than once"
                    )
                bucket[rid] = float(value)
    if not raw_by_worker:
        raise ValueError("no annotations supplied")

    by_request: dict[str, dict[str, float]] = {}
    dropped: list[str] = []
    means: dict[str, float] = {}
    sds: dict[str, float] = {}
    for worker in sorted(raw_by_worker):
        scores = raw_by_worker[worker]
        values = np.array(list(scores.values()), dtype=float)
        if len(set(values.tolist())) < 2:
            dropped.append(worker)
            log.warning(
                "dropping worker %s: constant raw scores (%d annotations)",
                worker,
                len(values),
            )
            continue
        mean = float(values.mean())
        sd = float(values.std())  # population convention
        means[worker] = mean
        sds[worker] = sd
        for rid, value in scores.items():
            by_request.setdefault(rid, {})[worker] = (value - mean) / sd

    all_request_ids = {rid for scores in raw_by_worker.values() for rid in scores}
    orphaned = sorted(all_request_ids - set(by_request))
    if orphaned:
        raise ValueError(
            f"request(s) left with zero annotations after dropping constant-score "
            f"workers: {', '.join(orphaned[:5])}"
        )
    return NormalizedScores(
        by_request=by_request,
        dropped_workers=tuple(dropped),
        worker_means=means,
        worker_sds=sds,
    )


def normalize_and_aggregate(batches: Iterable[AnnotationSet]) -> dict[str, float]:
    """Map request id -> politeness score (mean of normalized worker scores)."""
    return normalize_scores(batches).politeness()


def assign_quartiles(pairs: Sequence[tuple[str, float]]) -> dict[str, Quartile]:
    """Partition (request id, score) pairs into quartiles; Q4 = highest.

    Ties are broken by lexicographic request id so the split is
    deterministic.  Quartile sizes differ by at most one; when the count is
    not divisible by four the extra elements go to the extreme quartiles
    first (Q4, then Q1, then Q2), keeping the top quartile at ceil(n/4).
    """
    n = len(pairs)
    if n < 4:
        raise ValueError(f"need at least 4 requests to form quartiles, got {n}")
    if len({rid for rid, _ in pairs}) != n:
        raise ValueError("duplicate request ids in scored collection")
    order = sorted(pairs, key=lambda item: (item[1], item[0]))

    base, rem = divmod(n, 4)
    sizes = {q: base for q in Quartile}
    for q in (Quartile.Q4, Quartile.Q1, Quartile.Q2):
        if rem == 0:
            break
        sizes[q] += 1
        rem -= 1

    assignment: dict[str, Quartile] = {}
    position = 0
    for quartile in (Quartile.Q1, Quartile.Q2, Quartile.Q3, Quartile.Q4):
        for rid, _ in order[position : position + sizes[quartile]]:
            assignment[rid] = quartile
        position += sizes[quartile]
    return assignment


def quartile_split(scored: Sequence[ScoredRequest]) -> list[ScoredRequest]:
    """Assign quartiles by politeness score (see ``assign_quartiles``).

    Returns new ScoredRequest values in the input order.
    """
    assignment = assign_quartiles([(s.id, s.politeness) for s in scored])
    return [s.with_quartile(assignment[s.id]) for s in scored]


@dataclass(frozen=True)
class AgreementResult:
    mean_pairwise_correlation: float
    n_pairs: int
    excluded_workers: tuple[str, ...] = ()
    baseline_distribution: tuple[float, ...] | None = None


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    am = a - a.mean()
    bm = b - b.mean()
    denom = math.sqrt(float(am @ am) * float(bm @ bm))
    return float(am @ bm) / denom


def _mean_pairwise(vectors: dict[str, np.ndarray]) -> tuple[float, int, tuple[str, ...]]:
    workers = sorted(vectors)
    degenerate = tuple(w for w in workers if float(np.ptp(vectors[w])) == 0.0)
    usable = [w for w in workers if w not in degenerate]
    correlations = []
    for i, w1 in enumerate(usable):
        for w2 in usable[i + 1 :]:
            correlations.append(_pearson(vectors[w1], vectors[w2]))
    if not correlations:
        raise ValueError("all worker pairs excluded: no pair with nonzero variance")
    return float(np.mean(correlations)), len(correlations), degenerate


def pairwise_agreement(
    batch: AnnotationSet,
    randomized: bool = False,
    resamples: int = 1000,
    seed: int | None = None,
) -> AgreementResult:
    """Mean pairwise Pearson correlation of a batch's normalized score vectors.

    Workers whose scores are constant within the batch make correlation
    undefined; their pairs are excluded (with a diagnostic).  In randomized
    mode each worker's vector is replaced by draws from the empirical
    distribution of the batch's normalized scores, and the same statistic is
    reported per resample as a chance baseline.
    """
    if batch.n_workers < 2:
        raise ValueError(f"batch {batch.batch_id}: need >= 2 workers")
    if batch.n_requests < 2:
        raise ValueError(f"batch {batch.batch_id}: need >= 2 requests")
    request_ids = batch.request_ids
    vectors: dict[str, np.ndarray] = {}
    for worker in batch.worker_ids:
        values = np.array([batch.worker_scores[worker][rid] for rid in request_ids])
        spread = float(np.ptp(values))
        if spread != 0.0:
            values = (values - values.mean()) / values.std()
        vectors[worker] = values

    mean_corr, n_pairs, degenerate = _mean_pairwise(vectors)
    for worker in degenerate:
        log.warning(
            "batch %s: worker %s has zero variance; pairs excluded",
            batch.batch_id,
            worker,
        )

    baseline: tuple[float, ...] | None = None
    if randomized:
        if seed is None:
            raise ValueError("randomized agreement requires an explicit seed")
        rng = np.random.default_rng(seed)
        pool = np.concatenate(
            [vectors[w] for w in batch.worker_ids if w not in degenerate]
        )
        n = len(request_ids)
        draws = []
        for _ in range(resamples):
            fake = {
                w: rng.choice(pool, size=n, replace=True) for w in batch.worker_ids
            }
            try:
                stat, _, _ = _mean_pairwise(fake)
            except ValueError:
                continue  # all resampled vectors constant; vanishingly rare
            draws.append(stat)
        baseline = tuple(draws)

    return AgreementResult(
        mean_pairwise_correlation=mean_corr,
        n_pairs=n_pairs,
        excluded_workers=degenerate,
        baseline_distribution=baseline,
    )


@dataclass(frozen=True)
class BinaryAgreement:
    """Per-quartile share of requests whose annotators all agree in sign."""

    agreement_pct: dict[Quartile, float]
    n_by_quartile: dict[Quartile, int]
    excluded_requests: tuple[str, ...] = ()


def binary_agreement_by_quartile(
    batches: Iterable[AnnotationSet],
    scored: Sequence[ScoredRequest],
    annotators_per_request: int = 5,
) -> BinaryAgreement:
    """Percentage of requests, per quartile, where all annotators agree in sign.

    A normalized score of exactly zero expresses neither politeness nor
    impoliteness and blocks unanimity.  Requests without exactly
    ``annotators_per_request`` normalized scores are excluded with a
    diagnostic.
    """
    normalized = normalize_scores(batches)
    counts: dict[Quartile, int] = {q: 0 for q in Quartile}
    unanimous: dict[Quartile, int] = {q: 0 for q in Quartile}
    excluded: list[str] = []
    for request in scored:
        if request.quartile is None:
            raise ValueError(f"request {request.id}: quartile not assigned")
        scores = normalized.by_request.get(request.id)
        if scores is None or len(scores) != annotators_per_request:
            excluded.append(request.id)
            log.warning(
                "request %s: expected %d annotations, found %d; excluded",
                request.id,
                annotators_per_request,
                0 if scores is None else len(scores),
            )
            continue
        values = list(scores.values())
        counts[request.quartile] += 1
        if all(v > 0 for v in values) or all(v < 0 for v in values):
            unanimous[request.quartile] += 1
    pct = {
        q: (100.0 * unanimous[q] / counts[q]) if counts[q] else 0.0 for q in Quartile
    }
    return BinaryAgreement(
        agreement_pct=pct,
        n_by_quartile=counts,
        excluded_requests=tuple(excluded),
    )


# ---------------------------------------------------------------------------
# File interfaces: delimited annotations in, scored JSONL out.

ANNOTATION_COLUMNS = ("batch_id", "worker_id", "request_id", "raw_score")


def read_annotations(source: str | Path | IO[str]) -> list[AnnotationSet]:
    """Read delimited annotation rows into per-batch AnnotationSets.

    The file must be UTF-8 with a header row naming the columns
    batch_id, worker_id, request_id, raw_score (comma- or tab-delimited).
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as handle:
            return _read_annotation_stream(handle, str(source))
    name = getattr(source, "name", None)
    return _read_annotation_stream(source, name if isinstance(name, str) else None)


def _read_annotation_stream(handle: IO[str], path: str | None) -> list[AnnotationSet]:
    sample = handle.readline()
    if not sample:
        raise DataFormatError("empty annotation file", path=path, line=1)
    delimiter = "\t" if "\t" in sample else ","
    header = [c.strip() for c in sample.rstrip("\n").split(delimiter)]
    if header != list(ANNOTATION_COLUMNS):
        raise DataFormatError(
            f"expected header {','.join(ANNOTATION_COLUMNS)}, got {','.join(header)}",
            path=path,
            line=1,
        )
    reader = csv.reader(handle, delimiter=delimiter)
    batches: dict[str, dict[str, dict[str, float]]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(ANNOTATION_COLUMNS):
            raise DataFormatError(
                f"expected {len(ANNOTATION_COLUMNS)} fields, got {len(row)}",
                path=path,
                line=line_no,
            )
        batch_id, worker_id, request_id, raw = (c.strip() for c in row)
        try:
            value = float(raw)
        except ValueError as exc:
            raise DataFormatError(
                f"raw_score {raw!r} is not a number", path=path, line=line_no
            ) from exc
        batches.setdefault(batch_id, {}).setdefault(worker_id, {})[request_id] = value
    return [
        AnnotationSet(batch_id=bid, worker_scores=batches[bid])
        for bid in sorted(batches)
    ]


def write_scores_jsonl(
    scored: Iterable[ScoredRequest] | Iterable[tuple[str, float, Quartile | None]],
    target: str | Path | IO[str],
    provenance: dict | None = None,
) -> int:
    """Write one ``{id, politeness, quartile}`` JSON object per line."""

    def rows() -> Iterator[dict]:
        for item in scored:
            if isinstance(item, ScoredRequest):
                rid, score, quartile = item.id, item.politeness, item.quartile
            else:
                rid, score, quartile = item
            yield {
                "id": rid,
                "politeness": score,
                "quartile": quartile.name if quartile is not None else None,
            }

    def emit(handle: IO[str]) -> int:
        count = 0
        if provenance is not None:
            handle.write(json.dumps({"provenance": provenance}, sort_keys=True) + "\n")
        for row in rows():
            handle.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
        return count

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as handle:
            return emit(handle)
    return emit(target)


def read_scores_jsonl(source: str | Path | IO[str]) -> dict[str, tuple[float, Quartile | None]]:
    """Read a scores JSONL file back into {id: (politeness, quartile)}."""

    def parse(handle: IO[str], path: str | None) -> dict[str, tuple[float, Quartile | None]]:
        out: dict[str, tuple[float, Quartile | None]] = {}
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError("bad JSON", path=path, line=line_no) from exc
            if "provenance" in row:
                continue
            try:
                rid = row["id"]
                score = float(row["politeness"])
                quartile = Quartile[row["quartile"]] if row.get("quartile") else None
            except (KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(
                    f"expected fields id/politeness/quartile: {exc}", path=path, line=line_no
                ) from exc
            if rid in out:
                raise DataFormatError(f"duplicate id {rid!r}", path=path, line=line_no)
            out[rid] = (score, quartile)
        return out

    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            return parse(handle, str(source))
    name = getattr(source, "name", None)
    return parse(source, name if isinstance(name, str) else None)

"""Linear max-margin training via dual coordinate descent.

Minimizes, over (w, b):

    0.5 * (||w||^2 + b^2) + C * sum_i max(0, 1 - y_i * (w . x_i + b))

with y in {-1, +1}.  The bias rides along as a constant augmented feature
inside the regularizer, which makes the objective strictly convex: there is
exactly one optimum, so a tightly converged solve does not depend on example
order.  To make that independence literal, examples are internally sorted
into a canonical order before optimization.

The solver is the standard dual coordinate descent for L1-loss SVMs: one
dual variable per example, updated cyclically with projected-gradient
stopping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

SparseRow = Mapping[int, float]


@dataclass(frozen=True)
class SvmSolution:
    weights: np.ndarray  # length n_features, bias excluded
    bias: float
    objective: float
    n_passes: int
    converged: bool


def _canonical_order(rows: Sequence[SparseRow], labels: Sequence[int]) -> list[int]:
    keys = [
        (labels[i], tuple(sorted(rows[i].items())))
        for i in range(len(rows))
    ]
    return sorted(range(len(rows)), key=keys.__getitem__)


def hinge_objective(
    weights: np.ndarray,
    bias: float,
    rows: Sequence[SparseRow],
    labels: Sequence[int],
    c: float,
) -> float:
    """The primal objective value (regularized bias convention)."""
    total = 0.5 * (float(weights @ weights) + bias * bias)
    for row, y in zip(rows, labels):
        margin = sum(weights[j] * v for j, v in row.items()) + bias
        total += c * max(0.0, 1.0 - y * margin)
    return total


def train_svm(
    rows: Sequence[SparseRow],
    labels: Sequence[int],
    n_features: int,
    c: float = 1.0,
    tol: float = 1e-8,
    max_passes: int = 4000,
) -> SvmSolution:
    """Train a linear SVM; returns weights, bias and the reached objective.

    ``labels`` must be -1/+1 with both classes present.  ``tol`` bounds the
    largest projected dual gradient at convergence.
    """
    n = len(rows)
    if n == 0:
        raise ValueError("no training examples")
    if len(labels) != n:
        raise ValueError("rows and labels must have equal length")
    label_set = set(labels)
    if not label_set <= {-1, 1}:
        raise ValueError(f"labels must be -1/+1, got {sorted(label_set)}")
    if len(label_set) < 2:
        raise ValueError("training data contains a single class")
    for row in rows:
        for j in row:
            if not 0 <= j < n_features:
                raise ValueError(f"feature index {j} out of range [0, {n_features})")

    order = _canonical_order(rows, labels)
    bias_index = n_features
    indices = []
    values = []
    for i in order:
        row = rows[i]
        idx = np.fromiter(sorted(row), dtype=np.int64, count=len(row))
        val = np.array([row[j] for j in idx], dtype=float)
        indices.append(np.append(idx, bias_index))
        values.append(np.append(val, 1.0))
    y = np.array([labels[i] for i in order], dtype=float)
    q_diag = np.array([float(v @ v) for v in values])

    w = np.zeros(n_features + 1)
    alpha = np.zeros(n)
    converged = False
    n_passes = 0
    for n_passes in range(1, max_passes + 1):
        max_violation = 0.0
        for i in range(n):
            idx, val = indices[i], values[i]
            g = y[i] * float(w[idx] @ val) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= c:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_violation = max(max_violation, abs(pg))
                a_new = min(max(a - g / q_diag[i], 0.0), c)
                if a_new != a:
                    w[idx] += (a_new - a) * y[i] * val
                    alpha[i] = a_new
        if max_violation < tol:
            converged = True
            break

    weights = w[:n_features].copy()
    bias = float(w[bias_index])
    objective = hinge_objective(
        weights, bias, [rows[i] for i in order], [labels[i] for i in order], c
    )
    return SvmSolution(
        weights=weights,
        bias=bias,
        objective=objective,
        n_passes=n_passes,
        converged=converged,
    )


def decision_values(
    weights: np.ndarray, bias: float, rows: Sequence[SparseRow]
) -> np.ndarray:
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        out[i] = sum(weights[j] * v for j, v in row.items()) + bias
    return out

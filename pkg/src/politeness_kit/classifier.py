"""Featurization, linear training, probability calibration and evaluation.

Two feature modes exist: unigram-only (BOW) and unigrams plus the twenty
strategy flags (LING).  Requests are classified polite/impolite, classes
being the top and bottom politeness quartiles of a corpus.  Calibrated
scores in (0, 1) come from a logistic fit on margins of held-out data.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import svm
from .errors import DataFormatError
from .lexicons import LexiconSet
from .model import ParsedRequest, Quartile, ScoredRequest
from .strategies import (
    DEFAULT_CONFIG,
    MatchConfig,
    STRATEGIES,
    StrategyProfile,
    detect_strategies,
)

MODEL_FORMAT_VERSION = 1
N_STRATEGY_FEATURES = len(STRATEGIES)
DEFAULT_MIN_COUNT = 10
DEFAULT_C = 1.0


class Mode(Enum):
    BOW = "bow"
    LING = "ling"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value.lower():
                return member
        raise ValueError(f"unknown mode {value!r} (expected bow or ling)")


class Label(Enum):
    POLITE = 1
    IMPOLITE = -1


class EvalProtocol(Enum):
    CV = "cv"
    CROSS_DOMAIN = "cross_domain"
    HOLDOUT = "holdout"


def request_tokens(request: ParsedRequest) -> list[str]:
    """Unigram tokens of a request: lowercased surfaces, punctuation kept."""
    return [t.surface.lower() for s in request.sentences for t in s.tokens]


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-feature-index map built from a training split only."""

    index: Mapping[str, int]
    min_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", dict(self.index))

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def n_features(self) -> int:
        return len(self.index) + N_STRATEGY_FEATURES


def build_vocabulary(
    requests: Iterable[ParsedRequest], min_count: int = DEFAULT_MIN_COUNT
) -> Vocabulary:
    """Count unigrams over the training requests and keep the frequent ones.

    Tokens occurring fewer than ``min_count`` times are excluded; indices are
    assigned lexicographically so vocabulary construction is deterministic.
    """
    counts: Counter[str] = Counter()
    n_requests = 0
    for request in requests:
        n_requests += 1
        counts.update(request_tokens(request))
    if n_requests == 0:
        raise ValueError("empty training set")
    kept = sorted(token for token, c in counts.items() if c >= min_count)
    if not kept:
        raise ValueError(
            f"no token reaches min_count={min_count}; vocabulary would be empty"
        )
    return Vocabulary(index={token: i for i, token in enumerate(kept)}, min_count=min_count)


@dataclass(frozen=True)
class FeatureVector:
    """Sparse feature map: unigram counts plus the trailing strategy block."""

    values: Mapping[int, float]
    n_features: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", dict(self.values))
        for idx in self.values:
            if not 0 <= idx < self.n_features:
                raise ValueError(f"feature index {idx} out of range [0, {self.n_features})")


def featurize(
    request: ParsedRequest,
    vocabulary: Vocabulary,
    profile: StrategyProfile | None,
    mode: Mode,
    binary_unigrams: bool = False,
) -> FeatureVector:
    """Build the sparse feature vector for one request.

    Out-of-vocabulary tokens are ignored.  BOW mode leaves the strategy
    block at zero; LING mode sets it from the profile (binary flags).
    """
    mode = Mode.parse(mode)
    values: dict[int, float] = {}
    for token in request_tokens(request):
        idx = vocabulary.index.get(token)
        if idx is not None:
            values[idx] = 1.0 if binary_unigrams else values.get(idx, 0.0) + 1.0
    if mode is Mode.LING:
        if profile is None:
            raise ValueError("LING mode requires a strategy profile")
        base = len(vocabulary)
        for offset, name in enumerate(STRATEGIES):
            if profile[name]:
                values[base + offset] = 1.0
    return FeatureVector(values=values, n_features=vocabulary.n_features)


@dataclass(frozen=True)
class Calibration:
    """Sigmoid parameters mapping margin m to a score sigmoid(a*m + b)."""

    a: float
    b: float


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    vocabulary: Vocabulary
    mode: Mode
    trained_domain: str | None = None
    calibration: Calibration | None = None
    binary_unigrams: bool = False
    c: float = DEFAULT_C

    def __post_init__(self) -> None:
        if len(self.weights) != self.vocabulary.n_features:
            raise ValueError(
                f"weight dimension {len(self.weights)} != vocabulary size "
                f"{len(self.vocabulary)} + {N_STRATEGY_FEATURES}"
            )

    def margin(self, features: FeatureVector) -> float:
        if features.n_features != len(self.weights):
            raise ValueError("feature vector does not match model dimensionality")
        return sum(self.weights[j] * v for j, v in features.values.items()) + self.bias

    def score(self, features: FeatureVector) -> float:
        if self.calibration is None:
            raise ValueError("model is not calibrated; fit calibration before scoring")
        return _sigmoid_score(self.calibration, self.margin(features))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


_SCORE_LO = float(np.nextafter(0.0, 1.0))
_SCORE_HI = float(np.nextafter(1.0, 0.0))


def _sigmoid_score(calibration: Calibration, margin: float) -> float:
    p = _sigmoid(calibration.a * margin + calibration.b)
    return min(max(p, _SCORE_LO), _SCORE_HI)


def fit_logistic_1d(
    margins: Sequence[float],
    targets: Sequence[int],
    max_iter: int = 100,
    tol: float = 1e-12,
) -> Calibration:
    """Fit p(y=1 | m) = sigmoid(a*m + b) by damped Newton iteration.

    ``targets`` are 0/1.  Raises on a degenerate fit (all margins equal or a
    single target class).  On separable margins the iteration cap bounds the
    slope; scores stay on the correct side of 0.5.
    """
    m = np.asarray(margins, dtype=float)
    t = np.asarray(targets, dtype=float)
    if len(m) != len(t) or len(m) == 0:
        raise ValueError("margins and targets must be non-empty and equal length")
    if float(np.ptp(m)) == 0.0:
        raise ValueError("degenerate calibration fit: all margins are equal")
    if len(set(t.tolist())) < 2:
        raise ValueError("calibration requires both classes in the held-out set")

    mean_t = min(max(float(t.mean()), 1e-9), 1.0 - 1e-9)
    a, b = 0.0, math.log(mean_t / (1.0 - mean_t))

    def negative_log_likelihood(a_: float, b_: float) -> float:
        z = a_ * m + b_
        # log(1 + exp(z)) - t*z, computed stably
        return float(np.sum(np.logaddexp(0.0, z) - t * z))

    nll = negative_log_likelihood(a, b)
    for _ in range(max_iter):
        z = a * m + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        grad_a = float(np.sum((p - t) * m))
        grad_b = float(np.sum(p - t))
        if max(abs(grad_a), abs(grad_b)) < tol:
            break
        w = p * (1.0 - p)
        if float(np.sum(w)) < 1e-10 * len(m):
            break  # separable fit saturated; further steps only amplify noise
        h_aa = float(np.sum(w * m * m)) + 1e-12
        h_bb = float(np.sum(w)) + 1e-12
        h_ab = float(np.sum(w * m))
        det = h_aa * h_bb - h_ab * h_ab
        if det <= 0:
            break
        step_a = (h_bb * grad_a - h_ab * grad_b) / det
        step_b = (h_aa * grad_b - h_ab * grad_a) / det
        scale = 1.0
        for _halving in range(50):
            candidate = negative_log_likelihood(a - scale * step_a, b - scale * step_b)
            if candidate <= nll + 1e-15:
                break
            scale *= 0.5
        else:
            break
        a -= scale * step_a
        b -= scale * step_b
        nll = candidate
    return Calibration(a=a, b=b)


def _to_svm_labels(labels: Sequence[Label]) -> list[int]:
    return [label.value for label in labels]


def train(
    examples: Sequence[tuple[FeatureVector, Label]],
    vocabulary: Vocabulary,
    mode: Mode,
    c: float = DEFAULT_C,
    trained_domain: str | None = None,
    binary_unigrams: bool = False,
) -> LinearModel:
    """Train an (uncalibrated) linear model on featurized examples."""
    if not examples:
        raise ValueError("no training examples")
    labels = [label for _, label in examples]
    if len(set(labels)) < 2:
        raise ValueError("training data contains a single class")
    rows = [fv.values for fv, _ in examples]
    solution = svm.train_svm(
        rows, _to_svm_labels(labels), n_features=vocabulary.n_features, c=c
    )
    return LinearModel(
        weights=solution.weights,
        bias=solution.bias,
        vocabulary=vocabulary,
        mode=Mode.parse(mode),
        trained_domain=trained_domain,
        binary_unigrams=binary_unigrams,
        c=c,
    )


def calibrate(
    model: LinearModel, held_out: Sequence[tuple[FeatureVector, Label]]
) -> LinearModel:
    """Attach sigmoid calibration fitted on held-out margins."""
    if not held_out:
        raise ValueError("no calibration examples")
    margins = [model.margin(fv) for fv, _ in held_out]
    targets = [1 if label is Label.POLITE else 0 for _, label in held_out]
    return replace(model, calibration=fit_logistic_1d(margins, targets))


def _stratified_folds(
    labels: Sequence[Label], k: int, seed: int | None
) -> list[list[int]]:
    n = len(labels)
    if k > n:
        raise ValueError(f"k={k} exceeds the number of examples ({n})")
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for wanted in (Label.POLITE, Label.IMPOLITE):
        indices = [i for i, label in enumerate(labels) if label is wanted]
        rng.shuffle(indices)
        for position, idx in enumerate(indices):
            folds[position % k].append(idx)
    return [sorted(f) for f in folds]


def train_calibrated(
    examples: Sequence[tuple[FeatureVector, Label]],
    vocabulary: Vocabulary,
    mode: Mode,
    c: float = DEFAULT_C,
    seed: int | None = 0,
    internal_folds: int = 5,
    trained_domain: str | None = None,
    binary_unigrams: bool = False,
) -> LinearModel:
    """Train on all examples; calibrate on out-of-fold margins.

    Calibration margins come from an internal stratified split so the
    sigmoid never sees margins of examples the underlying model trained on.
    """
    labels = [label for _, label in examples]
    folds = _stratified_folds(labels, min(internal_folds, len(examples)), seed)
    oof_margins: list[float] = []
    oof_targets: list[int] = []
    for fold in folds:
        fold_set = set(fold)
        train_part = [ex for i, ex in enumerate(examples) if i not in fold_set]
        fold_labels = {label for _, label in train_part}
        if len(fold_labels) < 2:
            continue
        submodel = train(train_part, vocabulary, mode, c=c)
        for i in fold:
            fv, label = examples[i]
            oof_margins.append(submodel.margin(fv))
            oof_targets.append(1 if label is Label.POLITE else 0)
    final = train(
        examples,
        vocabulary,
        mode,
        c=c,
        trained_domain=trained_domain,
        binary_unigrams=binary_unigrams,
    )
    return replace(final, calibration=fit_logistic_1d(oof_margins, oof_targets))


@dataclass(frozen=True)
class Prediction:
    label: Label
    margin: float
    score: float

    def as_dict(self) -> dict:
        return {
            "class": "polite" if self.label is Label.POLITE else "impolite",
            "margin": self.margin,
            "score": self.score,
        }


def predict_politeness(
    model: LinearModel,
    request: ParsedRequest,
    lexicons: LexiconSet | None = None,
    config: MatchConfig = DEFAULT_CONFIG,
) -> Prediction:
    """Classify one request and report margin and calibrated score.

    A margin of exactly zero classifies as impolite (fixed tie rule).
    LING-mode models need lexicons to compute the strategy profile.
    """
    if model.calibration is None:
        raise ValueError("model is not calibrated; cannot produce scores")
    profile = None
    if model.mode is Mode.LING:
        if lexicons is None:
            raise ValueError("LING-mode prediction requires lexicons")
        profile = detect_strategies(request, lexicons, config)
    features = featurize(
        request, model.vocabulary, profile, model.mode, model.binary_unigrams
    )
    margin = model.margin(features)
    label = Label.POLITE if margin > 0 else Label.IMPOLITE
    return Prediction(label=label, margin=margin, score=model.score(features))


def score_requests(
    model: LinearModel,
    requests: Iterable[ParsedRequest],
    lexicons: LexiconSet | None = None,
    config: MatchConfig = DEFAULT_CONFIG,
) -> Iterator[tuple[str, Prediction]]:
    """Stream (request id, prediction) pairs; order follows the input."""
    for request in requests:
        yield request.id, predict_politeness(model, request, lexicons, config)


@dataclass(frozen=True)
class EvalReport:
    protocol: EvalProtocol
    protocol_detail: str
    mode: Mode
    accuracy: float
    n: int
    n_correct: int
    per_fold: tuple[float, ...] | None = None
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "protocol_detail": self.protocol_detail,
            "mode": self.mode.value,
            "accuracy": self.accuracy,
            "n": self.n,
            "n_correct": self.n_correct,
            "per_fold": list(self.per_fold) if self.per_fold is not None else None,
            "seed": self.seed,
        }


def _class_examples(
    corpus: Sequence[ScoredRequest],
) -> list[tuple[ParsedRequest, Label]]:
    pairs: list[tuple[ParsedRequest, Label]] = []
    for request in corpus:
        if request.quartile is Quartile.Q4:
            pairs.append((request.request, Label.POLITE))
        elif request.quartile is Quartile.Q1:
            pairs.append((request.request, Label.IMPOLITE))
    labels = {label for _, label in pairs}
    if labels != {Label.POLITE, Label.IMPOLITE}:
        raise ValueError(
            "corpus must contain both top- and bottom-quartile requests "
            "(run quartile_split first)"
        )
    return pairs


def _profiles_for(
    requests: Sequence[ParsedRequest],
    lexicons: LexiconSet | None,
    mode: Mode,
    config: MatchConfig,
) -> list[StrategyProfile | None]:
    if mode is not Mode.LING:
        return [None] * len(requests)
    if lexicons is None:
        raise ValueError("LING mode requires lexicons")
    return [detect_strategies(r, lexicons, config) for r in requests]


def evaluate_in_domain(
    corpus: Sequence[ScoredRequest],
    lexicons: LexiconSet | None,
    mode: Mode | str,
    protocol: str = "kfold:10",
    seed: int | None = 0,
    min_count: int = DEFAULT_MIN_COUNT,
    c: float = DEFAULT_C,
    binary_unigrams: bool = False,
    config: MatchConfig = DEFAULT_CONFIG,
) -> EvalReport:
    """Cross-validated accuracy on one domain's quartile-derived classes.

    ``protocol`` is ``"loo"`` or ``"kfold:<k>"``.  The vocabulary is rebuilt
    inside every fold from that fold's training portion, so no test-fold
    token can leak into featurization.
    """
    mode = Mode.parse(mode)
    pairs = _class_examples(corpus)
    requests = [r for r, _ in pairs]
    labels = [label for _, label in pairs]
    profiles = _profiles_for(requests, lexicons, mode, config)

    protocol = protocol.strip().lower()
    if protocol == "loo":
        folds = [[i] for i in range(len(pairs))]
        detail = "loo"
        fold_seed = None
    elif protocol.startswith("kfold"):
        try:
            k = int(protocol.split(":", 1)[1]) if ":" in protocol else 10
        except ValueError as exc:
            raise ValueError(f"bad protocol {protocol!r}") from exc
        folds = _stratified_folds(labels, k, seed)
        detail = f"kfold:{k}"
        fold_seed = seed
    else:
        raise ValueError(f"unknown protocol {protocol!r} (expected loo or kfold:<k>)")

    n_correct = 0
    per_fold: list[float] = []
    for fold in folds:
        fold_set = set(fold)
        train_idx = [i for i in range(len(pairs)) if i not in fold_set]
        vocabulary = build_vocabulary((requests[i] for i in train_idx), min_count)
        train_examples = [
            (
                featurize(requests[i], vocabulary, profiles[i], mode, binary_unigrams),
                labels[i],
            )
            for i in train_idx
        ]
        model = train(train_examples, vocabulary, mode, c=c)
        fold_correct = 0
        for i in fold:
            fv = featurize(requests[i], vocabulary, profiles[i], mode, binary_unigrams)
            predicted = Label.POLITE if model.margin(fv) > 0 else Label.IMPOLITE
            fold_correct += predicted is labels[i]
        n_correct += fold_correct
        per_fold.append(fold_correct / len(fold))
    return EvalReport(
        protocol=EvalProtocol.CV,
        protocol_detail=detail,
        mode=mode,
        accuracy=n_correct / len(pairs),
        n=len(pairs),
        n_correct=n_correct,
        per_fold=tuple(per_fold),
        seed=fold_seed,
    )


def evaluate_cross_domain(
    train_corpus: Sequence[ScoredRequest],
    test_corpus: Sequence[ScoredRequest],
    lexicons: LexiconSet | None,
    mode: Mode | str,
    min_count: int = DEFAULT_MIN_COUNT,
    c: float = DEFAULT_C,
    binary_unigrams: bool = False,
    config: MatchConfig = DEFAULT_CONFIG,
) -> EvalReport:
    """Train on one domain's classes, test on another's.

    The vocabulary comes from the training domain only; overlapping request
    ids across the two corpora are rejected.
    """
    mode = Mode.parse(mode)
    train_ids = {s.id for s in train_corpus}
    overlap = train_ids & {s.id for s in test_corpus}
    if overlap:
        raise ValueError(
            f"request ids overlap across domains, e.g. {sorted(overlap)[:3]}"
        )
    train_pairs = _class_examples(train_corpus)
    test_pairs = _class_examples(test_corpus)
    train_requests = [r for r, _ in train_pairs]
    vocabulary = build_vocabulary(train_requests, min_count)
    train_profiles = _profiles_for(train_requests, lexicons, mode, config)
    examples = [
        (featurize(r, vocabulary, p, mode, binary_unigrams), label)
        for (r, label), p in zip(train_pairs, train_profiles)
    ]
    model = train(examples, vocabulary, mode, c=c)

    test_requests = [r for r, _ in test_pairs]
    test_profiles = _profiles_for(test_requests, lexicons, mode, config)
    n_correct = 0
    for (request, label), profile in zip(test_pairs, test_profiles):
        fv = featurize(request, vocabulary, profile, mode, binary_unigrams)
        predicted = Label.POLITE if model.margin(fv) > 0 else Label.IMPOLITE
        n_correct += predicted is label
    return EvalReport(
        protocol=EvalProtocol.CROSS_DOMAIN,
        protocol_detail="cross_domain",
        mode=mode,
        accuracy=n_correct / len(test_pairs),
        n=len(test_pairs),
        n_correct=n_correct,
    )


# ---------------------------------------------------------------------------
# Model persistence: a single JSON document.


def model_to_dict(model: LinearModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "trained_domain": model.trained_domain,
        "mode": model.mode.value,
        "min_count": model.vocabulary.min_count,
        "binary_unigrams": model.binary_unigrams,
        "c": model.c,
        "vocabulary": dict(sorted(model.vocabulary.index.items())),
        "weights": [float(w) for w in model.weights],
        "bias": model.bias,
        "calibration": (
            {"A": model.calibration.a, "B": model.calibration.b}
            if model.calibration is not None
            else None
        ),
    }


def model_from_dict(payload: dict) -> LinearModel:
    try:
        version = payload["version"]
        if version != MODEL_FORMAT_VERSION:
            raise DataFormatError(f"unsupported model version {version}")
        vocabulary = Vocabulary(
            index={str(k): int(v) for k, v in payload["vocabulary"].items()},
            min_count=int(payload["min_count"]),
        )
        calibration = payload.get("calibration")
        return LinearModel(
            weights=np.array(payload["weights"], dtype=float),
            bias=float(payload["bias"]),
            vocabulary=vocabulary,
            mode=Mode.parse(payload["mode"]),
            trained_domain=payload.get("trained_domain"),
            calibration=(
                Calibration(a=float(calibration["A"]), b=float(calibration["B"]))
                if calibration
                else None
            ),
            binary_unigrams=bool(payload.get("binary_unigrams", False)),
            c=float(payload.get("c", DEFAULT_C)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed model file: {exc}") from exc


def save_model(model: LinearModel, target: str | Path | IO[str], provenance: dict | None = None) -> None:
    payload = model_to_dict(model)
    if provenance is not None:
        payload["provenance"] = provenance
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    else:
        target.write(text)


def load_model(source: str | Path | IO[str]) -> LinearModel:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(payload)

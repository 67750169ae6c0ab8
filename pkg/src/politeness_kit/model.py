"""Core data model: parsed requests, annotation batches, scored requests."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping


class Domain(Enum):
    WIKI = "wiki"
    SE = "se"
    OTHER = "other"

    @classmethod
    def parse(cls, value: str) -> "Domain":
        v = value.strip().lower()
        for member in cls:
            if member.value == v:
                return member
        # Friendly aliases seen in data files.
        if v in ("wikipedia",):
            return cls.WIKI
        if v in ("stackexchange", "stack-exchange", "stack_exchange"):
            return cls.SE
        raise ValueError(f"unknown domain {value!r} (expected wiki, se or other)")


class Quartile(Enum):
    """Politeness-score quartiles; Q4 holds the highest scores."""

    Q1 = 1
    Q2 = 2
    Q3 = 3
    Q4 = 4


@dataclass(frozen=True)
class Token:
    """One token of a parsed sentence.

    ``index`` is the 1-based position within its sentence.  The lemma is
    normalized to lowercase at construction so downstream matching never has
    to worry about parser casing conventions.
    """

    index: int
    surface: str
    lemma: str
    upos: str = "_"

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if not self.lemma:
            raise ValueError("token lemma must be non-empty")
        if self.lemma != self.lemma.lower():
            object.__setattr__(self, "lemma", self.lemma.lower())


@dataclass(frozen=True)
class DepEdge:
    """A single dependency edge; head index 0 denotes the sentence root."""

    relation: str
    head: int
    dependent: int

    def __post_init__(self) -> None:
        if not self.relation:
            raise ValueError("dependency relation must be non-empty")
        if self.head < 0:
            raise ValueError(f"head index must be >= 0, got {self.head}")
        if self.dependent < 1:
            raise ValueError(f"dependent index must be >= 1, got {self.dependent}")


@dataclass(frozen=True)
class ParsedSentence:
    tokens: tuple[Token, ...]
    edges: tuple[DepEdge, ...] = ()

    def __post_init__(self) -> None:
        indices = [t.index for t in self.tokens]
        if indices != sorted(indices) or len(set(indices)) != len(indices):
            raise ValueError("tokens must be strictly ordered by index")
        valid = set(indices)
        seen_dependents: set[int] = set()
        for e in self.edges:
            if e.dependent not in valid:
                raise ValueError(f"edge dependent {e.dependent} not in sentence")
            if e.head != 0 and e.head not in valid:
                raise ValueError(f"edge head {e.head} not in sentence")
            if e.dependent in seen_dependents:
                raise ValueError(f"multiple edges for dependent {e.dependent}")
            seen_dependents.add(e.dependent)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    @property
    def lemmas(self) -> tuple[str, ...]:
        return tuple(t.lemma for t in self.tokens)

    def token_at(self, index: int) -> Token:
        for t in self.tokens:
            if t.index == index:
                return t
        raise KeyError(index)


@dataclass(frozen=True)
class ParsedRequest:
    """A request: one or more parsed sentences plus identifying metadata.

    Canonical requests (the annotated kind) have exactly two sentences with
    the second one ending in a question mark; ``is_canonical`` reports
    whether this request has that shape.  Non-canonical requests are still
    accepted everywhere detection or scoring operates.
    """

    id: str
    domain: Domain
    sentences: tuple[ParsedSentence, ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("request id must be non-empty")
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def is_canonical(self) -> bool:
        if len(self.sentences) != 2:
            return False
        last = self.sentences[1].tokens
        return bool(last) and last[-1].surface == "?"

    def all_surfaces(self) -> list[str]:
        return [t.surface for s in self.sentences for t in s.tokens]


@dataclass(frozen=True)
class AnnotationSet:
    """Raw slider scores for one annotation batch.

    ``worker_scores`` maps worker id -> request id -> raw score.  Every
    worker in a batch must have scored every request of that batch (the
    batches are distributed as fixed units, nominally 13 requests x 5
    workers).
    """

    batch_id: str
    worker_scores: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        if not self.batch_id:
            raise ValueError("batch id must be non-empty")
        if not self.worker_scores:
            raise ValueError(f"batch {self.batch_id}: no workers")
        scores = {w: dict(rs) for w, rs in self.worker_scores.items()}
        object.__setattr__(self, "worker_scores", scores)
        request_sets = {w: frozenset(rs) for w, rs in scores.items()}
        reference = next(iter(request_sets.values()))
        if not reference:
            raise ValueError(f"batch {self.batch_id}: no requests")
        for worker, reqs in request_sets.items():
            if reqs != reference:
                raise ValueError(
                    f"batch {self.batch_id}: worker {worker} did not score the "
                    f"same request set as the rest of the batch"
                )

    @property
    def worker_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.worker_scores))

    @property
    def request_ids(self) -> tuple[str, ...]:
        first = next(iter(self.worker_scores.values()))
        return tuple(sorted(first))

    @property
    def n_workers(self) -> int:
        return len(self.worker_scores)

    @property
    def n_requests(self) -> int:
        return len(self.request_ids)


@dataclass(frozen=True)
class ScoredRequest:
    """A request paired with its (human or predicted) politeness score."""

    request: ParsedRequest
    politeness: float
    quartile: Quartile | None = None

    @property
    def id(self) -> str:
        return self.request.id

    def with_quartile(self, quartile: Quartile) -> "ScoredRequest":
        return replace(self, quartile=quartile)

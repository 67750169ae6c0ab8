"""Lexicon loading for the strategy detectors.

Three lexicons drive detectors directly: hedge verbs and the positive and
negative sentiment word lists.  A fourth slot, ``strategy_phrases``, is
reserved for user-supplied phrase lists and is loadable through the same
interface but unused by the built-in matcher catalog.

Files are UTF-8, one term or multiword phrase per line; ``#`` starts a
comment.  Compact defaults ship with the package; point the loader (or the
CLI ``--lexicons`` flag / POLITENESS_KIT_LEXICONS) at a directory with the
same file names to use full-size lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import LexiconError


class LexiconName(Enum):
    HEDGE_VERBS = "hedge_verbs"
    POSITIVE_SENTIMENT = "positive_sentiment"
    NEGATIVE_SENTIMENT = "negative_sentiment"
    STRATEGY_PHRASES = "strategy_phrases"

    @classmethod
    def parse(cls, value: "LexiconName | str") -> "LexiconName":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value:
                return member
        raise LexiconError(f"unknown lexicon name {value!r}")


@dataclass(frozen=True)
class Lexicon:
    name: LexiconName
    terms: frozenset[str]

    def __post_init__(self) -> None:
        if not self.terms:
            raise LexiconError(f"empty lexicon {self.name.value!r}")
        lowered = frozenset(t.lower() for t in self.terms)
        object.__setattr__(self, "terms", lowered)

    def __contains__(self, term: str) -> bool:
        return term.lower() in self.terms

    def __len__(self) -> int:
        return len(self.terms)


LexiconSet = Mapping[LexiconName, Lexicon]

#: Lexicons the built-in matcher catalog requires.
REQUIRED_LEXICONS = (
    LexiconName.HEDGE_VERBS,
    LexiconName.POSITIVE_SENTIMENT,
    LexiconName.NEGATIVE_SENTIMENT,
)


def _load_file(name: LexiconName, path: Path) -> Lexicon:
    if not path.is_file():
        raise LexiconError(f"lexicon {name.value!r}: file not found: {path}")
    terms: set[str] = set()
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            terms.add(" ".join(line.lower().split()))
    if not terms:
        raise LexiconError(f"empty lexicon {name.value!r}: {path}")
    return Lexicon(name=name, terms=frozenset(terms))


def load_lexicons(paths: Mapping[LexiconName | str, str | Path]) -> dict[LexiconName, Lexicon]:
    """Load the named lexicon files; terms are trimmed, lowercased, deduped."""
    loaded: dict[LexiconName, Lexicon] = {}
    for key, path in paths.items():
        name = LexiconName.parse(key)
        loaded[name] = _load_file(name, Path(path))
    return loaded


def load_lexicon_dir(directory: str | Path) -> dict[LexiconName, Lexicon]:
    """Load ``<name>.txt`` files from a directory (required names must exist)."""
    directory = Path(directory)
    paths: dict[LexiconName | str, Path] = {}
    for name in LexiconName:
        candidate = directory / f"{name.value}.txt"
        if name in REQUIRED_LEXICONS or candidate.is_file():
            paths[name] = candidate
    return load_lexicons(paths)


def bundled_lexicons() -> dict[LexiconName, Lexicon]:
    """The compact lexicons shipped inside the package."""
    data_dir = resources.files("politeness_kit") / "data" / "lexicons"
    with resources.as_file(data_dir) as path:
        return load_lexicon_dir(path)

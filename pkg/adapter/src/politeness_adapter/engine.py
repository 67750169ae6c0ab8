"""Dependency-parser engines behind a minimal common interface.

The adapter does not parse text itself; it drives an off-the-shelf
dependency parser.  An engine turns raw text into sentences of
``ParsedToken`` rows (1-based within-sentence indices, head 0 for the
root).  The default engine wraps spaCy; anything implementing the same
``parse`` method can be substituted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence


@dataclass(frozen=True)
class ParsedToken:
    index: int  # 1-based position within its sentence
    surface: str
    lemma: str
    upos: str
    head: int  # within-sentence head index; 0 = root
    deprel: str


class ParserEngine(Protocol):
    name: str
    version: str
    scheme: str  # dependency label scheme, e.g. "ud"

    def parse(self, text: str) -> list[Sequence[ParsedToken]]:
        """Segment and parse ``text``; one list of tokens per sentence."""
        ...


class EngineUnavailable(RuntimeError):
    """The requested parser backend cannot be loaded in this environment."""


class SpacyEngine:
    """spaCy-backed engine (requires an installed pipeline with a parser)."""

    scheme = "ud"

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:
            raise EngineUnavailable(
                "spaCy is not installed; install politeness-parse-adapter[spacy] "
                "and download a pipeline (e.g. en_core_web_sm)"
            ) from exc
        try:
            self._nlp = spacy.load(model)
        except OSError as exc:
            raise EngineUnavailable(
                f"spaCy pipeline {model!r} is not available: {exc}"
            ) from exc
        self.name = f"spacy:{model}"
        self.version = spacy.__version__

    def parse(self, text: str) -> list[Sequence[ParsedToken]]:
        doc = self._nlp(text)
        sentences = []
        for sent in doc.sents:
            rows = []
            offset = sent.start
            for position, token in enumerate(sent, start=1):
                if token.is_space:
                    continue
                if token.dep_.lower() == "root" or token.head is token:
                    head = 0
                else:
                    head = token.head.i - offset + 1
                rows.append(
                    ParsedToken(
                        index=position,
                        surface=token.text,
                        lemma=token.lemma_ or token.text.lower(),
                        upos=token.pos_ or "X",
                        head=head,
                        deprel=token.dep_.lower() or "dep",
                    )
                )
            if rows:
                sentences.append(_reindex(rows))
        return sentences


def _reindex(rows: list[ParsedToken]) -> list[ParsedToken]:
    """Renumber tokens 1..n (spaces removed) keeping head references valid."""
    mapping = {row.index: i + 1 for i, row in enumerate(rows)}
    fixed = []
    for i, row in enumerate(rows):
        head = mapping.get(row.head, 0)
        fixed.append(
            ParsedToken(
                index=i + 1,
                surface=row.surface,
                lemma=row.lemma,
                upos=row.upos,
                head=head if head != i + 1 else 0,
                deprel=row.deprel,
            )
        )
    return fixed


def get_engine(spec: str = "spacy") -> ParserEngine:
    """Instantiate an engine from a spec string like ``spacy`` or ``spacy:<model>``."""
    kind, _, arg = spec.partition(":")
    if kind == "spacy":
        return SpacyEngine(model=arg or "en_core_web_sm")
    raise EngineUnavailable(f"unknown engine {spec!r} (expected spacy[:model])")

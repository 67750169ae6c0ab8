"""Raw request records -> parsed CoNLL-U, plus the request-shape filter.

Input records are JSONL objects {id, domain, text, meta}.  Output is
10-column CoNLL-U where every sentence block carries ``# id = <request-id>``
and the first block of a request adds ``# domain = ...`` and
``# meta.<key> = ...`` comments, which is exactly what the downstream
toolkit ingests.  Records the parser cannot handle are skipped and logged,
never silently dropped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

from .engine import ParsedToken, ParserEngine

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawRecord:
    id: str
    domain: str
    text: str
    meta: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ParsedRecord:
    id: str
    domain: str
    meta: Mapping[str, str]
    sentences: tuple[Sequence[ParsedToken], ...]


@dataclass(frozen=True)
class ConversionReport:
    n_input: int
    n_parsed: int
    skipped: tuple[tuple[str, str], ...]  # (record id, reason)


def read_records(source: str | Path | IO[str]) -> Iterator[RawRecord]:
    """Stream JSONL records; malformed lines raise ValueError with location."""

    def rows(handle: IO[str], path: str | None) -> Iterator[RawRecord]:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path or '<stream>'}:{line_no}"
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: bad JSON: {exc}") from exc
            if "provenance" in payload:
                continue
            try:
                yield RawRecord(
                    id=str(payload["id"]),
                    domain=str(payload.get("domain", "other")),
                    text=str(payload["text"]),
                    meta={str(k): str(v) for k, v in (payload.get("meta") or {}).items()},
                )
            except KeyError as exc:
                raise ValueError(f"{where}: missing field {exc}") from exc

    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            yield from rows(handle, str(source))
    else:
        yield from rows(source, getattr(source, "name", None))


def parse_records(
    records: Iterable[RawRecord], engine: ParserEngine
) -> tuple[list[ParsedRecord], ConversionReport]:
    """Run the parser over records; skip-and-log anything it cannot handle."""
    parsed: list[ParsedRecord] = []
    skipped: list[tuple[str, str]] = []
    n_input = 0
    for record in records:
        n_input += 1
        if not record.text.strip():
            skipped.append((record.id, "empty text"))
            log.warning("record %s skipped: empty text", record.id)
            continue
        try:
            sentences = engine.parse(record.text)
        except Exception as exc:  # parser failure must never kill the batch
            skipped.append((record.id, f"parser failure: {exc}"))
            log.warning("record %s skipped: parser failure: %s", record.id, exc)
            continue
        sentences = [s for s in sentences if s]
        if not sentences:
            skipped.append((record.id, "no sentences"))
            log.warning("record %s skipped: parser produced no sentences", record.id)
            continue
        if any("\t" in t.surface or "\n" in t.surface for s in sentences for t in s):
            skipped.append((record.id, "token contains tab/newline"))
            log.warning("record %s skipped: unencodable token", record.id)
            continue
        parsed.append(
            ParsedRecord(
                id=record.id,
                domain=record.domain,
                meta=dict(record.meta),
                sentences=tuple(sentences),
            )
        )
    return parsed, ConversionReport(
        n_input=n_input, n_parsed=len(parsed), skipped=tuple(skipped)
    )


def write_conllu(
    parsed: Iterable[ParsedRecord], target: str | Path | IO[str], engine: ParserEngine
) -> int:
    """Emit parsed records as CoNLL-U; returns the number written."""

    def emit(out: IO[str]) -> int:
        count = 0
        stamped = False
        for record in parsed:
            count += 1
            for si, sentence in enumerate(record.sentences):
                if not stamped:
                    # Provenance comments ride on the first sentence block;
                    # the downstream reader ignores unknown comment keys.
                    out.write(f"# parser = {engine.name} {engine.version}\n")
                    out.write(f"# scheme = {engine.scheme}\n")
                    stamped = True
                out.write(f"# id = {record.id}\n")
                if si == 0:
                    out.write(f"# domain = {record.domain}\n")
                    for key in sorted(record.meta):
                        out.write(f"# meta.{key} = {record.meta[key]}\n")
                for token in sentence:
                    out.write(
                        "\t".join(
                            (
                                str(token.index),
                                token.surface,
                                token.lemma or token.surface.lower(),
                                token.upos or "X",
                                "_",
                                "_",
                                str(token.head),
                                token.deprel or "dep",
                                "_",
                                "_",
                            )
                        )
                        + "\n"
                    )
                out.write("\n")
        return count

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as handle:
            return emit(handle)
    return emit(target)


def parse_to_conllu(
    records: Iterable[RawRecord],
    engine: ParserEngine,
    target: str | Path | IO[str],
) -> ConversionReport:
    """Parse records and write the CoNLL-U file in one pass."""
    parsed, report = parse_records(records, engine)
    write_conllu(parsed, target, engine)
    return report


REASON_SENTENCE_COUNT = "sentence-count"
REASON_NO_QUESTION_MARK = "no-question-mark"


@dataclass(frozen=True)
class FilterResult:
    kept: tuple[ParsedRecord, ...]
    rejected: tuple[tuple[str, str], ...]  # (record id, reason)

    @property
    def n_total(self) -> int:
        return len(self.kept) + len(self.rejected)


def filter_requests(parsed: Iterable[ParsedRecord]) -> FilterResult:
    """Keep records with exactly two sentences, the second ending in '?'.

    The trailing sentence is the actual request; the leading one is its
    context.  Segmentation is whatever the parser produced.
    """
    kept: list[ParsedRecord] = []
    rejected: list[tuple[str, str]] = []
    for record in parsed:
        if len(record.sentences) != 2:
            rejected.append((record.id, REASON_SENTENCE_COUNT))
            continue
        last_token = record.sentences[1][-1]
        if last_token.surface != "?":
            rejected.append((record.id, REASON_NO_QUESTION_MARK))
            continue
        kept.append(record)
    return FilterResult(kept=tuple(kept), rejected=tuple(rejected))

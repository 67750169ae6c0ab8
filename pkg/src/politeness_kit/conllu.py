"""Streaming CoNLL-U ingestion and emission for parsed requests.

The on-disk convention: standard 10-column CoNLL-U sentence blocks, where
every block carries a ``# id = <request-id>`` comment.  Consecutive blocks
sharing an id form one request.  ``# domain = ...`` and ``# meta.<key> = ...``
comments attach request-level metadata and may appear on any block of the
request (first occurrence wins).  Multiword-token ranges and empty nodes are
skipped on read; the writer never emits them.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataFormatError
from .model import DepEdge, Domain, ParsedRequest, ParsedSentence, Token

N_COLUMNS = 10


def _parse_comment(line: str) -> tuple[str, str] | None:
    body = line[1:].strip()
    if "=" not in body:
        return None
    key, value = body.split("=", 1)
    return key.strip(), value.strip()


def _finish_sentence(
    rows: list[tuple[int, str, str, str, int, str]],
    path: str | None,
    line_no: int,
) -> ParsedSentence:
    tokens = tuple(Token(index=i, surface=f, lemma=l, upos=u) for i, f, l, u, _, _ in rows)
    edges = tuple(DepEdge(relation=rel, head=h, dependent=i) for i, _, _, _, h, rel in rows)
    try:
        return ParsedSentence(tokens=tokens, edges=edges)
    except ValueError as exc:
        raise DataFormatError(str(exc), path=path, line=line_no) from exc


def read_requests(source: str | Path | IO[str]) -> Iterator[ParsedRequest]:
    """Yield ``ParsedRequest`` objects from a CoNLL-U file, streaming.

    Memory use is bounded by the largest single request, so corpora with
    hundreds of thousands of requests can be processed on a desktop.
    Malformed lines raise :class:`DataFormatError` naming file and line.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            yield from _read_stream(handle, str(source))
    else:
        name = getattr(source, "name", None)
        yield from _read_stream(source, name if isinstance(name, str) else None)


def _read_stream(handle: IO[str], path: str | None) -> Iterator[ParsedRequest]:
    current_id: str | None = None
    current_domain: str | None = None
    current_meta: dict[str, str] = {}
    sentences: list[ParsedSentence] = []

    pending_comments: dict[str, str] = {}
    pending_meta: dict[str, str] = {}
    rows: list[tuple[int, str, str, str, int, str]] = []
    line_no = 0

    def flush_request() -> ParsedRequest | None:
        nonlocal current_id, current_domain, current_meta, sentences
        if current_id is None:
            return None
        domain = Domain.parse(current_domain) if current_domain else Domain.OTHER
        request = ParsedRequest(
            id=current_id,
            domain=domain,
            sentences=tuple(sentences),
            metadata=dict(current_meta),
        )
        current_id, current_domain, current_meta, sentences = None, None, {}, []
        return request

    def flush_sentence() -> Iterator[ParsedRequest]:
        nonlocal rows, pending_comments, pending_meta
        nonlocal current_id, current_domain, current_meta, sentences
        if not rows and not pending_comments and not pending_meta:
            return
        rid = pending_comments.get("id")
        if rid is None:
            raise DataFormatError("sentence block lacks a '# id = ...' comment", path, line_no)
        if not rows:
            raise DataFormatError("sentence block has comments but no token rows", path, line_no)
        if rid != current_id:
            finished = flush_request()
            if finished is not None:
                yield finished
            current_id = rid
        if current_domain is None and "domain" in pending_comments:
            current_domain = pending_comments["domain"]
        for key, value in pending_meta.items():
            current_meta.setdefault(key, value)
        sentences.append(_finish_sentence(rows, path, line_no))
        rows, pending_comments, pending_meta = [], {}, {}

    for raw in handle:
        line_no += 1
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            yield from flush_sentence()
            continue
        if line.startswith("#"):
            parsed = _parse_comment(line)
            if parsed is None:
                continue
            key, value = parsed
            if key.startswith("meta."):
                pending_meta[key[len("meta."):]] = value
            else:
                pending_comments[key] = value
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise DataFormatError(
                f"expected {N_COLUMNS} tab-separated columns, got {len(cols)}", path, line_no
            )
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            continue  # multiword-token range / empty node
        try:
            index = int(token_id)
        except ValueError as exc:
            raise DataFormatError(f"bad token id {token_id!r}", path, line_no) from exc
        form, lemma, upos = cols[1], cols[2], cols[3]
        if not form or form == "_":
            raise DataFormatError("FORM column is empty", path, line_no)
        if not lemma:
            raise DataFormatError("LEMMA column is empty", path, line_no)
        if lemma == "_":
            lemma = form.lower()
        try:
            head = int(cols[6])
        except ValueError as exc:
            raise DataFormatError(f"bad HEAD value {cols[6]!r}", path, line_no) from exc
        deprel = cols[7] if cols[7] and cols[7] != "_" else "dep"
        try:
            rows.append((index, form, lemma, upos, head, deprel))
        except ValueError as exc:  # pragma: no cover - Token raises in flush
            raise DataFormatError(str(exc), path, line_no) from exc

    yield from flush_sentence()
    finished = flush_request()
    if finished is not None:
        yield finished


def write_requests(requests: Iterable[ParsedRequest], target: str | Path | IO[str]) -> int:
    """Write requests as CoNLL-U; returns the number of requests written."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as handle:
            return _write_stream(requests, handle)
    return _write_stream(requests, target)


def _write_stream(requests: Iterable[ParsedRequest], out: IO[str]) -> int:
    count = 0
    for request in requests:
        count += 1
        head_by_dep = {}
        for si, sentence in enumerate(request.sentences):
            out.write(f"# id = {request.id}\n")
            if si == 0:
                out.write(f"# domain = {request.domain.value}\n")
                for key in sorted(request.metadata):
                    out.write(f"# meta.{key} = {request.metadata[key]}\n")
            head_by_dep = {e.dependent: (e.head, e.relation) for e in sentence.edges}
            for token in sentence.tokens:
                head, rel = head_by_dep.get(token.index, (0, "dep"))
                out.write(
                    "\t".join(
                        (
                            str(token.index),
                            token.surface,
                            token.lemma,
                            token.upos or "_",
                            "_",
                            "_",
                            str(head),
                            rel,
                            "_",
                            "_",
                        )
                    )
                    + "\n"
                )
            out.write("\n")
    return count


def requests_to_string(requests: Iterable[ParsedRequest]) -> str:
    buf = io.StringIO()
    write_requests(requests, buf)
    return buf.getvalue()

"""CLI: convert raw request JSONL into parsed CoNLL-U for the toolkit."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from . import __version__
from .convert import filter_requests, parse_records, read_records, write_conllu
from .engine import EngineUnavailable, get_engine

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def build_parser() -> _Parser:
    parser = _Parser(prog="politeness-parse-adapter", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=f"politeness-parse-adapter {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="parse raw JSONL records into CoNLL-U")
    p.add_argument("--in", dest="in_path", required=True, help="JSONL of {id, domain, text, meta}")
    p.add_argument("--out", required=True, help="CoNLL-U output path")
    p.add_argument("--engine", default="spacy", help="parser engine, e.g. spacy:en_core_web_sm")
    p.add_argument(
        "--filter",
        action="store_true",
        help="keep only two-sentence records whose second sentence ends with '?'",
    )
    p.add_argument("--rejects", help="write skip/rejection log as JSONL here")
    return parser


def run_convert(args: argparse.Namespace, engine=None) -> int:
    engine = engine or get_engine(args.engine)
    parsed, report = parse_records(read_records(args.in_path), engine)
    rejections = [{"id": rid, "reason": reason, "stage": "parse"} for rid, reason in report.skipped]
    if args.filter:
        result = filter_requests(parsed)
        parsed = list(result.kept)
        rejections.extend(
            {"id": rid, "reason": reason, "stage": "filter"}
            for rid, reason in result.rejected
        )
    n = write_conllu(parsed, args.out, engine)
    if args.rejects:
        with open(args.rejects, "w", encoding="utf-8") as handle:
            for row in rejections:
                handle.write(json.dumps(row, sort_keys=True) + "\n")
    print(
        f"convert: {report.n_input} records in, {n} written, "
        f"{len(rejections)} skipped/rejected -> {args.out}"
    )
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run_convert(args)
    except EngineUnavailable as exc:
        print(f"politeness-parse-adapter: error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (OSError, ValueError) as exc:
        print(f"politeness-parse-adapter: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())

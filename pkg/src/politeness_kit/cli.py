"""Command-line front end.

Every artifact embeds the tool version, the fully resolved configuration and
its hash, and no timestamps, so identical inputs plus identical flags (and
seed) produce byte-identical outputs.  Exit codes: 0 success, 1 usage error,
2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .annotation import (
    assign_quartiles,
    normalize_and_aggregate,
    pairwise_agreement,
    read_annotations,
    read_scores_jsonl,
)
from .classifier import (
    Label,
    Mode,
    evaluate_cross_domain,
    evaluate_in_domain,
    featurize,
    build_vocabulary,
    load_model,
    save_model,
    score_requests,
    train_calibrated,
)
from .conllu import read_requests
from .errors import PolitenessKitError
from .lexicons import bundled_lexicons, load_lexicon_dir
from .model import Quartile, ScoredRequest
from .stats import group_compare, strategy_table, strategy_table_to_csv, wilcoxon_signed_rank
from .strategies import MatchConfig, catalog, detect_strategies

LEXICON_ENV_VAR = "POLITENESS_KIT_LEXICONS"

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _provenance(command: str, args: argparse.Namespace) -> dict:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func"
    }
    canonical = json.dumps(config, sort_keys=True)
    return {
        "tool": "politeness-kit",
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
    }


def _resolve_lexicons(args: argparse.Namespace):
    directory = getattr(args, "lexicons", None) or os.environ.get(LEXICON_ENV_VAR)
    if directory:
        return load_lexicon_dir(directory)
    return bundled_lexicons()


def _match_config(args: argparse.Namespace) -> MatchConfig:
    # Both supported schemes label nominal subjects with an nsubj prefix;
    # the flag is recorded in provenance and reserved for divergent schemes.
    return MatchConfig()


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_jsonl(path: str, provenance: dict, rows) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({"provenance": provenance}, sort_keys=True) + "\n")
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
    return count


def _load_scored_requests(
    conllu_path: str, scores_path: str, score_field: str = "politeness"
) -> list[ScoredRequest]:
    """Join a CoNLL-U corpus with its scores file into ScoredRequests."""
    scores = read_scores_jsonl(scores_path)
    scored: list[ScoredRequest] = []
    missing: list[str] = []
    for request in read_requests(conllu_path):
        if request.id not in scores:
            missing.append(request.id)
            continue
        value, quartile = scores[request.id]
        scored.append(
            ScoredRequest(request=request, politeness=value, quartile=quartile)
        )
    if missing:
        raise PolitenessKitError(
            f"{len(missing)} request(s) have no score in {scores_path}, "
            f"e.g. {missing[:3]}"
        )
    if not scored:
        raise PolitenessKitError("no requests matched between corpus and scores")
    if any(s.quartile is None for s in scored):
        assignment = assign_quartiles([(s.id, s.politeness) for s in scored])
        scored = [s.with_quartile(assignment[s.id]) for s in scored]
    return scored


# --------------------------------------------------------------------------
# Subcommands


def _cmd_aggregate(args: argparse.Namespace) -> int:
    batches = read_annotations(args.annotations)
    politeness = normalize_and_aggregate(batches)
    quartiles = assign_quartiles(sorted(politeness.items()))
    rows = (
        {"id": rid, "politeness": politeness[rid], "quartile": quartiles[rid].name}
        for rid in sorted(politeness)
    )
    n = _write_jsonl(args.out, _provenance("aggregate", args), rows)
    print(f"aggregate: wrote {n} scored requests to {args.out}")
    return 0


def _cmd_agreement(args: argparse.Namespace) -> int:
    if args.randomized and args.seed is None:
        raise PolitenessKitError("--randomized requires --seed")
    batches = read_annotations(args.annotations)
    per_batch = []
    observed = []
    baseline_means = []
    for batch in batches:
        result = pairwise_agreement(
            batch,
            randomized=args.randomized,
            resamples=args.resamples,
            seed=args.seed,
        )
        entry = {
            "batch_id": batch.batch_id,
            "mean_pairwise_correlation": result.mean_pairwise_correlation,
            "n_pairs": result.n_pairs,
            "excluded_workers": list(result.excluded_workers),
        }
        observed.append(result.mean_pairwise_correlation)
        if result.baseline_distribution is not None:
            baseline_mean = sum(result.baseline_distribution) / len(
                result.baseline_distribution
            )
            entry["baseline_mean"] = baseline_mean
            baseline_means.append(baseline_mean)
        per_batch.append(entry)
    payload: dict = {
        "provenance": _provenance("agreement", args),
        "batches": per_batch,
        "mean_over_batches": sum(observed) / len(observed),
    }
    if baseline_means:
        payload["baseline_mean_over_batches"] = sum(baseline_means) / len(baseline_means)
        if len(observed) > 1:
            payload["observed_vs_baseline"] = wilcoxon_signed_rank(
                observed, baseline_means, "greater"
            ).as_dict()
    _write_json(args.out, payload)
    print(f"agreement: {len(per_batch)} batches -> {args.out}")
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    lexicons = _resolve_lexicons(args)
    config = _match_config(args)
    if args.catalog_out:
        _write_json(
            args.catalog_out,
            {"provenance": _provenance("detect", args), "catalog": catalog()},
        )

    def rows():
        for request in read_requests(args.in_path):
            profile = detect_strategies(request, lexicons, config)
            yield {"id": request.id, "strategies": profile.as_dict()}

    n = _write_jsonl(args.out, _provenance("detect", args), rows())
    print(f"detect: wrote {n} profiles to {args.out}")
    return 0


def _cmd_table(args: argparse.Namespace) -> int:
    lexicons = _resolve_lexicons(args)
    config = _match_config(args)
    scored = _load_scored_requests(args.in_path, args.scores)
    profiles = {
        s.id: detect_strategies(s.request, lexicons, config) for s in scored
    }
    rows = strategy_table(scored, profiles)
    _write_json(
        args.out,
        {
            "provenance": _provenance("table", args),
            "n": len(scored),
            "rows": [r.as_dict() for r in rows],
        },
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as handle:
            strategy_table_to_csv(rows, handle)
    print(f"table: {len(scored)} requests -> {args.out}")
    return 0


def _train_examples(scored, lexicons, mode, config, min_count, binary_unigrams):
    classed = [s for s in scored if s.quartile in (Quartile.Q1, Quartile.Q4)]
    if not classed:
        raise PolitenessKitError("no top/bottom-quartile requests to train on")
    requests = [s.request for s in classed]
    vocabulary = build_vocabulary(requests, min_count)
    examples = []
    for s in classed:
        profile = (
            detect_strategies(s.request, lexicons, config) if mode is Mode.LING else None
        )
        label = Label.POLITE if s.quartile is Quartile.Q4 else Label.IMPOLITE
        examples.append(
            (featurize(s.request, vocabulary, profile, mode, binary_unigrams), label)
        )
    return vocabulary, examples


def _cmd_train(args: argparse.Namespace) -> int:
    lexicons = _resolve_lexicons(args)
    config = _match_config(args)
    mode = Mode.parse(args.mode)
    scored = _load_scored_requests(args.in_path, args.scores)
    vocabulary, examples = _train_examples(
        scored, lexicons, mode, config, args.min_count, args.binary_unigrams
    )
    domain = args.domain or scored[0].request.domain.value
    model = train_calibrated(
        examples,
        vocabulary,
        mode,
        c=args.c,
        seed=args.seed,
        trained_domain=domain,
        binary_unigrams=args.binary_unigrams,
    )
    save_model(model, args.out, provenance=_provenance("train", args))
    print(
        f"train: {len(examples)} examples, |vocab|={len(vocabulary)}, "
        f"mode={mode.value} -> {args.out}"
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    lexicons = _resolve_lexicons(args)
    config = _match_config(args)
    mode = Mode.parse(args.mode)
    cross = bool(args.train_in or args.test_in)
    if cross:
        if not (args.train_in and args.train_scores and args.test_in and args.test_scores):
            raise PolitenessKitError(
                "cross-domain eval needs --train-in/--train-scores/--test-in/--test-scores"
            )
        train_corpus = _load_scored_requests(args.train_in, args.train_scores)
        test_corpus = _load_scored_requests(args.test_in, args.test_scores)
        report = evaluate_cross_domain(
            train_corpus,
            test_corpus,
            lexicons,
            mode,
            min_count=args.min_count,
            c=args.c,
            binary_unigrams=args.binary_unigrams,
            config=config,
        )
    else:
        if not (args.in_path and args.scores):
            raise PolitenessKitError("in-domain eval needs --in and --scores")
        if args.protocol.startswith("kfold") and args.seed is None:
            raise PolitenessKitError("k-fold evaluation requires --seed")
        corpus = _load_scored_requests(args.in_path, args.scores)
        report = evaluate_in_domain(
            corpus,
            lexicons,
            mode,
            protocol=args.protocol,
            seed=args.seed,
            min_count=args.min_count,
            c=args.c,
            binary_unigrams=args.binary_unigrams,
            config=config,
        )
    _write_json(
        args.out,
        {"provenance": _provenance("eval", args), "report": report.as_dict()},
    )
    print(
        f"eval: {report.protocol_detail} mode={mode.value} "
        f"accuracy={report.accuracy:.4f} (n={report.n}) -> {args.out}"
    )
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    lexicons = _resolve_lexicons(args) if model.mode is Mode.LING else None
    config = _match_config(args)

    def rows():
        for rid, prediction in score_requests(
            model, read_requests(args.in_path), lexicons, config
        ):
            yield {
                "id": rid,
                "score": prediction.score,
                "class": "polite" if prediction.label is Label.POLITE else "impolite",
                "margin": prediction.margin,
            }

    n = _write_jsonl(args.out, _provenance("score", args), rows())
    print(f"score: wrote {n} predictions to {args.out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    if args.score_source == "human":
        scored = _load_scored_requests(args.in_path, args.scores)
    else:
        scored = []
        # Predicted-score files carry {id, score, ...} rows.
        predicted: dict[str, float] = {}
        with open(args.scores, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                if "provenance" in row:
                    continue
                predicted[row["id"]] = float(row["score"])
        for request in read_requests(args.in_path):
            if request.id in predicted:
                scored.append(
                    ScoredRequest(request=request, politeness=predicted[request.id])
                )
        if not scored:
            raise PolitenessKitError("no requests matched between corpus and scores")
    comparison = group_compare(
        scored,
        group_key=args.group_key,
        reference=args.reference,
        score_source=args.score_source,
    )
    _write_json(
        args.out,
        {"provenance": _provenance("compare", args), "comparison": comparison.as_dict()},
    )
    print(
        f"compare: {comparison.n_total} requests in {len(comparison.groups)} "
        f"groups -> {args.out}"
    )
    return 0


# --------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="politeness-kit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"politeness-kit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_lexicon_flags(p: _Parser) -> None:
        p.add_argument("--lexicons", help=f"lexicon directory (or ${LEXICON_ENV_VAR})")
        p.add_argument(
            "--parse-scheme",
            choices=("ud", "stanford"),
            default="ud",
            help="dependency label scheme of the input parses",
        )

    p = sub.add_parser("aggregate", help="normalize annotations into politeness scores")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("agreement", help="inter-annotator agreement per batch")
    p.add_argument("--annotations", required=True)
    p.add_argument("--randomized", action="store_true", help="add a chance baseline")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_agreement)

    p = sub.add_parser("detect", help="strategy profiles for parsed requests")
    p.add_argument("--in", dest="in_path", required=True)
    add_lexicon_flags(p)
    p.add_argument("--catalog-out", help="also write the matcher catalog JSON here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("table", help="per-strategy politeness table")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--scores", required=True)
    add_lexicon_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also write the table as CSV here")
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("train", help="train a calibrated politeness classifier")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--mode", choices=("bow", "ling"), required=True)
    p.add_argument("--c", type=float, default=1.0, help="hinge-loss weight")
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--binary-unigrams", action="store_true")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--domain", help="domain label stored in the model")
    add_lexicon_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="in-domain CV or cross-domain evaluation")
    p.add_argument("--in", dest="in_path")
    p.add_argument("--scores")
    p.add_argument("--train-in")
    p.add_argument("--train-scores")
    p.add_argument("--test-in")
    p.add_argument("--test-scores")
    p.add_argument("--mode", choices=("bow", "ling"), required=True)
    p.add_argument("--protocol", default="kfold:10", help="kfold:<k> or loo")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--binary-unigrams", action="store_true")
    p.add_argument("--seed", type=int)
    add_lexicon_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("score", help="calibrated scores for new requests")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    add_lexicon_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("compare", help="politeness by metadata-defined groups")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--group-key", required=True)
    p.add_argument("--reference")
    p.add_argument(
        "--score-source",
        choices=("human", "predicted"),
        default="human",
        help="whether the scores file holds human politeness or predicted scores",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PolitenessKitError, ValueError, OSError, KeyError) as exc:
        print(f"politeness-kit {args.command}: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: decode, score-pair, eval-metric, dump-plan."""

from __future__ import annotations

import argparse
import os
import shlex
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy

import scipy

from . import __version__
from .adapter import HttpAdapterClient, StdioAdapterClient
from .decoder import (CandidateSet, PairEvaluationError, SelectionResult,
                      UtilityMatrix, compute_baseline_matrix,
                      compute_utility_matrix, select_from_matrix)
from .documents import Document, WeightScheme
from .errors import AdapterError, DocMbrError
from .evaluation import (kendall_tau, load_human_scores, load_references,
                         load_system_outputs, pearson, system_score)
from .jsonio import config_fingerprint, read_candidate_sets, to_json, write_jsonl
from .scorers import (AdapterScore, ChrF, EmbeddingCosine, EmbeddingTable,
                      ExactMatch, SentenceBleu, SentenceUtility, TokenF1)
from .transport import EntropicParams
from .utility import DocUtilityConfig, Formulation, PairScoreCache, doc_utility_plan

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ADAPTER = 4

ENDPOINT_ENV_VAR = "DOCMBR_ADAPTER_ENDPOINT"

UTILITIES = ("token-f1", "sentence-bleu", "chrf", "exact-match",
             "embedding-cosine", "adapter")


class ConfigError(Exception):
    """Invalid flag combination or unusable referenced path."""


def _add_utility_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("utility configuration")
    group.add_argument("--utility", choices=UTILITIES, default="token-f1",
                       help="sentence-level utility function (default: token-f1)")
    group.add_argument("--formulation", choices=[f.value for f in Formulation],
                       default="wd", help="transport objective (default: wd)")
    group.add_argument("--weights", choices=[w.value for w in WeightScheme],
                       default="uniform", help="segment weight scheme (default: uniform)")
    group.add_argument("--epsilon", type=float, default=0.1,
                       help="entropic regularization weight for ewd (default: 0.1)")
    group.add_argument("--sinkhorn-max-iterations", type=int, default=10_000)
    group.add_argument("--sinkhorn-tolerance", type=float, default=1e-9)
    group.add_argument("--include-kl", action=argparse.BooleanOptionalAction,
                       default=True,
                       help="include the KL penalty in ewd utilities (default: on)")
    group.add_argument("--language", default="en",
                       help="language tag steering segmentation/tokenization (default: en)")
    group.add_argument("--tokenizer", choices=["whitespace", "char"], default=None,
                       help="token unit for lexical scorers "
                            "(default: char for ja, whitespace otherwise)")
    group.add_argument("--embeddings", type=Path, default=None,
                       help="embedding table JSONL for embedding-cosine")
    group.add_argument("--adapter-endpoint", default=None,
                       help=f"metric adapter base URL (or set {ENDPOINT_ENV_VAR})")
    group.add_argument("--adapter-command", default=None,
                       help="spawn this command and talk the stdio protocol instead of HTTP")
    group.add_argument("--adapter-metric", default="stub")
    group.add_argument("--adapter-timeout", type=float, default=10.0)
    group.add_argument("--adapter-retries", type=int, default=2)
    group.add_argument("--adapter-batch-size", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docmbr",
        description="Document-level MBR decoding with optimal-transport utilities.")
    parser.add_argument("--version", action="version", version=f"docmbr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    decode = sub.add_parser("decode", help="select the best candidate per instance")
    decode.add_argument("--input", type=Path, required=True,
                        help="instances JSONL (candidates or candidates_segmented)")
    decode.add_argument("--output", type=Path, required=True,
                        help="selection JSONL output path")
    decode.add_argument("--manifest", type=Path, default=None,
                        help="run manifest path (default: <output>.manifest.json)")
    decode.add_argument("--dump-matrix", type=Path, default=None,
                        help="also write every utility matrix to this JSON file")
    decode.add_argument("--baseline", action="store_true",
                        help="plain MBR on whole documents, no segmentation or transport")
    decode.add_argument("--parallelism", type=int, default=1,
                        help="worker threads across instances (default: 1)")
    decode.add_argument("--seed", type=int, default=None,
                        help="recorded in the manifest; the engine is deterministic")
    decode.add_argument("--config", type=Path, default=None,
                        help="TOML file with defaults for any long flag; flags win")
    _add_utility_flags(decode)
    decode.set_defaults(func=cmd_decode)

    score = sub.add_parser("score-pair", help="utility of one document pair")
    score.add_argument("--hyp", required=True, help="hypothesis document text")
    score.add_argument("--ref", required=True, help="reference document text")
    score.add_argument("--config", type=Path, default=None)
    _add_utility_flags(score)
    score.set_defaults(func=cmd_score_pair)

    dump = sub.add_parser("dump-plan",
                          help="solver plan (coupling, objective, duals) for one pair")
    dump.add_argument("--hyp", required=True)
    dump.add_argument("--ref", required=True)
    dump.add_argument("--output", type=Path, default=None,
                      help="write the plan JSON here instead of stdout")
    dump.add_argument("--config", type=Path, default=None)
    _add_utility_flags(dump)
    dump.set_defaults(func=cmd_dump_plan)

    evaluate = sub.add_parser("eval-metric",
                              help="score systems and correlate with human judgments")
    evaluate.add_argument("--hypotheses", type=Path, required=True,
                          help='JSONL rows {"system", "id", "text"}')
    evaluate.add_argument("--references", type=Path, required=True,
                          help='JSONL rows {"id", "text"}')
    evaluate.add_argument("--human", type=Path, required=True,
                          help='CSV rows "system,score"')
    evaluate.add_argument("--output-csv", type=Path, required=True)
    evaluate.add_argument("--summary", type=Path, required=True,
                          help="summary JSON with the correlation")
    evaluate.add_argument("--config", type=Path, default=None)
    _add_utility_flags(evaluate)
    evaluate.set_defaults(func=cmd_eval_metric)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Pre-read --config and install its values as parser defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", type=Path, default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is None:
        return
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(known.config, "rb") as handle:
            data = tomllib.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config file {known.config}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML in {known.config}: {err}") from err
    defaults = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        defaults[dest] = Path(value) if dest in {
            "input", "output", "manifest", "dump_matrix", "embeddings",
            "hypotheses", "references", "human", "output_csv", "summary",
        } else value
    known_dests = {action.dest for sub_action in parser._subparsers._group_actions
                   for sub in sub_action.choices.values()
                   for action in sub._actions}
    unknown = set(defaults) - known_dests
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for sub_action in parser._subparsers._group_actions:
        for sub in sub_action.choices.values():
            sub.set_defaults(**{k: v for k, v in defaults.items()
                                if k in {a.dest for a in sub._actions}})


def _check_input_path(path: Path | None, what: str) -> None:
    if path is not None and not path.exists():
        raise ConfigError(f"{what} path does not exist: {path}")


def build_scorer(args) -> SentenceUtility:
    tokenizer = args.tokenizer
    if tokenizer is None:
        tokenizer = "char" if args.language.lower().startswith("ja") else "whitespace"
    if args.utility == "token-f1":
        return TokenF1(tokenizer=tokenizer)
    if args.utility == "sentence-bleu":
        return SentenceBleu(tokenizer=tokenizer)
    if args.utility == "chrf":
        return ChrF()
    if args.utility == "exact-match":
        return ExactMatch()
    if args.utility == "embedding-cosine":
        if args.embeddings is None:
            raise ConfigError("--embeddings is required with --utility embedding-cosine")
        _check_input_path(args.embeddings, "embeddings")
        return EmbeddingCosine(EmbeddingTable.load(args.embeddings))
    if args.utility == "adapter":
        if args.adapter_command:
            client = StdioAdapterClient(shlex.split(args.adapter_command),
                                        metric=args.adapter_metric,
                                        retries=args.adapter_retries)
        else:
            endpoint = args.adapter_endpoint or os.environ.get(ENDPOINT_ENV_VAR)
            if not endpoint:
                raise ConfigError("--utility adapter needs --adapter-endpoint, "
                                  f"--adapter-command, or {ENDPOINT_ENV_VAR}")
            client = HttpAdapterClient(endpoint, metric=args.adapter_metric,
                                       timeout=args.adapter_timeout,
                                       retries=args.adapter_retries)
        return AdapterScore(client, metric=args.adapter_metric,
                            batch_size=args.adapter_batch_size)
    raise ConfigError(f"unknown utility {args.utility!r}")


def build_utility_config(args) -> DocUtilityConfig:
    formulation = Formulation(args.formulation)
    entropic = None
    if formulation is Formulation.EWD:
        if args.epsilon <= 0:
            raise ConfigError("--epsilon must be > 0 for ewd")
        entropic = EntropicParams(epsilon=args.epsilon,
                                  max_iterations=args.sinkhorn_max_iterations,
                                  tolerance=args.sinkhorn_tolerance)
    return DocUtilityConfig(sent_utility=build_scorer(args),
                            formulation=formulation,
                            weight_scheme=WeightScheme(args.weights),
                            entropic=entropic,
                            include_kl_in_utility=args.include_kl)


def _run_description(args, cfg: DocUtilityConfig | None, command: str) -> dict:
    desc = {"command": command, "language": args.language}
    if cfg is not None:
        desc.update(cfg.describe())
    if getattr(args, "baseline", False):
        desc["baseline"] = True
        desc["sent_utility"] = build_scorer(args).cache_key
        desc["weight_scheme"] = args.weights
    return desc


def _decode_instance(cands: CandidateSet, cfg: DocUtilityConfig | None,
                     scorer: SentenceUtility,
                     baseline: bool) -> tuple[SelectionResult, UtilityMatrix]:
    cache = PairScoreCache()  # per decoding instance: sentences recur across candidates
    if baseline:
        matrix = compute_baseline_matrix(cands, scorer, cache)
    else:
        assert cfg is not None
        matrix = compute_utility_matrix(cands, cfg, cache)
    return select_from_matrix(matrix), matrix


def cmd_decode(args) -> int:
    _check_input_path(args.input, "input")
    scorer = build_scorer(args)
    cfg = None if args.baseline else build_utility_config(args)
    if args.parallelism < 1:
        raise ConfigError("--parallelism must be >= 1")
    scheme = WeightScheme(args.weights)
    instances = read_candidate_sets(args.input, args.language, scheme)
    description = _run_description(args, cfg, "decode")
    fingerprint = config_fingerprint(description)

    started = time.monotonic()
    if args.parallelism == 1:
        outcomes = [_decode_instance(inst, cfg, scorer, args.baseline)
                    for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=args.parallelism) as pool:
            futures = [pool.submit(_decode_instance, inst, cfg, scorer, args.baseline)
                       for inst in instances]
            outcomes = [f.result() for f in futures]  # input order, deterministic
    elapsed = time.monotonic() - started

    rows = []
    for inst, (result, _) in zip(instances, outcomes):
        rows.append({
            "id": inst.instance_id,
            "selected_index": result.selected_index,
            "selected_text": inst.candidates[result.selected_index].text,
            "expected_utilities": list(result.expected_utilities),
            "config_fingerprint": fingerprint,
        })
    write_jsonl(args.output, rows)

    if args.dump_matrix is not None:
        matrices = {inst.instance_id: [[float(v) for v in row]
                                       for row in matrix.values]
                    for inst, (_, matrix) in zip(instances, outcomes)}
        args.dump_matrix.write_text(to_json(matrices) + "\n", encoding="utf-8")

    manifest_path = args.manifest or Path(str(args.output) + ".manifest.json")
    manifest = {
        "config": description,
        "config_fingerprint": fingerprint,
        "versions": {
            "docmbr": __version__,
            "python": sys.version.split()[0],
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "seed": args.seed,
        "instances": len(instances),
        "timing_seconds": elapsed,
        "parallelism": args.parallelism,
        "pair_evaluations": {
            "total": sum(r.pair_evaluations for r, _ in outcomes),
            "per_instance": [{"id": inst.instance_id, "pairs": r.pair_evaluations}
                             for inst, (r, _) in zip(instances, outcomes)],
        },
        "nonconverged_pairs": [
            {"id": inst.instance_id, "pairs": [list(p) for p in r.nonconverged_pairs]}
            for inst, (r, _) in zip(instances, outcomes) if r.nonconverged_pairs
        ],
        "notes": {
            "self_pair_included_in_average": True,
            "ewd_utility_includes_kl": (cfg.include_kl_in_utility
                                        if cfg is not None and
                                        cfg.formulation is Formulation.EWD else None),
        },
    }
    manifest_path.write_text(to_json(manifest) + "\n", encoding="utf-8")
    return 0


def _pair_documents(args) -> tuple[Document, Document]:
    scheme = WeightScheme(args.weights)
    hyp = Document.from_text("hyp", args.hyp, args.language, scheme)
    ref = Document.from_text("ref", args.ref, args.language, scheme)
    return hyp, ref


def cmd_score_pair(args) -> int:
    cfg = build_utility_config(args)
    hyp, ref = _pair_documents(args)
    value, plan = doc_utility_plan(hyp, ref, cfg)
    report = {
        "utility": value,
        "formulation": cfg.formulation.value,
        "m": len(hyp.segments),
        "n": len(ref.segments),
        "identity_shortcut": plan is None,
    }
    if plan is not None:
        report["objective"] = plan.objective
        if cfg.formulation is Formulation.EWD:
            report["kl_penalty"] = plan.kl_penalty
            report["converged"] = plan.converged
    print(to_json(report))
    return 0


def cmd_dump_plan(args) -> int:
    cfg = build_utility_config(args)
    hyp, ref = _pair_documents(args)
    value, plan = doc_utility_plan(hyp, ref, cfg)
    report = {"utility": value, "formulation": cfg.formulation.value}
    if plan is None:
        report["identity_shortcut"] = True
    else:
        report.update(plan.to_jsonable())
    text = to_json(report) + "\n"
    if args.output is not None:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval_metric(args) -> int:
    for path, what in ((args.hypotheses, "hypotheses"), (args.references, "references"),
                       (args.human, "human scores")):
        _check_input_path(path, what)
    cfg = build_utility_config(args)
    scheme = WeightScheme(args.weights)
    references = load_references(args.references, args.language, scheme)
    systems, skipped = load_system_outputs(args.hypotheses, references,
                                           args.language, scheme)
    cache = PairScoreCache()
    metric_scores = {sys_out.system_id: system_score(sys_out, cfg, cache)
                     for sys_out in systems}
    human = load_human_scores(args.human)

    with open(args.output_csv, "w", encoding="utf-8") as handle:
        handle.write("system,metric_score\n")
        for system_id in sorted(metric_scores):
            handle.write(f"{system_id},{format(metric_scores[system_id], '.17g')}\n")

    description = _run_description(args, cfg, "eval-metric")
    summary = {
        "statistic": "pearson",
        "pearson": pearson(metric_scores, human),
        "kendall_tau": kendall_tau(metric_scores, human),
        "systems_scored": len(metric_scores),
        "systems_in_correlation": len(set(metric_scores) & set(human)),
        "skipped_instances": skipped,
        "config": description,
        "config_fingerprint": config_fingerprint(description),
    }
    args.summary.write_text(to_json(summary) + "\n", encoding="utf-8")
    return 0


def _report_error(kind: str, message: str, exit_code: int) -> int:
    sys.stderr.write(to_json({"error": kind, "message": message,
                              "exit_code": exit_code}) + "\n")
    return exit_code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        return _report_error("ConfigError", str(err), EXIT_CONFIG)
    except PairEvaluationError as err:
        if isinstance(err.cause, AdapterError):
            return _report_error(type(err.cause).__name__, str(err), EXIT_ADAPTER)
        return _report_error(type(err.cause).__name__, str(err), EXIT_DATA)
    except AdapterError as err:
        return _report_error(type(err).__name__, str(err), EXIT_ADAPTER)
    except DocMbrError as err:
        return _report_error(type(err).__name__, str(err), EXIT_DATA)
    except OSError as err:
        return _report_error("OSError", str(err), EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())

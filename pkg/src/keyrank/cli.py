"""Command-line interface: ``keyrank extract|benchmark|sweep|report``.

Exit codes: 0 success, 2 usage/config error, 3 scorer connectivity,
4 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Sequence

from .bench import DocumentResult, RunConfig, SweepReport, SweepRow, run_benchmark, run_sweep
from .errors import ConfigError, DataError, KeyrankError
from .evaluation import load_dataset
from .pipeline import extract_from_tagged, extract_keyphrases
from .prompts import PromptTemplate, builtin_catalog, catalog_by_id, load_catalog
from .report import render as render_report
from .scorer_client import ENV_ENDPOINT, ClientConfig, RemoteScorer, ScorerClientError
from .scoring import ReferenceScorer
from .textproc import TaggerConfig, default_tagger_config, load_tagger_config, read_pretagged

log = logging.getLogger("keyrank")

EXIT_OK, EXIT_USAGE, EXIT_CONNECT, EXIT_DATA = 0, 2, 3, 4


def _parse_ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not ks:
        raise argparse.ArgumentTypeError("at least one K is required")
    return ks


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=("reference", "remote"), default="reference")
    p.add_argument("--endpoint", default=None,
                   help=f"log-prob server URL (default: ${ENV_ENDPOINT})")
    p.add_argument("--bearer-token", default=None, help="sent as 'Authorization: Bearer ...'")
    p.add_argument("--max-batch", type=int, default=16)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--top-k", type=int, default=15)
    p.add_argument("--max-encoder-tokens", type=int, default=512)
    p.add_argument("--catalog", type=Path, default=None,
                   help="JSON prompt catalog to use instead of the built-in one")
    p.add_argument("--lexicon", type=Path, default=None, help="tagger lexicon (word<TAB>POS)")
    p.add_argument("--suffixes", type=Path, default=None, help="tagger suffix rules")
    p.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")


def _add_eval(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--ks", type=_parse_ks, default=(5, 10, 15))
    p.add_argument("--aggregation", choices=("macro", "micro"), default="macro")
    p.add_argument("--present-only", action="store_true",
                   help="drop gold keyphrases that do not occur in the document")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "md", "json"), default=default_format)
    p.add_argument("--log", type=Path, default=None, help="per-document JSONL audit log")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="keyrank",
                                     description="Prompt-based unsupervised keyphrase extraction")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="rank keyphrases of one document")
    p.add_argument("input", nargs="?", default="-", help="document file, or - for stdin")
    p.add_argument("--text", default=None, help="document text given inline")
    p.add_argument("--tagged", action="store_true",
                   help="input is pre-tagged (surface<TAB>POS per line)")
    p.add_argument("--prompt", default="p2_6")
    _add_common(p)

    p = sub.add_parser("benchmark", help="evaluate one prompt on a JSONL dataset")
    p.add_argument("dataset", type=Path)
    p.add_argument("--prompt", default="p2_6")
    _add_common(p)
    _add_eval(p, "json")

    p = sub.add_parser("sweep", help="evaluate many prompts on many datasets")
    p.add_argument("datasets", type=Path, nargs="+")
    p.add_argument("--prompts", "--prompt", dest="prompts", default="all", help="comma-separated prompt ids, or 'all'")
    _add_common(p)
    _add_eval(p, "csv")

    p = sub.add_parser("report", help="re-render a JSON benchmark/sweep report")
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=("csv", "md", "json"), default="md")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _catalog(args) -> list[PromptTemplate]:
    return load_catalog(args.catalog) if args.catalog else builtin_catalog()


def _select_prompts(args, ids: Sequence[str]) -> list[PromptTemplate]:
    catalog = _catalog(args)
    by_id = catalog_by_id(catalog)
    if list(ids) == ["all"]:
        return catalog
    unknown = [i for i in ids if i not in by_id]
    if unknown:
        raise ConfigError(f"unknown prompt id(s): {', '.join(unknown)} "
                          f"(available: {', '.join(by_id)})")
    return [by_id[i] for i in ids]


def _tagger(args) -> TaggerConfig:
    if args.lexicon is None and args.suffixes is None:
        return default_tagger_config()
    if args.lexicon is None:
        raise ConfigError("--suffixes requires --lexicon")
    return load_tagger_config(args.lexicon, args.suffixes)


def _scorer(args, stack: ExitStack):
    if args.scorer == "reference":
        return ReferenceScorer()
    cfg = ClientConfig.from_env(args.endpoint, timeout=args.timeout, max_batch=args.max_batch,
                                bearer_token=args.bearer_token
                                or os.environ.get("KEYRANK_SCORER_TOKEN"))
    return stack.enter_context(RemoteScorer(cfg))


def _run_config(args, prompt_ids: list[str], evaluating: bool) -> RunConfig:
    cfg = RunConfig(
        prompt_ids=prompt_ids,
        scorer=args.scorer,
        endpoint=args.endpoint,
        top_k=args.top_k,
        max_encoder_tokens=args.max_encoder_tokens,
    )
    if evaluating:
        cfg.eval_ks = args.ks
        cfg.aggregation = args.aggregation
        cfg.present_only = args.present_only
        cfg.workers = args.workers
    cfg.validate(evaluating=evaluating)
    return cfg


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        out.write_text(text, encoding="utf-8")


def _read_input(args) -> str:
    if args.text is not None:
        return args.text
    if args.input == "-":
        return sys.stdin.read()
    try:
        return Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from exc


def cmd_extract(args) -> int:
    cfg = _run_config(args, [args.prompt], evaluating=False)
    (template,) = _select_prompts(args, cfg.prompt_ids)
    text = _read_input(args)
    with ExitStack() as stack:
        scorer = _scorer(args, stack)
        if args.tagged:
            docs = read_pretagged(text.splitlines())
            if len(docs) > 1:
                raise DataError(f"pre-tagged input holds {len(docs)} documents; expected one")
            doc_text, tagged = docs[0] if docs else ("", [])
            extraction = extract_from_tagged(doc_text, tagged, template, scorer,
                                             cfg.scorer_config)
        else:
            extraction = extract_keyphrases(text, template, scorer, cfg.scorer_config,
                                            _tagger(args))
    payload = {"keyphrases": [
        {"phrase": sc.candidate.surface, "score": sc.pi_c,
         "offset": sc.candidate.first_char_offset}
        for sc in extraction.top(cfg.top_k)]}
    _emit(json.dumps(payload, ensure_ascii=False) + "\n", args.out)
    return EXIT_OK


def _log_writer(path: Path | None, stack: ExitStack):
    if path is None:
        return None
    fh = stack.enter_context(open(path, "w", encoding="utf-8"))

    def write(prompt_id: str, dataset_id: str | None, result: DocumentResult):
        fh.write(json.dumps(result.to_log(prompt_id, dataset_id), ensure_ascii=False) + "\n")

    return write


def cmd_benchmark(args) -> int:
    cfg = _run_config(args, [args.prompt], evaluating=True)
    (template,) = _select_prompts(args, cfg.prompt_ids)
    docs = load_dataset(args.dataset)
    tagger = _tagger(args)
    with ExitStack() as stack:
        scorer = _scorer(args, stack)
        report, results = run_benchmark(docs, template, scorer, cfg, tagger)
        write = _log_writer(args.log, stack)
        if write:
            for res in results:
                write(template.id, None, res)
    sweep = SweepReport([SweepRow(template.id, scorer.label, args.dataset.stem, report)])
    _emit(render_report(sweep, args.format), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    ids = [s.strip() for s in args.prompts.split(",") if s.strip()]
    cfg = _run_config(args, ids, evaluating=True)
    templates = _select_prompts(args, cfg.prompt_ids)
    datasets = [(path.stem, load_dataset(path)) for path in args.datasets]
    tagger = _tagger(args)
    with ExitStack() as stack:
        scorer = _scorer(args, stack)
        write = _log_writer(args.log, stack)
        sweep = run_sweep(datasets, templates, scorer, cfg, tagger, on_document=write)
    _emit(render_report(sweep, args.format), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        data = json.loads(args.input.read_text(encoding="utf-8"))
        sweep = SweepReport.from_dict(data)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{args.input} is not a keyrank JSON report: {exc}") from exc
    _emit(render_report(sweep, args.format), args.out)
    return EXIT_OK


COMMANDS = {"extract": cmd_extract, "benchmark": cmd_benchmark,
            "sweep": cmd_sweep, "report": cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"keyrank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScorerClientError as exc:
        print(f"keyrank: scorer error: {exc}", file=sys.stderr)
        return EXIT_CONNECT
    except KeyrankError as exc:
        print(f"keyrank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

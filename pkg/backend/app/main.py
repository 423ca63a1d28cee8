"""
Book Summarizer - command line entry point
Chapter-wise extractive summaries compiled into an abstract of the book
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.chapters import split_chapters
from app.exceptions import BooksumError, ConfigError, exit_code_for
from app.pipeline import compare_strategies, read_reference, run_book_pipeline
from app.preprocessing import TextPreprocessor, read_document
from app.rouge import evaluate_summary
from app.schemas.document import InputFormat
from app.schemas.pipeline import EmbedderProvider, OutputFormat, PipelineConfig
from app.schemas.summary import StrategyId
from app.tools.report_generator import (
    ReportGenerator,
    canonical_json,
    emit_report,
    format_rouge_table,
    rouge_json,
)
from app.utils.config import settings
from app.wordpiece import Vocabulary, tokenize_text

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# ==================== CONFIG ====================


def _load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def _set(data: Dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        data[key] = value


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file, then CLI flags, then environment settings for anything still unset"""
    data = _load_config_file(getattr(args, "config", None))

    _set(data, "input_path", getattr(args, "input", None))
    _set(data, "input_format", getattr(args, "format", None))
    _set(data, "strategy", getattr(args, "strategy", None))
    _set(data, "reference_summary_path", getattr(args, "reference", None))
    _set(data, "chapter_reference_dir", getattr(args, "chapter_references", None))
    _set(data, "output_format", getattr(args, "output_format", None))
    _set(data, "parallelism", getattr(args, "parallelism", None))
    _set(data, "stopwords_path", getattr(args, "stopwords", None))
    _set(data, "vocab_path", getattr(args, "vocab", None))
    if getattr(args, "stem", False):
        data["stem"] = True

    if getattr(args, "ratio", None) is not None:
        data["budget"] = {"mode": "ratio", "ratio": args.ratio, "count": None}
    elif getattr(args, "count", None) is not None:
        data["budget"] = {"mode": "count", "ratio": None, "count": args.count}

    abstractive = data.setdefault("abstractive", {})
    _set(abstractive, "endpoint_url", getattr(args, "endpoint", None))
    if getattr(args, "offline", False):
        abstractive["offline"] = True
    if getattr(args, "no_fallback", False):
        abstractive["fallback"] = False
    abstractive.setdefault("endpoint_url", settings.abstractive_endpoint_url)
    abstractive.setdefault("timeout_ms", settings.abstractive_timeout_ms)
    abstractive.setdefault("max_in_flight", settings.max_in_flight)

    embedder = data.setdefault("embedder", {})
    _set(embedder, "endpoint_url", getattr(args, "embed_endpoint", None))
    if embedder.get("endpoint_url") and "provider" not in embedder:
        embedder["provider"] = EmbedderProvider.REMOTE.value
    if embedder.get("provider") == EmbedderProvider.REMOTE.value:
        embedder.setdefault("endpoint_url", settings.embed_endpoint_url)
        embedder.setdefault("timeout_ms", settings.embed_timeout_ms)
    embedder.setdefault("cache_dir", settings.cache_dir)

    data.setdefault("stopwords_path", settings.stopwords_path)
    data.setdefault("vocab_path", settings.vocab_path)

    try:
        cfg = PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}")
    cfg.budget.target(1)
    return cfg


# ==================== COMMANDS ====================


def _write(payload: bytes, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(payload)
        logger.info(f"Wrote {len(payload)} bytes to {out}")
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()


def cmd_summarize(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    summary = run_book_pipeline(cfg)
    _write(emit_report(summary, cfg.output_format, include_timings=args.timings), args.out)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    strategies = [StrategyId(s) for s in args.strategies] if args.strategies else None
    comparison = compare_strategies(cfg, strategies)
    _write(ReportGenerator().generate_comparison(comparison, cfg.output_format), args.out)
    return 0


def cmd_rouge(args: argparse.Namespace) -> int:
    report = evaluate_summary(
        read_reference(args.candidate), read_reference(args.reference), extra_n=args.n or ()
    )
    if args.output_format == OutputFormat.JSON.value:
        _write(canonical_json(rouge_json(report)), None)
    else:
        _write(format_rouge_table(report).encode("utf-8"), None)
    return 0


def cmd_chapters(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    preprocessor = TextPreprocessor(stopwords_path=cfg.stopwords_path, stem=cfg.stem)
    doc = preprocessor.ingest(read_document(cfg.input_path, cfg.input_format))
    chapters = split_chapters(doc, cfg.heading_rules)
    lines = [
        f"{c.index + 1:>3}  {len(c.sentences):>5}  {c.sentences[0].index:>6}  {c.title}"
        for c in chapters
    ]
    header = "  #  sents   first  title"
    _write(("\n".join([header] + lines) + "\n").encode("utf-8"), None)
    return 0


def cmd_tokenize(args: argparse.Namespace) -> int:
    vocab = Vocabulary.load(args.vocab or settings.vocab_path)
    pieces = tokenize_text(args.text, vocab, cased=args.cased)
    lines = [f"{p.id}\t{p.surface}" for p in pieces]
    _write(("\n".join(lines) + "\n").encode("utf-8"), None)
    return 0


# ==================== PARSER ====================


def _add_input_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--input", required=required, help="Path to the book (pdf or txt)")
    parser.add_argument("--format", choices=[f.value for f in InputFormat], help="Input format")
    parser.add_argument("--config", help="JSON PipelineConfig file; flags override it")
    parser.add_argument("--stopwords", help="Stopword list replacing the bundled one")
    parser.add_argument("--stem", action="store_true", help="Porter-stem feature tokens")


def _add_budget_args(parser: argparse.ArgumentParser) -> None:
    budget = parser.add_mutually_exclusive_group()
    budget.add_argument("--ratio", type=float, help="Fraction of each chapter's sentences to keep")
    budget.add_argument("--count", type=int, help="Sentences to keep per chapter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="booksum", description="Hierarchical extractive + abstractive book summarizer"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    strategies = [s.value for s in StrategyId]
    output_formats = [f.value for f in OutputFormat]

    summarize = sub.add_parser("summarize", help="Summarize a book end to end")
    _add_input_args(summarize, required=False)
    _add_budget_args(summarize)
    summarize.add_argument("--strategy", choices=strategies)
    summarize.add_argument("--offline", action="store_true", help="Skip the abstractive service")
    summarize.add_argument("--no-fallback", action="store_true", help="Fail instead of falling back")
    summarize.add_argument("--endpoint", help="Abstractive service base URL")
    summarize.add_argument("--embed-endpoint", help="Remote sentence-embedding service base URL")
    summarize.add_argument("--reference", help="Reference summary of the whole book")
    summarize.add_argument("--chapter-references", help="Directory of chapter_<n>.txt references")
    summarize.add_argument("--vocab", help="WordPiece vocabulary for per-chapter token counts")
    summarize.add_argument("--parallelism", type=int, help="Chapter worker pool size")
    summarize.add_argument("--output-format", choices=output_formats)
    summarize.add_argument("--out", help="Write the report here instead of stdout")
    summarize.add_argument("--timings", action="store_true", help="Include stage timings")
    summarize.set_defaults(handler=cmd_summarize)

    compare = sub.add_parser("compare", help="ROUGE of every extractive strategy")
    _add_input_args(compare, required=False)
    _add_budget_args(compare)
    compare.add_argument("--reference", help="Reference summary of the whole book")
    compare.add_argument("--strategies", nargs="+", choices=strategies)
    compare.add_argument("--parallelism", type=int)
    compare.add_argument("--output-format", choices=output_formats)
    compare.add_argument("--out")
    compare.set_defaults(handler=cmd_compare)

    rouge = sub.add_parser("rouge", help="Score a candidate summary against a reference")
    rouge.add_argument("--candidate", required=True)
    rouge.add_argument("--reference", required=True)
    rouge.add_argument("--n", type=int, action="append", help="Extra ROUGE-N order (repeatable)")
    rouge.add_argument("--output-format", choices=["text", OutputFormat.JSON.value], default="text")
    rouge.set_defaults(handler=cmd_rouge)

    chapters = sub.add_parser("chapters", help="Show detected chapters")
    _add_input_args(chapters, required=False)
    chapters.set_defaults(handler=cmd_chapters)

    tokenize = sub.add_parser("tokenize", help="WordPiece-tokenize a string")
    tokenize.add_argument("--text", required=True)
    tokenize.add_argument("--vocab", help="Vocabulary file (defaults to the bundled toy vocabulary)")
    tokenize.add_argument("--cased", action="store_true")
    tokenize.set_defaults(handler=cmd_tokenize)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = settings.log_level.upper()
    if args.verbose:
        level = "DEBUG"
    elif args.quiet:
        level = "WARNING"
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        return args.handler(args)
    except BooksumError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())

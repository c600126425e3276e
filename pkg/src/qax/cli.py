"""Command-line interface.

Subcommands: translate-dataset, align, stats, evaluate, cache.
Configuration precedence: flags > config file (key=value lines) > defaults.
Defaults are the reference values: w1=2/3, w2=1/3, threshold 0.6, stride 3.
Progress and diagnostics go to stderr; data goes to stdout or output files,
so commands compose in pipelines.  Exit codes: 0 success, 1 fatal error,
2 partial success (some records failed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline as pl
from . import qa_metrics
from .aligner import (
    AlignmentQuery,
    NoFeasibleWindow,
    SimilarityWeights,
    align_answer,
)
from .providers import (
    IDENTITY_TRANSLATE,
    TEST_EMBED,
    DiskCache,
    ProviderConfig,
    default_cache_dir,
    get_client,
)
from .squad_format import FormatError, parse_dataset, serialize_dataset, validate_dataset

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2

# (key, type, default factory, help text); config-file keys mirror flags 1:1.
_SETTING_SPECS = [
    ("w1", float, lambda: 2 / 3, "embedding-cosine weight (default: 2/3)"),
    ("w2", float, lambda: 1 / 3, "LCS weight (default: 1/3)"),
    ("threshold", float, lambda: 0.6, "similarity keep threshold, inclusive (default: 0.6)"),
    ("max_stride", int, lambda: 3, "extra words a window may grow by (default: 3)"),
    (
        "update_rule",
        str,
        lambda: "lexicographic",
        "best-match update rule: lexicographic or paper_literal (default: lexicographic)",
    ),
    ("seed", int, lambda: 0, "downsampling RNG seed (default: 0)"),
    ("keep_train", int, lambda: 6000, "unanswerable records kept in train (default: 6000)"),
    ("keep_dev", int, lambda: 700, "unanswerable records kept in dev (default: 700)"),
    (
        "translate_url",
        str,
        lambda: os.environ.get("QAX_TRANSLATE_URL", IDENTITY_TRANSLATE),
        "translation endpoint; 'identity:' echoes input "
        "(default: $QAX_TRANSLATE_URL or identity:)",
    ),
    (
        "embed_url",
        str,
        lambda: os.environ.get("QAX_EMBED_URL", TEST_EMBED),
        "embedding endpoint; 'test:' is the offline n-gram embedder "
        "(default: $QAX_EMBED_URL or test:)",
    ),
    ("source_lang", str, lambda: "en", "source language tag (default: en)"),
    ("target_lang", str, lambda: "am", "target language tag (default: am)"),
    ("cache_dir", Path, default_cache_dir, "provider cache directory"),
    ("max_in_flight", int, lambda: 8, "max concurrent provider requests (default: 8)"),
    ("retry_max", int, lambda: 5, "retries after the first failed attempt (default: 5)"),
    ("retry_base_ms", int, lambda: 250, "base backoff in milliseconds (default: 250)"),
    ("checkpoint", Path, lambda: None, "checkpoint journal path (default: none)"),
]
_SETTING_TYPES = {key: typ for key, typ, _, _ in _SETTING_SPECS}


def _add_setting_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")
    for key, typ, _, help_text in _SETTING_SPECS:
        flag = "--" + key.replace("_", "-")
        parser.add_argument(flag, type=typ, default=None, help=help_text, dest=key)


def _load_config_file(path: Path) -> dict:
    settings = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SETTING_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        settings[key] = _SETTING_TYPES[key](value)
    return settings


def _resolve_settings(args: argparse.Namespace) -> dict:
    settings = {key: default() for key, _, default, _ in _SETTING_SPECS}
    if args.config is not None:
        settings.update(_load_config_file(args.config))
    for key in _SETTING_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _provider_config(settings: dict) -> ProviderConfig:
    return ProviderConfig(
        cache_dir=Path(settings["cache_dir"]),
        translate_endpoint=settings["translate_url"],
        embed_endpoint=settings["embed_url"],
        source_lang=settings["source_lang"],
        target_lang=settings["target_lang"],
        max_in_flight=settings["max_in_flight"],
        retry_max=settings["retry_max"],
        retry_base_ms=settings["retry_base_ms"],
    )


def _pipeline_config(settings: dict) -> pl.PipelineConfig:
    return pl.PipelineConfig(
        provider=_provider_config(settings),
        weights=SimilarityWeights(settings["w1"], settings["w2"]),
        similarity_threshold=settings["threshold"],
        unanswerable_keep_train=settings["keep_train"],
        unanswerable_keep_dev=settings["keep_dev"],
        rng_seed=settings["seed"],
        max_stride=settings["max_stride"],
        update_rule=settings["update_rule"],
        checkpoint_path=settings["checkpoint"],
    )


def cmd_translate_dataset(args) -> int:
    settings = _resolve_settings(args)
    try:
        input_ds = parse_dataset(Path(args.input).read_bytes())
    except (OSError, FormatError) as e:
        print(f"error: cannot read input: {e}", file=sys.stderr)
        return EXIT_FATAL
    problems = validate_dataset(input_ds)
    if problems:
        for v in problems[:20]:
            print(f"error: invalid input: {v.code} at {v.path}: {v.message}", file=sys.stderr)
        return EXIT_FATAL
    cfg = _pipeline_config(settings)
    try:
        output, report = pl.run_pipeline(input_ds, args.split, cfg)
    except pl.ChecksumMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL
    out_path = Path(args.output)
    out_path.write_bytes(serialize_dataset(output))
    report_path = Path(str(out_path) + ".report.json")
    report_path.write_bytes(report.to_json())
    print(report.render_text(), file=sys.stderr)
    print(f"wrote {out_path} and {report_path}", file=sys.stderr)
    return EXIT_PARTIAL if report.counts["failed"] else EXIT_OK


def cmd_align(args) -> int:
    settings = _resolve_settings(args)
    client = get_client(_provider_config(settings))
    weights = SimilarityWeights(settings["w1"], settings["w2"])
    try:
        query = AlignmentQuery(
            translated_context=args.context,
            translated_answer=args.answer,
            original_answer_rel_pos=args.rel_pos,
            max_stride=settings["max_stride"],
        )
        result = align_answer(query, weights, client.embed, settings["update_rule"])
    except (NoFeasibleWindow, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL
    print(
        json.dumps(
            {
                "answer_text": result.answer_text,
                "answer_start": result.answer_start,
                "score": result.score,
                "proximity": result.proximity,
                "stride": result.stride,
                "candidates_examined": result.candidates_examined,
                "update_rule": settings["update_rule"],
            },
            ensure_ascii=False,
        )
    )
    return EXIT_OK


def _report_from_dataset(ds) -> pl.PipelineReport:
    outcomes = []
    for article in ds.articles:
        for para in article.paragraphs:
            for qa in para.qas:
                if qa.alignment_meta is not None:
                    outcomes.append(
                        pl.RecordOutcome(
                            qa.id,
                            pl.STATUS_ALIGNED,
                            qa.alignment_meta.similarity,
                            qa.alignment_meta.proximity,
                        )
                    )
                elif qa.is_impossible:
                    outcomes.append(pl.RecordOutcome(qa.id, pl.STATUS_UNANSWERABLE_KEPT))
                else:
                    outcomes.append(pl.RecordOutcome(qa.id, pl.STATUS_ALIGNED))
    return pl._build_report(outcomes)


def cmd_stats(args) -> int:
    path = Path(args.path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        print(f"error: unreadable file: {e}", file=sys.stderr)
        return EXIT_FATAL
    if isinstance(doc, dict) and "histogram" in doc and "counts" in doc:
        report = pl.PipelineReport(
            outcomes=[], histogram=doc["histogram"], counts=doc["counts"]
        )
        print(report.render_text())
        return EXIT_OK
    try:
        ds = parse_dataset(raw)
    except FormatError as e:
        print(f"error: neither a report nor a dataset: {e}", file=sys.stderr)
        return EXIT_FATAL
    print(_report_from_dataset(ds).render_text())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        preds = json.loads(Path(args.predictions).read_text(encoding="utf-8"))
        gold = parse_dataset(Path(args.gold).read_bytes())
    except (OSError, json.JSONDecodeError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL
    if not isinstance(preds, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in preds.items()
    ):
        print("error: predictions must map qa_id to answer string", file=sys.stderr)
        return EXIT_FATAL
    try:
        summary = qa_metrics.evaluate_predictions(preds, gold)
    except qa_metrics.UnknownQaId as e:
        print(f"error: prediction for unknown qa id {e}", file=sys.stderr)
        return EXIT_FATAL
    if args.json:
        out = summary.to_dict()
        del out["per_question"]
        print(json.dumps(out, ensure_ascii=False))
    else:
        print(f"EM {summary.exact_match:.2f} F1 {summary.f1:.2f}")
        if summary.n_missing_predictions:
            print(
                f"warning: {summary.n_missing_predictions} of {summary.n_evaluated} "
                "questions had no prediction and scored 0",
                file=sys.stderr,
            )
    return EXIT_OK


def cmd_cache(args) -> int:
    cache = DiskCache(Path(args.cache_dir))
    if args.action == "clear":
        print(f"removed {cache.clear()} entries", file=sys.stderr)
        return EXIT_OK
    kinds: dict[str, int] = {}
    total = 0
    for entry in cache.entries():
        kinds[entry["kind"]] = kinds.get(entry["kind"], 0) + 1
        total += 1
    print(json.dumps({"cache_dir": str(cache.root), "entries": total, "by_kind": kinds}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qax",
        description="Translate extractive-QA datasets and re-align answer spans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "translate-dataset",
        help="translate a SQuAD 2.0 file end to end",
        description="Translate every entry, re-align answers, filter by "
        "similarity, downsample unanswerables, and write the output dataset "
        "plus a .report.json.",
    )
    p.add_argument("input", help="input SQuAD 2.0 JSON file")
    p.add_argument("output", help="output dataset path")
    p.add_argument("--split", choices=["train", "dev"], required=True)
    _add_setting_flags(p)
    p.set_defaults(func=cmd_translate_dataset)

    p = sub.add_parser(
        "align",
        help="align one answer inside one context (debug surface)",
        description="Locate a translated answer in a translated context and "
        "print the best span as JSON.",
    )
    p.add_argument("context", help="translated context text")
    p.add_argument("answer", help="translated answer text")
    p.add_argument("rel_pos", type=float, help="original answer relative position in [0,1]")
    _add_setting_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("stats", help="render histogram and counts of a report or dataset")
    p.add_argument("path", help="report JSON or dataset JSON")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("evaluate", help="score a prediction file against a gold dataset")
    p.add_argument("predictions", help="JSON object mapping qa_id to answer string")
    p.add_argument("gold", help="gold SQuAD 2.0 dataset")
    p.add_argument("--json", action="store_true", help="emit the summary as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cache", help="inspect or clear the provider cache")
    p.add_argument("action", choices=["inspect", "clear"])
    p.add_argument("--cache-dir", default=default_cache_dir(), type=Path)
    p.set_defaults(func=cmd_cache)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())

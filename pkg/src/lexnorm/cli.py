"""Command-line entry point.

Every artifact-producing subcommand writes a ``<out>.manifest.json``
next to its output recording the command line, a digest of the resolved
configuration, digests of all input files, the seed, and timestamps.
Reports go to standard output. Exit codes: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from lexnorm import __version__
from lexnorm.analysis import (
    ErrorCategory,
    categorize_errors,
    export_annotation_sheet,
    load_vocab,
    seg_stats_bytes,
    seg_stats_vocab,
    summarize_annotation_sheet,
)
from lexnorm.baselines import apply_mfr, build_table, load_table, save_table
from lexnorm.corpus import corpus_stats, load_corpus, save_corpus
from lexnorm.detection import (
    DetectionLabels,
    gold_labels,
    load_external_labels,
    save_labels,
    table_labels,
)
from lexnorm.errors import LexnormError, PipelineAborted
from lexnorm.lookup import (
    DEFAULT_MIN_SUPPORT,
    DEFAULT_THRESHOLD_BITS,
    build_gated_lookup,
    load_gated_lookup,
    save_gated_lookup,
)
from lexnorm.metrics import (
    RunOutput,
    detection_f1,
    format_report,
    load_run,
    report_line,
    save_run,
    score_run,
)
from lexnorm.pipeline import (
    BackendKind,
    CallRecord,
    LlmBackendConfig,
    PipelineConfig,
    PromptSpec,
    estimate_cost,
    run_pipeline,
    token_reduction_pct,
)
from lexnorm.translit import invert_corpus, load_mapping, transform_corpus


class _UsageError(Exception):
    """Bad flag combination detected after argparse; exits with status 2."""


def _sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(
    out: str | Path,
    args: argparse.Namespace,
    config: dict,
    inputs: Sequence[str | Path],
    seed: Optional[int] = None,
) -> Path:
    manifest = {
        "tool": "lexnorm",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "command": list(args.argv),
        "config": config,
        "config_digest": hashlib.sha256(
            json.dumps(config, sort_keys=True, ensure_ascii=False).encode("utf-8")
        ).hexdigest(),
        "inputs": {str(p): _sha256_file(p) for p in inputs},
        "seed": seed,
    }
    path = Path(str(out) + ".manifest.json")
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path


def _corpus(args: argparse.Namespace, path: str):
    return load_corpus(path, args.lang, args.caseless)


# ---------------------------------------------------------------- handlers


def _cmd_validate(args: argparse.Namespace) -> int:
    c = _corpus(args, args.corpus)
    print(f"ok: {len(c.sentences)} sentences, {c.n_tokens} tokens")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    c = _corpus(args, args.corpus)
    s = corpus_stats(c)
    print(f"sentences   {len(c.sentences)}")
    print(f"words       {s.n_words}")
    print(f"normalized  {s.n_normalized} ({s.pct_norm:.2f}%)")
    print(f"splits      {'yes' if s.has_split else 'no'}")
    print(f"merges      {'yes' if s.has_merge else 'no'}")
    return 0


def _cmd_train_mfr(args: argparse.Namespace) -> int:
    train = _corpus(args, args.train)
    table = build_table(train)
    save_table(table, args.out)
    _write_manifest(
        args.out,
        args,
        {"caseless": args.caseless, "lang": args.lang},
        [args.train],
    )
    print(f"wrote {len(table.entries)} entries ({table.total_tokens} tokens) to {args.out}")
    return 0


def _cmd_apply_mfr(args: argparse.Namespace) -> int:
    test = _corpus(args, args.test)
    table = load_table(args.table, args.caseless)
    run = apply_mfr(table, test)
    save_run(run, test, args.out)
    _write_manifest(
        args.out,
        args,
        {"caseless": args.caseless, "lang": args.lang},
        [args.test, args.table],
    )
    print(f"wrote {len(run)} predictions to {args.out}")
    return 0


def _cmd_build_lookup(args: argparse.Namespace) -> int:
    if bool(args.train) == bool(args.table):
        raise _UsageError("build-lookup needs exactly one of --train or --table")
    if args.train:
        table = build_table(_corpus(args, args.train))
        source = args.train
    else:
        table = load_table(args.table, args.caseless)
        source = args.table
    gl = build_gated_lookup(table, args.threshold_bits, args.min_support)
    save_gated_lookup(gl, args.out)
    _write_manifest(
        args.out,
        args,
        {
            "threshold_bits": args.threshold_bits,
            "min_support": args.min_support,
            "caseless": args.caseless,
            "lang": args.lang,
        },
        [source],
    )
    print(
        f"lookup: {len(gl.resolved)} resolved, {len(gl.deferred)} deferred "
        f"(threshold {gl.threshold_bits} bits, min support {gl.min_support})"
    )
    return 0


def _detection_for(args: argparse.Namespace, corpus, train=None) -> DetectionLabels:
    if args.detection == "gold":
        return gold_labels(corpus)
    if args.detection == "table":
        if args.table:
            table = load_table(args.table, args.caseless)
        elif train is not None:
            table = build_table(train)
        else:
            raise _UsageError("table detection needs --table")
        return table_labels(table, corpus)
    if not args.labels:
        raise _UsageError("external detection needs --labels")
    return load_external_labels(args.labels, corpus)


def _cmd_detect(args: argparse.Namespace) -> int:
    corpus = _corpus(args, args.corpus)
    args.detection = args.source
    labels = _detection_for(args, corpus)
    save_labels(labels, corpus, args.out)
    inputs = [args.corpus]
    if args.source == "table":
        inputs.append(args.table)
    elif args.source == "external":
        inputs.append(args.labels)
    _write_manifest(
        args.out,
        args,
        {"source": args.source, "caseless": args.caseless, "lang": args.lang},
        inputs,
    )
    print(f"flagged {sum(labels.labels)} of {len(labels.labels)} tokens")
    return 0


def _cmd_detect_eval(args: argparse.Namespace) -> int:
    corpus = _corpus(args, args.corpus)
    gold = gold_labels(corpus)
    pred = load_external_labels(args.labels, corpus)
    f1 = detection_f1(gold.labels, pred.labels)
    print(f"gold_flagged  {sum(gold.labels)}")
    print(f"pred_flagged  {sum(pred.labels)}")
    print(f"detection_f1  {f1:.4f}")
    return 0


def _record_dict(rec: CallRecord) -> dict:
    # latency is wall-clock noise; keep the records file byte-reproducible
    d = dataclasses.asdict(rec)
    d.pop("latency")
    return d


def _write_records(records: Sequence[CallRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_dict(rec), ensure_ascii=False) + "\n")


def _read_records(path: str | Path) -> list[CallRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        d.setdefault("latency", 0.0)
        records.append(CallRecord(**d))
    return records


def _cmd_run(args: argparse.Namespace) -> int:
    test = _corpus(args, args.test)
    train = _corpus(args, args.train)
    inputs = [args.test, args.train]

    labels = _detection_for(args, test, train)
    if args.detection == "table" and args.table:
        inputs.append(args.table)
    if args.detection == "external":
        inputs.append(args.labels)

    use_lookup = not args.no_lookup
    lookup = None
    if use_lookup:
        if args.lookup:
            lookup = load_gated_lookup(args.lookup, args.caseless)
            inputs.append(args.lookup)
        else:
            lookup = build_gated_lookup(
                build_table(train), args.threshold_bits, args.min_support
            )

    if args.backend == "http" and not (args.endpoint and args.model):
        raise _UsageError(
            "http backend needs --endpoint/--model (or LEXNORM_API_BASE/LEXNORM_MODEL)"
        )
    if args.backend == "replay" and not args.cache:
        raise _UsageError("replay backend needs --cache")

    spec = PromptSpec(k_shots=args.shots, seed=args.seed)
    backend_cfg = LlmBackendConfig(
        kind=BackendKind(args.backend),
        endpoint=args.endpoint,
        model_name=args.model,
        api_key=args.api_key,
        timeout=args.timeout,
        max_retries=args.retries,
        temperature=args.temperature,
        cache_path=args.cache,
    )
    cfg = PipelineConfig(
        detection=labels,
        prompt=spec,
        backend=backend_cfg,
        use_lookup=use_lookup,
        lookup=lookup,
        concurrency_limit=args.concurrency,
        resample_shots=args.resample_shots,
    )
    records_path = args.records or f"{args.out}.records.jsonl"
    try:
        run, records = run_pipeline(cfg, test, train)
    except PipelineAborted as exc:
        partial = tuple(
            p if p is not None else tok.raw
            for p, tok in zip(exc.partial, test.tokens())
        )
        partial_path = f"{args.out}.partial"
        save_run(RunOutput(partial), test, partial_path)
        _write_records(exc.records, records_path)
        print(
            f"error: {exc}; partial predictions in {partial_path}, "
            f"call records in {records_path}",
            file=sys.stderr,
        )
        return 1

    save_run(run, test, args.out)
    _write_records(records, records_path)
    _write_manifest(
        args.out,
        args,
        {
            "backend": args.backend,
            "detection": args.detection,
            "use_lookup": use_lookup,
            "threshold_bits": args.threshold_bits,
            "min_support": args.min_support,
            "shots": args.shots,
            "resample_shots": args.resample_shots,
            "temperature": args.temperature,
            "concurrency": args.concurrency,
            "model": args.model,
            "markers": [spec.marker_open, spec.marker_close],
            "instruction": spec.instruction,
            "caseless": args.caseless,
            "lang": args.lang,
        },
        inputs,
        seed=args.seed,
    )
    flagged = sum(labels.labels)
    refused = sum(1 for r in records if r.refused)
    cost = estimate_cost(records, backend_cfg)
    print(f"tokens          {test.n_tokens}")
    print(f"flagged         {flagged}")
    print(f"lookup_resolved {flagged - len(records)}")
    print(f"llm_calls       {len(records)}")
    print(f"llm_refused     {refused}")
    print(
        f"cost            ${cost.cost:.4f} "
        f"({cost.input_tokens} in / {cost.output_tokens} out"
        f"{', estimated' if cost.usage_estimated else ''})"
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    gold = _corpus(args, args.gold)
    run = load_run(args.pred, gold)
    report = score_run(gold, run)
    if args.tsv:
        print(report_line(report, args.lang))
    else:
        print(format_report(report, args.lang))
    return 0


def _cmd_errors(args: argparse.Namespace) -> int:
    gold = _corpus(args, args.gold)
    run = load_run(args.pred, gold)
    _, histogram = categorize_errors(gold, run)
    total = sum(histogram.values())
    for cat in ErrorCategory:
        n = histogram.get(cat, 0)
        print(f"{cat.value:<16} {n:>6} ({100.0 * n / total:.2f}%)")
    return 0


def _cmd_seg_stats(args: argparse.Namespace) -> int:
    c = _corpus(args, args.corpus)
    if args.vocab:
        stats = seg_stats_vocab(
            c,
            load_vocab(args.vocab),
            tokenizer_id=args.tokenizer_id or Path(args.vocab).stem,
            byte_fallback=args.byte_fallback,
        )
        caveat = "greedy longest-match approximation; trends only"
    else:
        stats = seg_stats_bytes(c)
        caveat = "byte-level (each UTF-8 byte is one subword)"
    print(f"tokenizer         {stats.tokenizer_id}")
    print(f"chars_per_subword {stats.chars_per_subword:.4f}")
    print(f"subwords_per_word {stats.subwords_per_word:.4f}")
    print(f"note              {caveat}; computed on raw text")
    return 0


def _cmd_translit(args: argparse.Namespace) -> int:
    c = _corpus(args, args.corpus)
    m = load_mapping(args.mapping)
    out = invert_corpus(c, m) if args.invert else transform_corpus(c, m)
    save_corpus(out, args.out)
    _write_manifest(
        args.out,
        args,
        {"invert": args.invert, "caseless": args.caseless, "lang": args.lang},
        [args.corpus, args.mapping],
    )
    print(f"wrote {out.n_tokens} tokens to {args.out}")
    return 0


def _cmd_cost(args: argparse.Namespace) -> int:
    cfg = LlmBackendConfig(
        kind=BackendKind.ECHO,
        input_price=args.input_price,
        output_price=args.output_price,
    )
    if args.records:
        records = _read_records(args.records)
    elif args.input_tokens is not None:
        records = [
            CallRecord(
                prompt_hash="-",
                input_tokens=args.input_tokens,
                output_tokens=args.output_tokens,
                response="",
                latency=0.0,
            )
        ]
    else:
        raise _UsageError("cost needs --records or --input-tokens")
    report = estimate_cost(records, cfg, counterfactual_tokens=args.counterfactual)
    print(f"input_tokens   {report.input_tokens}")
    print(f"output_tokens  {report.output_tokens}")
    print(f"cost           ${report.cost:.4f}")
    print(f"usage          {'estimated' if report.usage_estimated else 'reported'}")
    if report.reduction_pct is not None:
        print(f"reduction      {report.reduction_pct:.2f}% vs {args.counterfactual}")
    return 0


def _cmd_sheet(args: argparse.Namespace) -> int:
    if args.summarize:
        summary = summarize_annotation_sheet(
            Path(args.summarize).read_text(encoding="utf-8")
        )
        print(f"rows     {summary.n_rows}")
        print(f"labeled  {summary.n_labeled}")
        for label in sorted(summary.counts):
            print(
                f"{label:<20} {summary.counts[label]:>6} "
                f"({100.0 * summary.proportions[label]:.2f}%)"
            )
        return 0
    if not (args.gold and args.pred and args.labels and args.out):
        raise _UsageError("sheet export needs --gold, --pred, --labels and --out")
    gold = _corpus(args, args.gold)
    run = load_run(args.pred, gold)
    labels = load_external_labels(args.labels, gold)
    text = export_annotation_sheet(gold, run, labels, args.n, args.seed)
    Path(args.out).write_text(text, encoding="utf-8")
    _write_manifest(
        args.out,
        args,
        {"n": args.n, "caseless": args.caseless, "lang": args.lang},
        [args.gold, args.pred, args.labels],
        seed=args.seed,
    )
    print(f"wrote {args.n} instances to {args.out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lang", default="und", help="language tag for reports")
    common.add_argument(
        "--caseless", action="store_true", help="compare case-insensitively"
    )

    p = argparse.ArgumentParser(
        prog="lexnorm", description="Lexical normalization toolkit."
    )
    p.add_argument("--version", action="version", version=f"lexnorm {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    sp = sub.add_parser("validate", parents=[common], help="check corpus file format")
    sp.add_argument("corpus")
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("stats", parents=[common], help="corpus summary statistics")
    sp.add_argument("corpus")
    sp.set_defaults(func=_cmd_stats)

    sp = sub.add_parser(
        "train-mfr", parents=[common], help="build a replacement table"
    )
    sp.add_argument("train")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_train_mfr)

    sp = sub.add_parser(
        "apply-mfr", parents=[common], help="most-frequent-replacement baseline"
    )
    sp.add_argument("test")
    sp.add_argument("--table", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_apply_mfr)

    sp = sub.add_parser(
        "build-lookup", parents=[common], help="entropy-gated lookup table"
    )
    sp.add_argument("--train", help="training corpus to tabulate")
    sp.add_argument("--table", help="precomputed replacement table")
    sp.add_argument("--threshold-bits", type=float, default=DEFAULT_THRESHOLD_BITS)
    sp.add_argument("--min-support", type=int, default=DEFAULT_MIN_SUPPORT)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_build_lookup)

    sp = sub.add_parser("detect", parents=[common], help="emit detection labels")
    sp.add_argument("corpus")
    sp.add_argument("--source", choices=("gold", "table", "external"), required=True)
    sp.add_argument("--table", help="replacement table (source=table)")
    sp.add_argument("--labels", help="external label file (source=external)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_detect)

    sp = sub.add_parser(
        "detect-eval", parents=[common], help="score labels against gold"
    )
    sp.add_argument("corpus")
    sp.add_argument("--labels", required=True)
    sp.set_defaults(func=_cmd_detect_eval)

    sp = sub.add_parser("run", parents=[common], help="full normalization pipeline")
    sp.add_argument("test")
    sp.add_argument("train")
    sp.add_argument("--out", required=True)
    sp.add_argument("--backend", choices=("echo", "replay", "http"), default="echo")
    sp.add_argument(
        "--detection", choices=("gold", "table", "external"), default="gold"
    )
    sp.add_argument("--table", help="replacement table for table detection")
    sp.add_argument("--labels", help="label file for external detection")
    sp.add_argument("--no-lookup", action="store_true", help="LLM-only ablation")
    sp.add_argument("--lookup", help="precomputed gated lookup file")
    sp.add_argument("--threshold-bits", type=float, default=DEFAULT_THRESHOLD_BITS)
    sp.add_argument("--min-support", type=int, default=DEFAULT_MIN_SUPPORT)
    sp.add_argument("--shots", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--resample-shots", action="store_true")
    sp.add_argument("--cache", help="prompt cache file (JSONL)")
    sp.add_argument("--records", help="call-record output path")
    sp.add_argument("--endpoint", default=os.environ.get("LEXNORM_API_BASE"))
    sp.add_argument("--model", default=os.environ.get("LEXNORM_MODEL"))
    sp.add_argument("--api-key", default=os.environ.get("LEXNORM_API_KEY"))
    sp.add_argument("--temperature", type=float, default=0.0)
    sp.add_argument("--timeout", type=float, default=60.0)
    sp.add_argument("--retries", type=int, default=3)
    sp.add_argument("--concurrency", type=int, default=1)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("score", parents=[common], help="score a prediction file")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--tsv", action="store_true", help="one-line TSV record")
    sp.set_defaults(func=_cmd_score)

    sp = sub.add_parser("errors", parents=[common], help="error-category histogram")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--pred", required=True)
    sp.set_defaults(func=_cmd_errors)

    sp = sub.add_parser(
        "seg-stats", parents=[common], help="tokenizer segmentation ratios"
    )
    sp.add_argument("corpus")
    sp.add_argument("--vocab", help="ranked subword list, one per line")
    sp.add_argument("--byte-fallback", action="store_true")
    sp.add_argument("--tokenizer-id")
    sp.set_defaults(func=_cmd_seg_stats)

    sp = sub.add_parser(
        "translit", parents=[common], help="corpus to/from Latin space"
    )
    sp.add_argument("corpus")
    sp.add_argument("--mapping", required=True)
    sp.add_argument("--invert", action="store_true", help="decode back to NFC")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_translit)

    sp = sub.add_parser("cost", parents=[common], help="token cost accounting")
    sp.add_argument("--records", help="call-record JSONL from a run")
    sp.add_argument("--input-tokens", type=int)
    sp.add_argument("--output-tokens", type=int, default=0)
    sp.add_argument("--input-price", type=float, default=2.50)
    sp.add_argument("--output-price", type=float, default=10.00)
    sp.add_argument("--counterfactual", type=int, help="all-tokens baseline count")
    sp.set_defaults(func=_cmd_cost)

    sp = sub.add_parser(
        "sheet", parents=[common], help="annotation sheet export / summary"
    )
    sp.add_argument("--gold")
    sp.add_argument("--pred")
    sp.add_argument("--labels")
    sp.add_argument("--n", type=int, default=178)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--summarize", help="completed sheet to histogram")
    sp.set_defaults(func=_cmd_sheet)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(argv) if argv is not None else sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (LexnormError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

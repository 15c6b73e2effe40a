"""Command line interface: one subcommand per stage plus ``pipeline``.

Exit codes: 0 success, 1 validation error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import corpus
from .align import make_pairs, read_alignments, read_pairs, read_translations, write_alignments, write_pairs
from .config import PipelineConfig, load_config
from .errors import ConfigError, LineCountMismatch, OffsetError, ParseError, XlnerError
from .pipeline import (
    run_pipeline, stage_align, stage_filter, stage_infill, stage_project, stage_select, stage_split,
)
from .stats import REFERENCE_COUNTS, compute_stats

log = logging.getLogger("xlner")

VALIDATION_ERRORS = (ConfigError, LineCountMismatch, ParseError, OffsetError)


def _parse_split(text):
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad split {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("split needs three comma-separated fractions")
    return parts


def _labels(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlner", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML config file (default: $XLNER_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infill", parents=[common], help="replace anonymization masks with surrogates")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("split", parents=[common], help="split documents into sentences")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--select", action="store_true",
                   help="drop unannotated sentences and excluded labels")
    p.add_argument("--exclude-labels", type=_labels)
    p.add_argument("--drop-report")

    p = sub.add_parser("align", parents=[common], help="train the word aligner and decode alignments")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pairs", help="JSONL with pair_id/src/tgt objects")
    src.add_argument("--source", help="source sentences JSONL (used with --translations)")
    p.add_argument("--translations", help="target text, one line per source sentence")
    p.add_argument("--lexicon", help="TSV of source/target word pairs added to EM training")
    p.add_argument("--iterations", type=int)
    p.add_argument("--tension", type=float)
    p.add_argument("--p-null", type=float)
    p.add_argument("--output-pairs")
    p.add_argument("--alignments", required=True, help="alignment JSONL output")
    p.add_argument("--pharaoh", required=True, help="Pharaoh-format output")
    p.add_argument("--table", help="translation table TSV output")

    p = sub.add_parser("filter", parents=[common], help="discard ill-aligned pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--alignments", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--output", required=True)
    p.add_argument("--rejections", required=True)

    p = sub.add_parser("project", parents=[common], help="project source spans onto target sentences")
    p.add_argument("--pairs", required=True)
    p.add_argument("--alignments", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--output", required=True)
    p.add_argument("--drops", required=True)

    p = sub.add_parser("stats", parents=[common], help="sentence, token and annotation counts")
    p.add_argument("--input", required=True)
    p.add_argument("--json")
    p.add_argument("--reference", action="store_true", help="also print the published counts")

    p = sub.add_parser("train", parents=[common], help="train the NER model")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--log", help="training log CSV")
    p.add_argument("--report-dir", help="write test-split scores here")
    p.add_argument("--lr", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--split", type=_parse_split)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr-decay", action="store_true", default=None)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval", parents=[common], help="score a model on annotated data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tsv")

    p = sub.add_parser("pipeline", parents=[common], help="run all corpus synthesis stages")
    p.add_argument("--input")
    p.add_argument("--output-dir")
    p.add_argument("--translations")
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold", type=float)
    return parser


def _override(cfg: PipelineConfig, **values) -> PipelineConfig:
    return replace(cfg, **{k: v for k, v in values.items() if v is not None})


def cmd_infill(args, cfg):
    cfg = _override(cfg, seed=args.seed)
    docs, report = stage_infill(corpus.read_jsonl(args.input), cfg)
    corpus.write_jsonl(args.output, docs)
    if args.report:
        corpus.write_lines(args.report, report.tsv_lines())
    print(f"{len(docs)} documents, {sum(report.counts.values())} masks replaced")


def cmd_split(args, cfg):
    cfg = _override(cfg, exclude_labels=args.exclude_labels)
    sentences = stage_split(corpus.read_jsonl(args.input), cfg)
    if args.select:
        sentences, report = stage_select(sentences, cfg)
        if args.drop_report:
            corpus.write_lines(args.drop_report, report)
    corpus.write_jsonl(args.output, sentences)
    print(f"{len(sentences)} sentences")


def cmd_align(args, cfg):
    cfg = _override(cfg, align_iterations=args.iterations, tension=args.tension, p_null=args.p_null,
                    lexicon=Path(args.lexicon) if args.lexicon else None)
    if args.pairs:
        pairs = read_pairs(args.pairs)
    else:
        if not args.translations:
            raise ConfigError("--source requires --translations")
        pairs = make_pairs(corpus.read_jsonl(args.source), read_translations(args.translations))
    table, matrices = stage_align(pairs, cfg)
    if args.output_pairs:
        write_pairs(args.output_pairs, pairs)
    write_alignments(args.alignments, args.pharaoh, matrices)
    if args.table:
        corpus.write_lines(args.table, table.tsv_lines())
    print(f"{len(matrices)} pairs aligned; log-likelihood {table.history[0]:.3f} -> {table.history[-1]:.3f}")


def cmd_filter(args, cfg):
    cfg = _override(cfg, threshold=args.threshold)
    pairs = read_pairs(args.pairs)
    kept, rejections = stage_filter(pairs, read_alignments(args.alignments), cfg)
    write_pairs(args.output, kept)
    corpus.write_lines(args.rejections, rejections)
    print(f"kept {len(kept)} of {len(pairs)} pairs (t={cfg.threshold})")


def cmd_project(args, cfg):
    cfg = _override(cfg, threshold=args.threshold)
    projected, drops = stage_project(read_pairs(args.pairs), read_alignments(args.alignments), cfg)
    corpus.write_jsonl(args.output, projected)
    corpus.write_lines(args.drops, drops)
    print(f"{len(projected)} projected sentences, {len(drops) - 1} drop records")


def cmd_stats(args, cfg):
    stats = compute_stats(corpus.read_jsonl(args.input), cfg.labels)
    print(stats.table())
    if args.reference:
        print("\nreference counts (original corpus):")
        for label, count in REFERENCE_COUNTS.items():
            print(f"  {label}: {count}")
    if args.json:
        Path(args.json).write_text(json.dumps(stats.to_json(), indent=2) + "\n", encoding="utf-8")


def cmd_train(args, cfg):
    from .ner import NerModel, evaluate, fit, split_dataset, snap_spans
    from .ner.train import collect_labels

    tc = cfg.train
    tc = replace(tc, **{k: v for k, v in {
        "lr": args.lr, "beta1": args.beta1, "beta2": args.beta2, "split": args.split,
        "eval_every": args.eval_every, "max_iter": args.max_iter,
        "batch_size": args.batch_size, "lr_decay": args.lr_decay, "seed": args.seed,
    }.items() if v is not None})
    docs = [snap_spans(d) for d in corpus.read_jsonl(args.data)]
    if not docs:
        raise ConfigError(f"no training data in {args.data}")
    train_docs, val_docs, test_docs = split_dataset(docs, tc.split, tc.seed)
    model = NerModel(collect_labels(docs, cfg.labels), seed=tc.seed)
    model, history = fit(model, train_docs, val_docs, tc)
    model.save(args.model)
    if args.log:
        corpus.write_lines(args.log, history.csv_lines())
    print(f"splits: train {len(train_docs)} / validation {len(val_docs)} / test {len(test_docs)}")
    print(f"best validation F1 {history.best_f1:.2f} at iteration {history.best_iteration}")
    if test_docs:
        scores = evaluate(model, test_docs)
        print(scores.table())
        if args.report_dir:
            out = Path(args.report_dir)
            out.mkdir(parents=True, exist_ok=True)
            corpus.write_lines(out / "test_scores.tsv", scores.tsv_lines())
            (out / "test_scores.txt").write_text(scores.table() + "\n", encoding="utf-8")


def cmd_eval(args, cfg):
    from .ner import NerModel, evaluate

    model = NerModel.load(args.model)
    scores = evaluate(model, corpus.read_jsonl(args.data))
    print(scores.table())
    if args.tsv:
        corpus.write_lines(args.tsv, scores.tsv_lines())


def cmd_pipeline(args, cfg):
    cfg = _override(
        cfg,
        input=Path(args.input) if args.input else None,
        output_dir=Path(args.output_dir) if args.output_dir else None,
        translations=Path(args.translations) if args.translations else None,
        seed=args.seed, threshold=args.threshold,
    )
    result = run_pipeline(cfg)
    print((result.output_dir / "summary.txt").read_text(encoding="utf-8"), end="")


COMMANDS = {
    "infill": cmd_infill, "split": cmd_split, "align": cmd_align, "filter": cmd_filter,
    "project": cmd_project, "stats": cmd_stats, "train": cmd_train, "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](args, cfg)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return 1
    except XlnerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end corpus synthesis: infill, split, export, align, filter, project.

Translation is external. A run without a translation file stops after
writing ``04_export.txt``; rerunning with the translations (one line per
exported sentence) completes the remaining stages.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

from . import corpus
from .align import (
    AlignmentMatrix, ParallelPair, decode, em_train, make_pairs, read_lexicon, read_translations,
    write_alignments, write_pairs,
)
from .config import PipelineConfig
from .corpus import AnnotatedText, write_jsonl, write_lines
from .errors import StageError, XlnerError
from .infill import InfillReport, SurrogatePool, infill_document
from .project import FilterParams, ProjectionResult, filter_score, project_spans
from .segment import SplitConfig, drop_unannotated, split_sentences
from .stats import compute_stats, exclude_labels

log = logging.getLogger(__name__)

ARTIFACTS = {
    "config": "config.resolved.json",
    "infilled": "01_infilled.jsonl",
    "infill_report": "01_infill_report.tsv",
    "sentences": "02_sentences.jsonl",
    "annotated": "03_annotated.jsonl",
    "drop_report": "03_drop_report.tsv",
    "export": "04_export.txt",
    "pairs": "05_pairs.jsonl",
    "alignments": "05_alignments.jsonl",
    "pharaoh": "05_alignments.pharaoh",
    "table": "05_translation_table.tsv",
    "kept_pairs": "06_kept_pairs.jsonl",
    "rejections": "06_filter_rejections.tsv",
    "projected": "07_projected.jsonl",
    "projection_drops": "07_projection_drops.tsv",
    "stats_json": "stats.json",
    "stats_txt": "stats.txt",
    "summary_json": "summary.json",
    "summary_txt": "summary.txt",
}


def surrogate_pool(cfg: PipelineConfig) -> SurrogatePool:
    kwargs = {}
    if cfg.date_formats:
        kwargs["date_formats"] = cfg.date_formats
    if cfg.phone_format:
        kwargs["phone_format"] = cfg.phone_format
    return SurrogatePool.from_files({k: str(v) for k, v in cfg.pool_files.items()}, **kwargs)


def split_config(cfg: PipelineConfig) -> SplitConfig:
    if cfg.abbreviations_file is None:
        return SplitConfig()
    return SplitConfig.from_file(cfg.abbreviations_file)


# -- stages ------------------------------------------------------------------


def stage_infill(docs, cfg: PipelineConfig):
    try:
        patterns, pool = cfg.mask_patterns(), surrogate_pool(cfg)
    except XlnerError as exc:
        raise StageError("infill", str(exc)) from exc
    out, report = [], InfillReport()
    for doc in docs:
        try:
            new_doc, doc_report = infill_document(doc, patterns, pool, cfg.seed)
        except XlnerError as exc:
            raise StageError("infill", str(exc), doc.doc_id) from exc
        out.append(new_doc)
        report.merge(doc_report)
    return out, report


def stage_split(docs, cfg: PipelineConfig) -> List[AnnotatedText]:
    split_cfg = split_config(cfg)
    out = []
    for doc in docs:
        out.extend(split_sentences(doc, split_cfg))
    return out


def stage_select(sentences: Sequence[AnnotatedText], cfg: PipelineConfig):
    """Drop unannotated sentences and excluded labels; returns (kept, drop report lines)."""
    report = ["doc_id\tsent_id\treason\tspans_removed"]
    annotated = drop_unannotated(sentences)
    for s in sentences:
        if not s.spans:
            report.append(f"{s.doc_id}\t{s.sent_id}\tNoAnnotations\t0")
    banned = set(cfg.exclude_labels)
    kept = exclude_labels(annotated, banned)
    kept_keys = {(d.doc_id, d.sent_id) for d in kept}
    for s in annotated:
        removed = sum(1 for span in s.spans if span.label in banned)
        if (s.doc_id, s.sent_id) not in kept_keys:
            report.append(f"{s.doc_id}\t{s.sent_id}\tOnlyExcludedLabels\t{removed}")
        elif removed:
            report.append(f"{s.doc_id}\t{s.sent_id}\tExcludedLabels\t{removed}")
    allowed = set(cfg.labels)
    for s in kept:
        for span in s.spans:
            if span.label not in allowed:
                raise StageError("split", f"label {span.label!r} not in the configured inventory", s.doc_id)
    return kept, report


def stage_align(pairs: Sequence[ParallelPair], cfg: PipelineConfig):
    """Train on the pairs (plus the optional lexicon) and decode the pairs only."""
    try:
        training = list(pairs) + (read_lexicon(cfg.lexicon) if cfg.lexicon else [])
        table = em_train(training, cfg.align_iterations, cfg.tension, cfg.p_null)
        matrices = [(p.pair_id, decode(p, table)) for p in pairs]
    except XlnerError as exc:
        raise StageError("align", str(exc)) from exc
    return table, matrices


def stage_filter(pairs, matrices: Dict[str, AlignmentMatrix], cfg: PipelineConfig):
    """Returns (kept pairs, rejection report lines)."""
    params = FilterParams(cfg.threshold)
    kept, report = [], ["pair_id\tscore\tthreshold"]
    for pair in pairs:
        if pair.pair_id not in matrices:
            raise StageError("filter", f"no alignment for pair {pair.pair_id!r}", pair.source.doc_id)
        score = filter_score(matrices[pair.pair_id])
        if score <= params.t:
            kept.append(pair)
        else:
            report.append(f"{pair.pair_id}\t{score:.6f}\t{params.t}")
    return kept, report


def stage_project(pairs, matrices: Dict[str, AlignmentMatrix], cfg: PipelineConfig):
    """Returns (projected sentences with at least one span, drop report lines)."""
    params = FilterParams(cfg.threshold)
    out, report = [], ["pair_id\tlabel\tsource_start\tsource_end\treason"]
    for pair in pairs:
        try:
            result: ProjectionResult = project_spans(pair, matrices[pair.pair_id], params)
        except (XlnerError, KeyError) as exc:
            raise StageError("project", str(exc), pair.source.doc_id) from exc
        for span, reason in result.dropped_spans:
            report.append(f"{pair.pair_id}\t{span.label}\t{span.start}\t{span.end}\t{reason}")
        if result.target.spans:
            out.append(result.target)
        else:
            report.append(f"{pair.pair_id}\t-\t-\t-\tEmptySentence")
    return out, report


# -- orchestration ---------------------------------------------------------


@dataclass
class PipelineResult:
    output_dir: Path
    completed: bool
    counts: Dict[str, int] = field(default_factory=dict)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8", newline="\n")


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = {k: out / v for k, v in ARTIFACTS.items()}
    resolved = cfg.resolved()
    resolved.pop("output_dir")
    _write_json(path["config"], resolved)

    try:
        docs = corpus.read_jsonl(cfg.input)
    except XlnerError as exc:
        raise StageError("read", str(exc)) from exc
    counts = {"documents": len(docs), "source_spans": sum(len(d.spans) for d in docs)}

    infilled, infill_report = stage_infill(docs, cfg)
    write_jsonl(path["infilled"], infilled)
    write_lines(path["infill_report"], infill_report.tsv_lines())
    counts["masks_replaced"] = sum(infill_report.counts.values())

    sentences = stage_split(infilled, cfg)
    write_jsonl(path["sentences"], sentences)
    counts["sentences"] = len(sentences)

    annotated, drop_report = stage_select(sentences, cfg)
    write_jsonl(path["annotated"], annotated)
    write_lines(path["drop_report"], drop_report)
    write_lines(path["export"], [s.text for s in annotated])
    counts["annotated_sentences"] = len(annotated)
    counts["annotated_spans"] = sum(len(s.spans) for s in annotated)

    if cfg.translations is None:
        _summarize(path, counts, completed=False)
        return PipelineResult(out, False, counts)

    pairs = make_pairs(annotated, read_translations(cfg.translations))
    table, matrices = stage_align(pairs, cfg)
    write_pairs(path["pairs"], pairs)
    write_alignments(path["alignments"], path["pharaoh"], matrices)
    write_lines(path["table"], table.tsv_lines())

    by_id = dict(matrices)
    kept, rejections = stage_filter(pairs, by_id, cfg)
    write_pairs(path["kept_pairs"], kept)
    write_lines(path["rejections"], rejections)
    counts["pairs"] = len(pairs)
    counts["pairs_rejected"] = len(pairs) - len(kept)

    projected, drops = stage_project(kept, by_id, cfg)
    write_jsonl(path["projected"], projected)
    write_lines(path["projection_drops"], drops)
    counts["projected_sentences"] = len(projected)
    counts["projected_spans"] = sum(len(s.spans) for s in projected)
    counts["spans_dropped_in_projection"] = sum(len(p.source.spans) for p in kept) - counts["projected_spans"]

    stats = compute_stats(projected, cfg.labels)
    _write_json(path["stats_json"], stats.to_json())
    path["stats_txt"].write_text(stats.table() + "\n", encoding="utf-8", newline="\n")
    _summarize(path, counts, completed=True)
    return PipelineResult(out, True, counts)


def _summarize(path, counts, completed):
    _write_json(path["summary_json"], {"completed": completed, "counts": counts})
    lines = [f"{k}: {v}" for k, v in counts.items()]
    if not completed:
        lines.append(f"paused: translate {path['export'].name} line by line and rerun "
                     "with --translations")
    path["summary_txt"].write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

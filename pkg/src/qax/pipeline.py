"""End-to-end dataset translation: translate, re-align, filter, report.

Per paragraph, the context is translated once; per QA, the question and
each answer are translated and the answer is re-located inside the
translated context by the aligner.  Answerable records below the similarity
threshold are filtered out; unanswerable records (which carry no similarity
score) are downsampled to a per-split budget.  Failures are quarantined per
record: a multi-day provider run must not die on one bad response.

A checkpoint journal (append-only, newline-delimited JSON, headed by a
digest of input+config) makes interrupted runs resumable: completed
translations are replayed from the journal, never recomputed, so a resumed
run is byte-identical to an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

from .aligner import (
    AlignmentQuery,
    NoFeasibleWindow,
    SimilarityWeights,
    UpdateRule,
    align_answer,
)
from .providers import ProviderClient, ProviderConfig, ProviderError, get_client
from .squad_format import (
    AlignmentMeta,
    Answer,
    Article,
    Dataset,
    Paragraph,
    QA,
    serialize_dataset,
    validate_dataset,
)

STATUS_ALIGNED = "aligned"
STATUS_FILTERED = "filtered_low_similarity"
STATUS_UNANSWERABLE_KEPT = "unanswerable_kept"
STATUS_UNANSWERABLE_DROPPED = "unanswerable_dropped"
STATUS_TRANSLATION_FAILED = "translation_failed"
STATUS_NO_FEASIBLE_WINDOW = "no_feasible_window"

_HISTOGRAM_EDGES = [k / 10 for k in range(1, 10)]  # 0.1 .. 0.9

Split = Literal["train", "dev"]


class ChecksumMismatch(RuntimeError):
    """Checkpoint journal was written for a different input or config."""


@dataclass(frozen=True)
class PipelineConfig:
    provider: ProviderConfig
    weights: SimilarityWeights = SimilarityWeights()
    similarity_threshold: float = 0.6
    unanswerable_keep_train: int = 6000
    unanswerable_keep_dev: int = 700
    rng_seed: int = 0
    max_stride: int = 3
    update_rule: UpdateRule = "lexicographic"
    checkpoint_path: Path | None = None

    def __post_init__(self):
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be in [0,1]")
        if self.unanswerable_keep_train < 0 or self.unanswerable_keep_dev < 0:
            raise ValueError("keep counts must be >= 0")


@dataclass(frozen=True)
class RecordOutcome:
    qa_id: str
    status: str
    similarity: float | None = None
    proximity: float | None = None


@dataclass
class TranslatedEntry:
    """Pre-filter result for one QA.

    status is one of: aligned, unanswerable (kept/dropped is decided at
    downsampling), translation_failed, no_feasible_window.
    """

    qa_id: str
    status: str
    title: str | None = None
    context: str | None = None
    question: str | None = None
    answers: tuple[Answer, ...] = ()
    meta: AlignmentMeta | None = None


@dataclass
class PipelineReport:
    outcomes: list[RecordOutcome]
    histogram: list[int]
    counts: dict[str, int]

    def to_dict(self) -> dict:
        out = []
        for r in self.outcomes:
            rec: dict = {"qa_id": r.qa_id, "status": r.status}
            if r.similarity is not None:
                rec["similarity"] = r.similarity
            if r.proximity is not None:
                rec["proximity"] = r.proximity
            out.append(rec)
        return {"counts": self.counts, "histogram": self.histogram, "outcomes": out}

    def to_json(self) -> bytes:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1).encode("utf-8")

    def render_text(self) -> str:
        lines = ["similarity distribution"]
        peak = max(self.histogram) if any(self.histogram) else 1
        for k, n in enumerate(self.histogram):
            lo = k / 10
            closer = "]" if k == 9 else ")"
            bar = "#" * round(40 * n / peak) if peak else ""
            lines.append(f"[{lo:.1f},{lo + 0.1:.1f}{closer} {n:>8} {bar}")
        lines.append("")
        for key, value in self.counts.items():
            lines.append(f"{key:>22}: {value}")
        return "\n".join(lines) + "\n"


def similarity_histogram(records) -> list[int]:
    """Counts in ten bins [0,0.1), ..., [0.9,1.0]; the last bin is right-closed.

    Records without a similarity value are excluded.
    """
    bins = [0] * 10
    for r in records:
        if r.similarity is None:
            continue
        bins[min(bisect_right(_HISTOGRAM_EDGES, r.similarity), 9)] += 1
    return bins


def filter_by_threshold(records, threshold: float):
    """Partition answerable records by similarity >= threshold (inclusive).

    Returns (kept, filtered); filtered records get status
    filtered_low_similarity.  Records without a similarity score
    (unanswerable, failed) pass through in kept, unaffected.
    """
    kept = []
    filtered = []
    for r in records:
        if r.status == STATUS_ALIGNED and r.similarity is not None and r.similarity < threshold:
            filtered.append(replace(r, status=STATUS_FILTERED))
        else:
            kept.append(r)
    return kept, filtered


def downsample_unanswerable(records, keep_n: int, rng_seed: int):
    """Keep a uniform random sample of exactly min(keep_n, available)
    unanswerable records; the rest become unanswerable_dropped.

    Answerable records are untouched and document order is preserved.
    Deterministic for a fixed seed.
    """
    idxs = [i for i, r in enumerate(records) if r.status == STATUS_UNANSWERABLE_KEPT]
    rng = random.Random(rng_seed)
    kept_idx = set(rng.sample(idxs, min(keep_n, len(idxs))))
    out = []
    for i, r in enumerate(records):
        if r.status == STATUS_UNANSWERABLE_KEPT and i not in kept_idx:
            out.append(replace(r, status=STATUS_UNANSWERABLE_DROPPED))
        else:
            out.append(r)
    return out


def _translate_optional_title(client: ProviderClient, title: str) -> str:
    # Empty titles are legal; pass them through instead of tripping EmptyInput.
    if not title.strip():
        return title
    return client.translate(title)


def _translate_qa(
    qa: QA, context: str, context_t: str | None, cfg: PipelineConfig, client: ProviderClient
) -> TranslatedEntry:
    if context_t is None:
        return TranslatedEntry(qa.id, STATUS_TRANSLATION_FAILED)
    try:
        question_t = client.translate(qa.question)
    except ProviderError:
        return TranslatedEntry(qa.id, STATUS_TRANSLATION_FAILED)
    if qa.is_impossible:
        return TranslatedEntry(
            qa.id, "unanswerable", context=context_t, question=question_t
        )
    answers_out = []
    best = None
    for a in qa.answers:
        try:
            answer_t = client.translate(a.text)
        except ProviderError:
            return TranslatedEntry(qa.id, STATUS_TRANSLATION_FAILED)
        if not answer_t.strip():
            return TranslatedEntry(qa.id, STATUS_TRANSLATION_FAILED)
        rel_pos = min(1.0, a.answer_start / max(1, len(context)))
        query = AlignmentQuery(
            translated_context=context_t,
            translated_answer=answer_t,
            original_answer_rel_pos=rel_pos,
            max_stride=cfg.max_stride,
        )
        try:
            result = align_answer(query, cfg.weights, client.embed, cfg.update_rule)
        except NoFeasibleWindow:
            return TranslatedEntry(qa.id, STATUS_NO_FEASIBLE_WINDOW)
        except ProviderError:
            return TranslatedEntry(qa.id, STATUS_TRANSLATION_FAILED)
        answers_out.append(Answer(result.answer_text, result.answer_start))
        if best is None or result.score > best.score:
            best = result
    meta = AlignmentMeta(best.score, best.proximity, best.stride)
    return TranslatedEntry(
        qa.id,
        STATUS_ALIGNED,
        context=context_t,
        question=question_t,
        answers=tuple(answers_out),
        meta=meta,
    )


def translate_entry(
    article_title: str,
    context: str,
    qa: QA,
    cfg: PipelineConfig,
    client: ProviderClient | None = None,
) -> TranslatedEntry:
    """Translate one QA with its title and context, re-aligning each answer.

    Title and context cross the provider at most once thanks to the cache.
    Provider failures are captured in the entry status, never raised.
    """
    client = client or get_client(cfg.provider)
    try:
        title_t = _translate_optional_title(client, article_title)
    except ProviderError:
        title_t = article_title
    try:
        context_t = client.translate(context) if context.strip() else context
    except ProviderError:
        context_t = None
    entry = _translate_qa(qa, context, context_t, cfg, client)
    entry.title = title_t
    if entry.context is None:
        entry.context = context_t
    return entry


def _run_digest(input_ds: Dataset, split: str, cfg: PipelineConfig) -> str:
    signature = {
        "split": split,
        "w1": cfg.weights.w1,
        "w2": cfg.weights.w2,
        "threshold": cfg.similarity_threshold,
        "keep_train": cfg.unanswerable_keep_train,
        "keep_dev": cfg.unanswerable_keep_dev,
        "seed": cfg.rng_seed,
        "max_stride": cfg.max_stride,
        "update_rule": cfg.update_rule,
        "translate_endpoint": cfg.provider.translate_endpoint,
        "embed_endpoint": cfg.provider.embed_endpoint,
        "source_lang": cfg.provider.source_lang,
        "target_lang": cfg.provider.target_lang,
    }
    h = hashlib.sha256()
    h.update(serialize_dataset(input_ds))
    h.update(json.dumps(signature, sort_keys=True).encode("utf-8"))
    return h.hexdigest()


class _Journal:
    """Append-only checkpoint journal; line 1 is a header with the run digest."""

    def __init__(self, path: Path, digest: str):
        self.path = Path(path)
        self.digest = digest
        self._lock = threading.Lock()
        self.titles: dict[int, str | None] = {}
        self.contexts: dict[tuple[int, int], str | None] = {}
        self.entries: dict[str, TranslatedEntry] = {}
        if self.path.exists():
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8") as f:
                f.write(json.dumps({"format": 1, "digest": digest}) + "\n")
        self._fh = open(self.path, "a", encoding="utf-8")

    def _load(self):
        with open(self.path, encoding="utf-8") as f:
            header_line = f.readline()
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as e:
                raise ChecksumMismatch(f"unreadable checkpoint header: {e}") from e
            if header.get("digest") != self.digest:
                raise ChecksumMismatch(
                    "checkpoint was written for a different input/config"
                )
            for line in f:
                # A crash can truncate the final line; everything before it
                # is still a valid prefix of the run.
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break
                kind = rec.get("kind")
                if kind == "title":
                    self.titles[rec["article"]] = rec["text"]
                elif kind == "context":
                    self.contexts[(rec["article"], rec["paragraph"])] = rec["text"]
                elif kind == "qa":
                    meta = None
                    if rec.get("similarity") is not None:
                        meta = AlignmentMeta(
                            rec["similarity"], rec["proximity"], rec["stride"]
                        )
                    self.entries[rec["qa_id"]] = TranslatedEntry(
                        qa_id=rec["qa_id"],
                        status=rec["status"],
                        question=rec.get("question"),
                        answers=tuple(
                            Answer(a["text"], a["answer_start"])
                            for a in rec.get("answers", [])
                        ),
                        meta=meta,
                    )

    def _write(self, rec: dict):
        with self._lock:
            self._fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            self._fh.flush()

    def record_title(self, article: int, text: str | None):
        self.titles[article] = text
        self._write({"kind": "title", "article": article, "text": text})

    def record_context(self, article: int, paragraph: int, text: str | None):
        self.contexts[(article, paragraph)] = text
        self._write(
            {"kind": "context", "article": article, "paragraph": paragraph, "text": text}
        )

    def record_qa(self, entry: TranslatedEntry):
        self.entries[entry.qa_id] = entry
        rec = {
            "kind": "qa",
            "qa_id": entry.qa_id,
            "status": entry.status,
            "question": entry.question,
            "answers": [
                {"text": a.text, "answer_start": a.answer_start} for a in entry.answers
            ],
            "similarity": entry.meta.similarity if entry.meta else None,
            "proximity": entry.meta.proximity if entry.meta else None,
            "stride": entry.meta.window_stride_used if entry.meta else None,
        }
        self._write(rec)

    def close(self):
        self._fh.close()


class _NullJournal:
    def __init__(self):
        self.titles = {}
        self.contexts = {}
        self.entries = {}

    def record_title(self, article, text):
        self.titles[article] = text

    def record_context(self, article, paragraph, text):
        self.contexts[(article, paragraph)] = text

    def record_qa(self, entry):
        self.entries[entry.qa_id] = entry

    def close(self):
        pass


def run_pipeline(
    input_ds: Dataset,
    split: Split,
    cfg: PipelineConfig,
    client: ProviderClient | None = None,
) -> tuple[Dataset, PipelineReport]:
    """Translate a whole dataset and return (output dataset, report).

    Deterministic for a fixed (input, config, deterministic providers).
    Raises ChecksumMismatch when the checkpoint at cfg.checkpoint_path was
    written for different input or config.
    """
    problems = validate_dataset(input_ds)
    if problems:
        raise ValueError(f"input dataset invalid: {problems[0]}")
    if split not in ("train", "dev"):
        raise ValueError(f"unknown split {split!r}")
    client = client or get_client(cfg.provider)
    if cfg.checkpoint_path is not None:
        journal = _Journal(cfg.checkpoint_path, _run_digest(input_ds, split, cfg))
    else:
        journal = _NullJournal()

    try:
        _translate_dataset(input_ds, cfg, client, journal)
    finally:
        journal.close()

    records = _provisional_records(input_ds, journal.entries)
    kept, filtered = filter_by_threshold(records, cfg.similarity_threshold)
    keep_n = cfg.unanswerable_keep_train if split == "train" else cfg.unanswerable_keep_dev
    kept = downsample_unanswerable(kept, keep_n, cfg.rng_seed)

    by_id = {r.qa_id: r for r in kept}
    by_id.update({r.qa_id: r for r in filtered})
    final_records = [by_id[r.qa_id] for r in records]

    output = _assemble_output(input_ds, journal, final_records)
    report = _build_report(final_records)
    return output, report


def _translate_dataset(input_ds, cfg, client, journal):
    max_workers = cfg.provider.max_in_flight

    # Phase 1: titles and contexts, each unique string crossing the provider
    # exactly once (deduplicated here, persisted by the provider cache).
    title_jobs = []
    context_jobs = []
    for ai, article in enumerate(input_ds.articles):
        if ai not in journal.titles:
            title_jobs.append((ai, article.title))
        for pi, para in enumerate(article.paragraphs):
            if (ai, pi) not in journal.contexts:
                context_jobs.append((ai, pi, para.context))

    def do_title(job):
        ai, title = job
        try:
            return ai, _translate_optional_title(client, title)
        except ProviderError:
            # A lost title must not sink an article's QAs; fall back.
            return ai, title

    def do_context(job):
        ai, pi, context = job
        try:
            text = client.translate(context) if context.strip() else context
        except ProviderError:
            text = None
        return ai, pi, text

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for ai, text in pool.map(do_title, title_jobs):
            journal.record_title(ai, text)
        for ai, pi, text in pool.map(do_context, context_jobs):
            journal.record_context(ai, pi, text)

    # Phase 2: questions, answers, alignment.
    qa_jobs = []
    for ai, article in enumerate(input_ds.articles):
        for pi, para in enumerate(article.paragraphs):
            for qa in para.qas:
                if qa.id not in journal.entries:
                    qa_jobs.append((qa, para.context, journal.contexts[(ai, pi)]))

    def do_qa(job):
        qa, context, context_t = job
        return _translate_qa(qa, context, context_t, cfg, client)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for entry in pool.map(do_qa, qa_jobs):
            journal.record_qa(entry)


def _provisional_records(input_ds, entries) -> list[RecordOutcome]:
    records = []
    for article in input_ds.articles:
        for para in article.paragraphs:
            for qa in para.qas:
                e = entries[qa.id]
                if e.status == STATUS_ALIGNED:
                    records.append(
                        RecordOutcome(
                            qa.id, STATUS_ALIGNED, e.meta.similarity, e.meta.proximity
                        )
                    )
                elif e.status == "unanswerable":
                    records.append(RecordOutcome(qa.id, STATUS_UNANSWERABLE_KEPT))
                else:
                    records.append(RecordOutcome(qa.id, e.status))
    return records


def _assemble_output(input_ds, journal, final_records) -> Dataset:
    status_by_id = {r.qa_id: r.status for r in final_records}
    articles = []
    for ai, article in enumerate(input_ds.articles):
        title_t = journal.titles.get(ai)
        if title_t is None:
            title_t = article.title
        paragraphs = []
        for pi, para in enumerate(article.paragraphs):
            context_t = journal.contexts.get((ai, pi))
            if context_t is None:
                continue
            qas = []
            for qa in para.qas:
                status = status_by_id[qa.id]
                entry = journal.entries[qa.id]
                if status == STATUS_ALIGNED:
                    qas.append(
                        QA(
                            id=qa.id,
                            question=entry.question,
                            is_impossible=False,
                            answers=entry.answers,
                            alignment_meta=entry.meta,
                            extra=qa.extra,
                        )
                    )
                elif status == STATUS_UNANSWERABLE_KEPT:
                    # plausible_answers are dropped: unanswerables carry no
                    # similarity and downstream evaluation ignores them.
                    qas.append(
                        QA(
                            id=qa.id,
                            question=entry.question,
                            is_impossible=True,
                            extra=qa.extra,
                        )
                    )
            paragraphs.append(Paragraph(context=context_t, qas=tuple(qas), extra=para.extra))
        articles.append(Article(title=title_t, paragraphs=tuple(paragraphs), extra=article.extra))
    return Dataset(version=input_ds.version, articles=tuple(articles), extra=input_ds.extra)


def _build_report(final_records) -> PipelineReport:
    counts = {
        "answerable_kept": 0,
        "answerable_filtered": 0,
        "unanswerable_kept": 0,
        "unanswerable_dropped": 0,
        "failed": 0,
    }
    for r in final_records:
        if r.status == STATUS_ALIGNED:
            counts["answerable_kept"] += 1
        elif r.status == STATUS_FILTERED:
            counts["answerable_filtered"] += 1
        elif r.status == STATUS_UNANSWERABLE_KEPT:
            counts["unanswerable_kept"] += 1
        elif r.status == STATUS_UNANSWERABLE_DROPPED:
            counts["unanswerable_dropped"] += 1
        else:
            counts["failed"] += 1
    return PipelineReport(
        outcomes=list(final_records),
        histogram=similarity_histogram(final_records),
        counts=counts,
    )

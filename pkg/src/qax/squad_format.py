"""SQuAD 2.0 interchange format: parse, validate, serialize.

The on-disk layout is the official distribution's: a top-level object with
``version`` and a ``data`` array of articles, each holding ``paragraphs``
with a ``context`` and its ``qas``.  Answer offsets are 0-based code-point
positions into the owning context.

Unknown keys at every level are preserved verbatim in ``extra`` and written
back on serialization, so third-party annotations survive a round trip.
The only key this package adds on output is an optional per-QA
``alignment`` object (``similarity``, ``proximity``, ``stride``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

_DATASET_KEYS = {"version", "data"}
_ARTICLE_KEYS = {"title", "paragraphs"}
_PARAGRAPH_KEYS = {"context", "qas"}
_QA_KEYS = {"id", "question", "is_impossible", "answers", "plausible_answers", "alignment"}
_ANSWER_KEYS = {"text", "answer_start"}


class FormatError(ValueError):
    """Base for parse/serialize failures; carries a path into the document."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class MalformedSyntax(FormatError):
    """Input is not parseable UTF-8 JSON at all."""


class SchemaViolation(FormatError):
    """Parseable JSON that does not follow the SQuAD 2.0 layout."""


class InvariantViolation(FormatError):
    """A dataset handed to serialize_dataset breaks an offset invariant."""


@dataclass(frozen=True)
class AlignmentMeta:
    """Audit record of a span re-alignment: best score, proximity, stride used."""

    similarity: float
    proximity: float
    window_stride_used: int


@dataclass(frozen=True)
class Answer:
    text: str
    answer_start: int
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class QA:
    id: str
    question: str
    is_impossible: bool = False
    answers: tuple[Answer, ...] = ()
    plausible_answers: tuple[Answer, ...] | None = None
    alignment_meta: AlignmentMeta | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Paragraph:
    context: str
    qas: tuple[QA, ...] = ()
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Article:
    title: str
    paragraphs: tuple[Paragraph, ...] = ()
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    version: str
    articles: tuple[Article, ...] = ()
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str


def _extras(obj: dict, known: set[str]) -> dict:
    return {k: v for k, v in obj.items() if k not in known}


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaViolation(f"missing required key '{key}'", path)
    return obj[key]


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(f"expected string, got {type(value).__name__}", path)
    return value


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(f"expected integer, got {type(value).__name__}", path)
    return value


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(f"expected number, got {type(value).__name__}", path)
    return float(value)


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaViolation(f"expected array, got {type(value).__name__}", path)
    return value


def _as_obj(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(f"expected object, got {type(value).__name__}", path)
    return value


def _parse_answer(obj: Any, path: str) -> Answer:
    obj = _as_obj(obj, path)
    return Answer(
        text=_as_str(_require(obj, "text", path), f"{path}.text"),
        answer_start=_as_int(_require(obj, "answer_start", path), f"{path}.answer_start"),
        extra=_extras(obj, _ANSWER_KEYS),
    )


def _parse_alignment(obj: Any, path: str) -> AlignmentMeta:
    obj = _as_obj(obj, path)
    return AlignmentMeta(
        similarity=_as_number(_require(obj, "similarity", path), f"{path}.similarity"),
        proximity=_as_number(_require(obj, "proximity", path), f"{path}.proximity"),
        window_stride_used=_as_int(_require(obj, "stride", path), f"{path}.stride"),
    )


def _parse_qa(obj: Any, path: str) -> QA:
    obj = _as_obj(obj, path)
    answers_raw = _as_list(_require(obj, "answers", path), f"{path}.answers")
    answers = tuple(
        _parse_answer(a, f"{path}.answers[{i}]") for i, a in enumerate(answers_raw)
    )
    plausible = None
    if "plausible_answers" in obj:
        plausible_raw = _as_list(obj["plausible_answers"], f"{path}.plausible_answers")
        plausible = tuple(
            _parse_answer(a, f"{path}.plausible_answers[{i}]")
            for i, a in enumerate(plausible_raw)
        )
    is_impossible = False
    if "is_impossible" in obj:
        if not isinstance(obj["is_impossible"], bool):
            raise SchemaViolation("expected boolean", f"{path}.is_impossible")
        is_impossible = obj["is_impossible"]
    alignment = None
    if "alignment" in obj:
        alignment = _parse_alignment(obj["alignment"], f"{path}.alignment")
    return QA(
        id=_as_str(_require(obj, "id", path), f"{path}.id"),
        question=_as_str(_require(obj, "question", path), f"{path}.question"),
        is_impossible=is_impossible,
        answers=answers,
        plausible_answers=plausible,
        alignment_meta=alignment,
        extra=_extras(obj, _QA_KEYS),
    )


def _parse_paragraph(obj: Any, path: str) -> Paragraph:
    obj = _as_obj(obj, path)
    qas_raw = _as_list(_require(obj, "qas", path), f"{path}.qas")
    return Paragraph(
        context=_as_str(_require(obj, "context", path), f"{path}.context"),
        qas=tuple(_parse_qa(q, f"{path}.qas[{i}]") for i, q in enumerate(qas_raw)),
        extra=_extras(obj, _PARAGRAPH_KEYS),
    )


def _parse_article(obj: Any, path: str) -> Article:
    obj = _as_obj(obj, path)
    paragraphs_raw = _as_list(_require(obj, "paragraphs", path), f"{path}.paragraphs")
    return Article(
        title=_as_str(_require(obj, "title", path), f"{path}.title"),
        paragraphs=tuple(
            _parse_paragraph(p, f"{path}.paragraphs[{i}]")
            for i, p in enumerate(paragraphs_raw)
        ),
        extra=_extras(obj, _ARTICLE_KEYS),
    )


def parse_dataset(raw: bytes | str) -> Dataset:
    """Parse SQuAD 2.0 JSON into the object tree.

    Raises MalformedSyntax for undecodable/unparseable input and
    SchemaViolation (with a path) for layout problems.  Semantic invariants
    (offsets, id uniqueness) are *not* enforced here; use validate_dataset.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedSyntax(f"not valid UTF-8: {e}") from e
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise MalformedSyntax(f"not valid JSON: {e}") from e
    doc = _as_obj(doc, "")
    version = _as_str(_require(doc, "version", ""), "version")
    data = _as_list(_require(doc, "data", ""), "data")
    articles = tuple(_parse_article(a, f"data[{i}]") for i, a in enumerate(data))
    return Dataset(version=version, articles=articles, extra=_extras(doc, _DATASET_KEYS))


def _answer_dict(a: Answer) -> dict:
    out: dict[str, Any] = {"text": a.text, "answer_start": a.answer_start}
    out.update(a.extra)
    return out


def _check_offsets(context: str, answers: tuple[Answer, ...], path: str) -> None:
    for i, a in enumerate(answers):
        if a.answer_start < 0 or a.answer_start + len(a.text) > len(context):
            raise InvariantViolation(
                f"answer_start {a.answer_start} out of range for text of length "
                f"{len(a.text)} in context of length {len(context)}",
                f"{path}[{i}]",
            )
        if context[a.answer_start : a.answer_start + len(a.text)] != a.text:
            raise InvariantViolation(
                "context substring at answer_start does not equal answer text",
                f"{path}[{i}]",
            )


def serialize_dataset(d: Dataset) -> bytes:
    """Serialize back to the layout accepted by parse_dataset (UTF-8 JSON).

    Raises InvariantViolation if any answer offset fails to re-validate
    against its context.
    """
    data = []
    for ai, article in enumerate(d.articles):
        paragraphs = []
        for pi, para in enumerate(article.paragraphs):
            qas = []
            for qi, qa in enumerate(para.qas):
                path = f"data[{ai}].paragraphs[{pi}].qas[{qi}]"
                _check_offsets(para.context, qa.answers, f"{path}.answers")
                if qa.plausible_answers:
                    _check_offsets(
                        para.context, qa.plausible_answers, f"{path}.plausible_answers"
                    )
                qa_obj: dict[str, Any] = {
                    "id": qa.id,
                    "question": qa.question,
                    "is_impossible": qa.is_impossible,
                    "answers": [_answer_dict(a) for a in qa.answers],
                }
                if qa.plausible_answers is not None:
                    qa_obj["plausible_answers"] = [
                        _answer_dict(a) for a in qa.plausible_answers
                    ]
                if qa.alignment_meta is not None:
                    qa_obj["alignment"] = {
                        "similarity": qa.alignment_meta.similarity,
                        "proximity": qa.alignment_meta.proximity,
                        "stride": qa.alignment_meta.window_stride_used,
                    }
                qa_obj.update(qa.extra)
                qas.append(qa_obj)
            para_obj: dict[str, Any] = {"context": para.context, "qas": qas}
            para_obj.update(para.extra)
            paragraphs.append(para_obj)
        art_obj: dict[str, Any] = {"title": article.title, "paragraphs": paragraphs}
        art_obj.update(article.extra)
        data.append(art_obj)
    doc: dict[str, Any] = {"version": d.version, "data": data}
    doc.update(d.extra)
    return json.dumps(doc, ensure_ascii=False).encode("utf-8")


def validate_dataset(d: Dataset) -> list[Violation]:
    """Return every violated invariant; empty list iff the dataset is valid.

    Never raises.  Checks: qa-id uniqueness, is_impossible/answers
    consistency, answer-offset soundness (gold and plausible), and non-empty
    context wherever a paragraph holds an answerable QA.
    """
    violations: list[Violation] = []
    seen_ids: dict[str, str] = {}

    def check_answers(answers, context, path):
        for i, a in enumerate(answers):
            apath = f"{path}[{i}]"
            if a.answer_start < 0 or a.answer_start + len(a.text) > len(context):
                violations.append(
                    Violation(
                        "offset_out_of_range",
                        apath,
                        f"answer_start {a.answer_start} with text length "
                        f"{len(a.text)} exceeds context length {len(context)}",
                    )
                )
            elif context[a.answer_start : a.answer_start + len(a.text)] != a.text:
                violations.append(
                    Violation(
                        "offset_mismatch",
                        apath,
                        f"context at {a.answer_start} does not spell {a.text!r}",
                    )
                )

    for ai, article in enumerate(d.articles):
        for pi, para in enumerate(article.paragraphs):
            ppath = f"data[{ai}].paragraphs[{pi}]"
            has_answerable = any(not qa.is_impossible for qa in para.qas)
            if has_answerable and not para.context:
                violations.append(
                    Violation(
                        "empty_context",
                        f"{ppath}.context",
                        "empty context in a paragraph with answerable questions",
                    )
                )
            for qi, qa in enumerate(para.qas):
                qpath = f"{ppath}.qas[{qi}]"
                if qa.id in seen_ids:
                    violations.append(
                        Violation(
                            "duplicate_id",
                            f"{qpath}.id",
                            f"id {qa.id!r} already used at {seen_ids[qa.id]}",
                        )
                    )
                else:
                    seen_ids[qa.id] = f"{qpath}.id"
                if qa.is_impossible and qa.answers:
                    violations.append(
                        Violation(
                            "impossible_with_answers",
                            f"{qpath}.answers",
                            "is_impossible question carries answers",
                        )
                    )
                if not qa.is_impossible and not qa.answers:
                    violations.append(
                        Violation(
                            "answerable_without_answers",
                            f"{qpath}.answers",
                            "answerable question has no answers",
                        )
                    )
                check_answers(qa.answers, para.context, f"{qpath}.answers")
                if qa.plausible_answers:
                    check_answers(
                        qa.plausible_answers, para.context, f"{qpath}.plausible_answers"
                    )
    return violations


def iter_qas(d: Dataset):
    """Yield (article_index, paragraph_index, article, paragraph, qa) tuples."""
    for ai, article in enumerate(d.articles):
        for pi, para in enumerate(article.paragraphs):
            for qa in para.qas:
                yield ai, pi, article, para, qa

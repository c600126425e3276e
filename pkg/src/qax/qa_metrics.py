"""Exact Match and token-level F1 for extractive QA prediction files.

Follows the SQuAD 2.0 evaluation conventions (lowercase, strip punctuation
and English articles, whitespace tokens, max over gold answers, macro
average over questions), extended with Ethiopic punctuation removal so that
Amharic predictions normalize sensibly.  English article removal is kept
even for Amharic text: the tokens simply never occur, and English fixtures
stay comparable with the official evaluator.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass, field

from .squad_format import Dataset

_ETHIOPIC_PUNCT = "፡።፣፤፥፦፧፨"  # ፡ ። ፣ ፤ ፥ ፦ ፧ ፨
_PUNCT = set(string.punctuation) | set(_ETHIOPIC_PUNCT)
_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")


class UnknownQaId(KeyError):
    """Prediction refers to a qa id absent from the gold dataset."""


@dataclass
class EvalSummary:
    exact_match: float
    f1: float
    n_evaluated: int
    n_missing_predictions: int = 0
    per_question: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "f1": self.f1,
            "n_evaluated": self.n_evaluated,
            "n_missing_predictions": self.n_missing_predictions,
            "per_question": {
                qid: {"em": em, "f1": f1} for qid, (em, f1) in self.per_question.items()
            },
        }


def normalize_answer(s: str) -> list[str]:
    """Lowercase, drop ASCII+Ethiopic punctuation and English articles, tokenize."""
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES_RE.sub(" ", s)
    return s.split()


def _gold_token_lists(golds: list[str]) -> list[list[str]]:
    # Empty golds list denotes an unanswerable question, matched by the
    # empty prediction; same convention as the official evaluator's [''].
    return [normalize_answer(g) for g in golds] or [[]]


def compute_em(pred: str, golds: list[str]) -> int:
    pred_tokens = normalize_answer(pred)
    return int(any(pred_tokens == g for g in _gold_token_lists(golds)))


def _f1_single(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens or not gold_tokens:
        # Either side normalizes to no-answer: full credit iff both do.
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def compute_f1(pred: str, golds: list[str]) -> float:
    pred_tokens = normalize_answer(pred)
    return max(_f1_single(pred_tokens, g) for g in _gold_token_lists(golds))


def gold_answer_texts(qa) -> list[str]:
    """Gold strings for scoring: answer texts that survive normalization.

    Unanswerable questions, and answerable ones whose every gold normalizes
    to nothing, yield the empty list (the unanswerable convention).
    """
    if qa.is_impossible:
        return []
    return [a.text for a in qa.answers if normalize_answer(a.text)]


def evaluate_predictions(preds: dict[str, str], gold: Dataset) -> EvalSummary:
    """Macro-averaged EM/F1 (percent) of a prediction map against gold.

    Every gold question counts; questions missing from preds score 0 and
    are tallied in n_missing_predictions.  A prediction for an unknown id
    raises UnknownQaId.
    """
    gold_qas = []
    gold_ids = set()
    for article in gold.articles:
        for para in article.paragraphs:
            for qa in para.qas:
                gold_qas.append(qa)
                gold_ids.add(qa.id)
    for qid in preds:
        if qid not in gold_ids:
            raise UnknownQaId(qid)

    per_question: dict[str, tuple[float, float]] = {}
    n_missing = 0
    em_sum = 0.0
    f1_sum = 0.0
    for qa in gold_qas:
        if qa.id not in preds:
            n_missing += 1
            per_question[qa.id] = (0.0, 0.0)
            continue
        golds = gold_answer_texts(qa)
        em = float(compute_em(preds[qa.id], golds))
        f1 = compute_f1(preds[qa.id], golds)
        per_question[qa.id] = (em, f1)
        em_sum += em
        f1_sum += f1
    total = len(gold_qas)
    return EvalSummary(
        exact_match=100.0 * em_sum / total if total else 0.0,
        f1=100.0 * f1_sum / total if total else 0.0,
        n_evaluated=total,
        n_missing_predictions=n_missing,
        per_question=per_question,
    )

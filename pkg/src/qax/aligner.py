"""Answer-span alignment inside a translated context.

Candidate spans are word windows of the translated context, of the answer's
word count plus a stride of 0..max_stride extra words (translations gain and
lose function words, so windows grow rather than skip start positions).
Each window is scored

    w1 * clamp(cosine(embed(answer), embed(window)), 0, 1)
      + w2 * lcs_similarity(window, answer)

and the best window wins.  Two update rules exist:

* ``lexicographic`` (default): maximize score; among windows within 1e-9 of
  the maximum, minimize proximity to the original answer's relative
  position; remaining ties break on smallest char_start.
* ``paper_literal``: a nested update that replaces the incumbent only when
  the score improves AND the proximity improves, scanning in enumeration
  order.  Kept for fidelity experiments; it can reject a strictly
  better-scoring window.

Proximity is |window_char_start / context_len - original_rel_pos|: relative
positions, because translated contexts differ in length from the originals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

from .providers import EmbeddingVector, cosine_similarity
from .text_primitives import WordSequence, lcs_similarity, split_words

SCORE_TIE_EPS = 1e-9

UpdateRule = Literal["lexicographic", "paper_literal"]
EmbedFn = Callable[[str], EmbeddingVector]


class EmptyContext(ValueError):
    pass


class NoFeasibleWindow(ValueError):
    """Answer has more words than the context; no window can hold it."""


@dataclass(frozen=True)
class SimilarityWeights:
    """Convex weights of the combined score: w1 cosine, w2 LCS."""

    w1: float = 2 / 3
    w2: float = 1 / 3

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.w1 + self.w2 - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {self.w1 + self.w2}")


@dataclass(frozen=True)
class AlignmentQuery:
    translated_context: str
    translated_answer: str
    original_answer_rel_pos: float
    max_stride: int = 3

    def __post_init__(self):
        if not self.translated_answer:
            raise ValueError("translated_answer must be non-empty")
        if not 0.0 <= self.original_answer_rel_pos <= 1.0:
            raise ValueError("original_answer_rel_pos must be in [0,1]")
        if self.max_stride < 0:
            raise ValueError("max_stride must be >= 0")


class Window(NamedTuple):
    index: int
    stride: int
    text: str
    char_start: int


@dataclass(frozen=True)
class AlignmentCandidate:
    window_text: str
    char_start: int
    score: float
    proximity: float
    stride: int


@dataclass(frozen=True)
class AlignmentResult:
    answer_text: str
    answer_start: int
    score: float
    proximity: float
    candidates_examined: int
    stride: int


def enumerate_windows(
    ctx: WordSequence, answer_word_len: int, max_stride: int
) -> list[Window]:
    """All word windows of answer_word_len + 0..max_stride words.

    Start indices run over every feasible position; windows that would
    overrun the context are omitted.  Window text is the exact source
    substring from the first word's offset to the last word's end.
    """
    if len(ctx.words) == 0:
        raise EmptyContext("context has no words")
    if answer_word_len < 1:
        raise ValueError("answer_word_len must be >= 1")
    if max_stride < 0:
        raise ValueError("max_stride must be >= 0")
    n = len(ctx.words)
    windows = []
    for i in range(n - answer_word_len + 1):
        for s in range(max_stride + 1):
            last = i + answer_word_len + s - 1
            if last >= n:
                break
            start = ctx.words[i].char_start
            end = ctx.words[last].char_start + len(ctx.words[last].text)
            windows.append(Window(i, s, ctx.source[start:end], start))
    return windows


def _clamped_cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    return min(1.0, max(0.0, cosine_similarity(u, v)))


def _combined_score(
    window_text: str,
    answer_text: str,
    answer_emb: EmbeddingVector,
    weights: SimilarityWeights,
    embed: EmbedFn,
) -> float:
    cos = _clamped_cosine(answer_emb, embed(window_text))
    return weights.w1 * cos + weights.w2 * lcs_similarity(window_text, answer_text)


def score_window(
    window_text: str, answer_text: str, weights: SimilarityWeights, embed: EmbedFn
) -> float:
    """Combined score of one window against the answer, in [0,1]."""
    if not window_text or not answer_text:
        raise ValueError("window_text and answer_text must be non-empty")
    return _combined_score(window_text, answer_text, embed(answer_text), weights, embed)


def proximity(original_rel_pos: float, window_char_start: int, context_char_len: int) -> float:
    """Distance between relative character positions, in [0,1] for in-range input."""
    if context_char_len < 1:
        raise ValueError("context_char_len must be >= 1")
    return abs(window_char_start / context_char_len - original_rel_pos)


def _select_lexicographic(candidates: list[AlignmentCandidate]) -> AlignmentCandidate:
    best_score = max(c.score for c in candidates)
    eligible = [c for c in candidates if c.score >= best_score - SCORE_TIE_EPS]
    return min(eligible, key=lambda c: (c.proximity, c.char_start))


def _select_paper_literal(candidates: list[AlignmentCandidate]) -> AlignmentCandidate:
    s_max = 0.0
    p_b = math.inf
    best = None
    for c in candidates:
        if c.score > s_max:
            if c.proximity < p_b:
                s_max = c.score
                p_b = c.proximity
                best = c
    if best is None:
        # Every window scored exactly 0, so the incumbent was never replaced;
        # fall back to the deterministic proximity/char_start order.
        best = min(candidates, key=lambda c: (c.proximity, c.char_start))
    return best


def align_answer(
    q: AlignmentQuery,
    weights: SimilarityWeights,
    embed: EmbedFn,
    update_rule: UpdateRule = "lexicographic",
) -> AlignmentResult:
    """Locate the translated answer inside the translated context.

    Scores every window from enumerate_windows and applies the update rule.
    The returned answer_start is a character offset that re-validates
    against translated_context.
    """
    ctx_words = split_words(q.translated_context)
    if len(ctx_words) == 0:
        raise EmptyContext("translated context has no words")
    answer_words = split_words(q.translated_answer)
    if len(answer_words) == 0 or len(answer_words) > len(ctx_words):
        raise NoFeasibleWindow(
            f"answer has {len(answer_words)} words, context has {len(ctx_words)}"
        )
    windows = enumerate_windows(ctx_words, len(answer_words), q.max_stride)
    answer_emb = embed(q.translated_answer)
    ctx_len = len(q.translated_context)
    candidates = [
        AlignmentCandidate(
            window_text=w.text,
            char_start=w.char_start,
            score=_combined_score(w.text, q.translated_answer, answer_emb, weights, embed),
            proximity=proximity(q.original_answer_rel_pos, w.char_start, ctx_len),
            stride=w.stride,
        )
        for w in windows
    ]
    if update_rule == "paper_literal":
        best = _select_paper_literal(candidates)
    elif update_rule == "lexicographic":
        best = _select_lexicographic(candidates)
    else:
        raise ValueError(f"unknown update rule {update_rule!r}")
    return AlignmentResult(
        answer_text=best.window_text,
        answer_start=best.char_start,
        score=best.score,
        proximity=best.proximity,
        candidates_examined=len(candidates),
        stride=best.stride,
    )

"""Unicode text utilities: normalization, offset-preserving word splits, LCS.

All offsets and lengths are counted in Unicode code points (Python string
indices), never in bytes: Ethiopic script is multi-byte in UTF-8 and every
module in this package shares the code-point convention.

LCS granularity is character-level over normalized text.  Word splitting
exists only to enumerate candidate windows, not to feed the LCS.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

_WORD_RE = re.compile(r"\S+")
_WS_RUN_RE = re.compile(r"\s+")


class IndexOutOfRange(IndexError):
    """Word index outside the bounds of a WordSequence."""


@dataclass(frozen=True)
class Word:
    text: str
    char_start: int


@dataclass(frozen=True)
class WordSequence:
    """Words of a source string, each carrying its code-point offset."""

    words: tuple[Word, ...]
    source: str

    @property
    def source_len(self) -> int:
        return len(self.source)

    def __len__(self) -> int:
        return len(self.words)


def normalize_text(s: str) -> str:
    """Canonical-compose, collapse whitespace runs, trim, and lowercase.

    Lowercasing only affects cased scripts (Latin, mostly); Ethiopic has no
    case and passes through unchanged.
    """
    s = unicodedata.normalize("NFC", s)
    s = _WS_RUN_RE.sub(" ", s).strip()
    return s.lower()


def split_words(s: str) -> WordSequence:
    """Split on Unicode whitespace, keeping each word's offset into ``s``.

    Offsets index the original, un-normalized string so that windows can be
    cut out of it verbatim.
    """
    words = tuple(Word(m.group(), m.start()) for m in _WORD_RE.finditer(s))
    return WordSequence(words, s)


def word_char_start(ws: WordSequence, i: int) -> int:
    if not 0 <= i < len(ws.words):
        raise IndexOutOfRange(f"word index {i} out of range for {len(ws.words)} words")
    return ws.words[i].char_start


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence of two strings.

    Classic DP over code points, O(|a|*|b|) time but only two rows of
    memory: contexts can exceed 2,000 characters and the aligner calls this
    in an inner loop.  Operates on the strings exactly as given; callers
    wanting normalization apply it first (``lcs_similarity`` does).
    """
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    cur = [0] * (len(b) + 1)
    for ca in a:
        for j, cb in enumerate(b, 1):
            if ca == cb:
                cur[j] = prev[j - 1] + 1
            elif cur[j - 1] >= prev[j]:
                cur[j] = cur[j - 1]
            else:
                cur[j] = prev[j]
        prev, cur = cur, prev
    return prev[-1]


def lcs_similarity(a: str, b: str) -> float:
    """LCS length of the normalized inputs over the longer normalized length.

    1.0 when both normalize to empty (vacuous identity, keeps the combined
    aligner score total), 0.0 when exactly one does.
    """
    a = normalize_text(a)
    b = normalize_text(b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return lcs_length(a, b) / max(len(a), len(b))

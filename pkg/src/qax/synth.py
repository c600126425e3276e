"""Deterministic synthetic SQuAD-shaped corpora.

Used by the test suite and the offline demo scripts: the generated contexts
are plain word sequences with answers planted at word boundaries, so the
identity translator plus the offline embedder can recover every answer
exactly.  Everything is seeded; the same arguments always produce the same
dataset.
"""

from __future__ import annotations

import random

from .squad_format import QA, Answer, Article, Dataset, Paragraph

_FILLER = [
    "stone", "river", "meadow", "lantern", "harbor", "copper", "willow",
    "ember", "falcon", "orchard", "granite", "sparrow", "timber", "anchor",
    "juniper", "marble", "thicket", "breeze", "cobble", "saffron", "heron",
    "bramble", "quarry", "drift", "hollow", "carline", "vesper", "tarn",
]
_ANSWER_WORDS = [
    "zephyr", "quartz", "onyx", "pixel", "vortex", "kelvin", "flux",
    "prism", "nimbus", "raster", "helix", "quasar", "sigil", "tundra",
    "lumen", "cipher", "morrow", "argon", "zenith", "fathom", "krypton",
    "delta", "rune", "axiom", "tesla", "vernal", "umbra", "jasper",
    "cassio", "ferrum", "galena", "halite", "iodine", "jarosite", "kyanite",
]


def plant_answer(
    rng: random.Random, context_words: list[str], answer_words: list[str]
) -> tuple[str, int, list[str]]:
    """Splice answer_words into the word list at a random word boundary.

    Returns (answer_text, answer_start, new_words); the offset is valid for
    the new words joined by single spaces.
    """
    pos = rng.randrange(len(context_words) + 1)
    new_words = context_words[:pos] + answer_words + context_words[pos:]
    answer_start = sum(len(w) + 1 for w in new_words[:pos])
    return " ".join(answer_words), answer_start, new_words


def synthetic_dataset(
    n_articles: int = 2,
    paragraphs_per_article: int = 2,
    qas_per_paragraph: int = 5,
    unanswerable_ratio: float = 0.3,
    context_words: int = 30,
    seed: int = 0,
) -> Dataset:
    """An answer-recoverable corpus: every gold answer is a planted,
    word-aligned span of its context, with answer vocabulary disjoint from
    the filler and from other answers of the same paragraph (each planted
    span occurs exactly once)."""
    rng = random.Random(seed)
    articles = []
    qa_counter = 0
    for ai in range(n_articles):
        paragraphs = []
        for pi in range(paragraphs_per_article):
            words = [rng.choice(_FILLER) for _ in range(context_words)]
            pool = rng.sample(_ANSWER_WORDS, len(_ANSWER_WORDS))
            plan: list[list[str] | None] = []
            for _ in range(qas_per_paragraph):
                if rng.random() < unanswerable_ratio:
                    plan.append(None)
                else:
                    n = rng.randint(1, 3)
                    plan.append([pool.pop() for _ in range(n)])
            # Choose every insertion slot against the filler words first,
            # then splice in descending slot order: a later insertion can
            # never split an earlier planted span.
            slots = [
                (rng.randrange(len(words) + 1), answer_words)
                for answer_words in plan
                if answer_words is not None
            ]
            spans = [" ".join(answer_words) for _, answer_words in slots]
            for pos, answer_words in sorted(slots, key=lambda s: s[0], reverse=True):
                words = words[:pos] + answer_words + words[pos:]
            context = " ".join(words)
            final_qas = []
            span_iter = iter(spans)
            for answer_words in plan:
                qa_counter += 1
                qid = f"q{qa_counter:05d}"
                if answer_words is None:
                    final_qas.append(
                        QA(
                            id=qid,
                            question=f"which {rng.choice(_FILLER)} is absent {qa_counter}",
                            is_impossible=True,
                        )
                    )
                else:
                    text = next(span_iter)
                    final_qas.append(
                        QA(
                            id=qid,
                            question=f"where is {text} number {qa_counter}",
                            answers=(Answer(text, context.find(text)),),
                        )
                    )
            paragraphs.append(Paragraph(context=context, qas=tuple(final_qas)))
        articles.append(Article(title=f"article {ai}", paragraphs=tuple(paragraphs)))
    return Dataset(version="v2.0-synthetic", articles=tuple(articles))

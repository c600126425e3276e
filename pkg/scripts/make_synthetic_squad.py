#!/usr/bin/env python3
"""Generate a synthetic SQuAD-2.0-shaped corpus for offline experiments.

The official dev file has 35 articles, ~1.2k paragraphs and 11,873 questions;
the defaults here produce a stand-in of the same scale.
"""

import argparse
from pathlib import Path

from qax.squad_format import serialize_dataset
from qax.synth import synthetic_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", type=Path)
    parser.add_argument("--articles", type=int, default=35)
    parser.add_argument("--paragraphs", type=int, default=34, help="per article")
    parser.add_argument("--qas", type=int, default=10, help="per paragraph")
    parser.add_argument("--unanswerable-ratio", type=float, default=0.5)
    parser.add_argument("--context-words", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ds = synthetic_dataset(
        n_articles=args.articles,
        paragraphs_per_article=args.paragraphs,
        qas_per_paragraph=args.qas,
        unanswerable_ratio=args.unanswerable_ratio,
        context_words=args.context_words,
        seed=args.seed,
    )
    raw = serialize_dataset(ds)
    args.output.write_bytes(raw)
    n_q = sum(len(p.qas) for a in ds.articles for p in a.paragraphs)
    print(f"wrote {args.output} ({len(raw) / 1e6:.1f} MB, {n_q} questions)")


if __name__ == "__main__":
    main()

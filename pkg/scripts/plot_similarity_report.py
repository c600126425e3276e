#!/usr/bin/env python3
"""Render a pipeline report's similarity distribution as a bar chart.

Produces the 10-bin histogram of combined similarity scores (answerable
records only; unanswerables carry no score), the same view used to judge
translation alignment quality.
"""

import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("report", type=Path, help="a .report.json written by the pipeline")
    parser.add_argument("--out", type=Path, default=None, help="default: <report>.png")
    args = parser.parse_args()

    doc = json.loads(args.report.read_text(encoding="utf-8"))
    histogram = doc["histogram"]
    edges = [k / 10 for k in range(11)]
    centers = [(edges[i] + edges[i + 1]) / 2 for i in range(10)]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(centers, histogram, width=0.09, edgecolor="black")
    ax.set_xticks(edges)
    ax.set_xlabel("similarity score")
    ax.set_ylabel("answer spans")
    ax.set_title("Similarity of re-aligned answers to their translated spans")
    fig.tight_layout()

    out = args.out or args.report.with_suffix(".png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Render the CSV outputs of `kite eval`, `kite sts` and `kite seqlen` as PNGs.

Optional dev helper; needs matplotlib.

    tools/plot_results.py RUN_DIR [RUN_DIR ...]
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def num(v):
    return float("nan") if v == "nan" else float(v)


def plot_curves(path, x, y, title):
    by_class = {}
    for r in rows(path):
        by_class.setdefault(r["class"], ([], []))
        by_class[r["class"]][0].append(num(r[x]))
        by_class[r["class"]][1].append(num(r[y]))
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, (xs, ys) in by_class.items():
        micro = label in ("-1", "micro")
        ax.plot(xs, ys, color="black" if micro else None, lw=2 if micro else 0.8, alpha=1 if micro else 0.5,
                label="micro" if micro else None)
    ax.set(xlabel=x, ylabel=y, title=title, xlim=(0, 1), ylim=(0, 1.02))
    ax.legend(loc="lower right")
    return fig


def plot_sts(path):
    data = rows(path)
    frac = [num(r["train_fraction"]) for r in data]
    fig, ax = plt.subplots(figsize=(6, 4))
    for col, name in (("accuracy_val", "validation"), ("accuracy_u1", "U1"), ("accuracy_u2", "U2")):
        ax.plot(frac, [num(r[col]) for r in data], marker="o", ms=3, label=name)
    ax.set(xlabel="training set fraction", ylabel="accuracy", title="Shrinking training set")
    ax.invert_xaxis()
    ax.legend()
    return fig


def plot_seqlen(path):
    data = rows(path)
    mids = [(num(r["bin_start"]) + num(r["bin_end"])) / 2 for r in data]
    width = num(data[0]["bin_end"]) - num(data[0]["bin_start"]) if data else 1
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(mids, [num(r["mean_accuracy"]) for r in data], width=0.9 * width)
    for m, r in zip(mids, data):
        ax.annotate(r["count"], (m, num(r["mean_accuracy"])), ha="center", va="bottom", fontsize=7)
    ax.set(xlabel="token length", ylabel="mean accuracy", title="Accuracy by sequence length", ylim=(0, 1.08))
    return fig


def main(dirs):
    jobs = {
        "roc.csv": lambda p: plot_curves(p, "fpr", "tpr", "ROC"),
        "pr.csv": lambda p: plot_curves(p, "recall", "precision", "Precision-recall"),
        "sts.csv": plot_sts,
        "seqlen.csv": plot_seqlen,
    }
    for d in map(Path, dirs):
        for name, fn in jobs.items():
            src = d / name
            if src.exists():
                fig = fn(src)
                fig.tight_layout()
                fig.savefig(src.with_suffix(".png"), dpi=120)
                plt.close(fig)
                print(src.with_suffix(".png"))


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1:])

"""Figures for benchmark results, rendered next to the CSV they summarize.

The CSV stays the product of record; these charts are the at-a-glance view:
per (k, lb, time_limit) group, best sizes and wall times by dataset and
strategy, plus one accuracy chart when any row carries accuracy.
"""

from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_STRATEGY_COLORS = {"basic": "#4878a8", "learned": "#e49444", "none": "#85b6b2"}


def _dataset_label(path: str) -> str:
    base = os.path.basename(str(path))
    for ext in (".txt", ".el", ".edges", ".csv", ".gz"):
        if base.endswith(ext):
            base = base[: -len(ext)]
    return base


def _group_label(k, lb, tl) -> str:
    tl_s = "exhaustive" if tl is None else f"{tl:g}s limit"
    return f"k={k}, lb={lb}, {tl_s}"


def _group_slug(k, lb, tl) -> str:
    tl_s = "none" if tl is None else f"{tl:g}".replace(".", "p")
    return f"k{k}_lb{lb}_tl{tl_s}"


def _grouped_bars(ax, datasets, strategies, values, ylabel):
    width = 0.8 / max(len(strategies), 1)
    for si, strategy in enumerate(strategies):
        xs = [i + si * width for i in range(len(datasets))]
        ys = [values.get((d, strategy), 0.0) for d in datasets]
        ax.bar(
            xs,
            ys,
            width=width,
            label=strategy,
            color=_STRATEGY_COLORS.get(strategy, "#888888"),
        )
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(datasets))])
    ax.set_xticklabels([_dataset_label(d) for d in datasets], rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.legend()


def render_bench_figures(rows: list[dict], csv_path) -> list[str]:
    """Write PNG charts for the given (typed) bench rows into a sibling
    directory of csv_path named <stem>_figs. Returns the created paths."""
    stem, _ = os.path.splitext(os.path.abspath(str(csv_path)))
    fig_dir = f"{stem}_figs"
    os.makedirs(fig_dir, exist_ok=True)
    created: list[str] = []

    groups: dict = defaultdict(list)
    for row in rows:
        groups[(row["k"], row["lb"], row["time_limit"])].append(row)

    for (k, lb, tl), group in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] is None, kv[0][2] or 0.0)
    ):
        datasets = []
        strategies = []
        for row in group:
            if row["dataset"] not in datasets:
                datasets.append(row["dataset"])
            if row["strategy"] not in strategies:
                strategies.append(row["strategy"])
        sizes = {(r["dataset"], r["strategy"]): r["size"] for r in group}
        times = {(r["dataset"], r["strategy"]): r["wall_time_s"] for r in group}
        slug = _group_slug(k, lb, tl)

        fig, (ax_size, ax_time) = plt.subplots(1, 2, figsize=(11, 4.5))
        _grouped_bars(ax_size, datasets, strategies, sizes, "best size")
        ax_size.set_title(f"Best size — {_group_label(k, lb, tl)}")
        _grouped_bars(ax_time, datasets, strategies, times, "wall time (s)")
        positive = [t for t in times.values() if t > 0]
        if positive and max(positive) / min(positive) > 50:
            ax_time.set_yscale("log")
        ax_time.set_title(f"Wall time — {_group_label(k, lb, tl)}")
        fig.tight_layout()
        path = os.path.join(fig_dir, f"compare_{slug}.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        created.append(path)

    acc_rows = [r for r in rows if r.get("accuracy") is not None]
    if acc_rows:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        labels = [
            f"{_dataset_label(r['dataset'])}\nk={r['k']} lb={r['lb']}" for r in acc_rows
        ]
        ax.bar(
            range(len(acc_rows)),
            [r["accuracy"] for r in acc_rows],
            color=_STRATEGY_COLORS["learned"],
        )
        ax.set_xticks(range(len(acc_rows)))
        ax.set_xticklabels(labels, fontsize=8)
        ax.set_ylim(0.0, 1.05)
        ax.axhline(1.0, color="#999999", linewidth=0.8, linestyle="--")
        ax.set_ylabel("bound accuracy")
        ax.set_title("Learned-bound accuracy (exhaustive runs)")
        fig.tight_layout()
        path = os.path.join(fig_dir, "accuracy.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        created.append(path)

    return created

"""Figure rendering for training and evaluation artifacts.

Figures are written straight to files (headless Agg backend) next to the
delimited data they are drawn from, so a run directory is self-contained:
``metrics.csv`` + ``learning_curve.png``, ``report.json`` + ``report.png``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .bench import EvalReport  # noqa: E402


def read_metrics_csv(path: str | Path) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            for k, v in row.items():
                cols.setdefault(k, []).append(float(v))
    return cols


def plot_learning_curve(metrics_csv: str | Path, out_png: str | Path) -> Path:
    """Episode length over training, raw and 100-episode moving average."""
    cols = read_metrics_csv(metrics_csv)
    episodes = cols["episode"]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 7), sharex=True)

    ax1.plot(episodes, cols["length"], lw=0.3, alpha=0.35, color="tab:gray",
             label="episode length")
    ax1.plot(episodes, cols["avg100_length"], lw=1.5, color="tab:blue",
             label="100-episode moving average")
    ax1.set_yscale("log")
    ax1.set_ylabel("actions per episode")
    ax1.legend(loc="upper right")
    ax1.grid(True, which="both", alpha=0.25)

    ax2.plot(episodes, cols["avg100_reward"], lw=1.5, color="tab:green")
    ax2.set_ylim(-0.05, 1.05)
    ax2.set_xlabel("episode")
    ax2.set_ylabel("success rate (100-ep avg)")
    ax2.grid(True, alpha=0.25)

    fig.suptitle("Training progress")
    fig.tight_layout()
    out = Path(out_png)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_eval_report(report: EvalReport, out_png: str | Path) -> Path:
    """Mean episode length per weakness row, annotated with success rate."""
    table = report.table_rows()
    rows = table if len(table) == 12 else [(s.vuln_id, s) for s in report.rows]
    labels = [label for label, _s in rows]
    means = [s.mean_length for _l, s in rows]
    succ = [s.success_rate for _l, s in rows]

    fig, ax = plt.subplots(figsize=(9, 4.5))
    bars = ax.bar(range(len(rows)), means, color="tab:blue", alpha=0.85)
    for b, rate in zip(bars, succ):
        ax.annotate(f"{rate:.0%}", (b.get_x() + b.get_width() / 2, b.get_height()),
                    ha="center", va="bottom", fontsize=8)
    if len(table) == 12:
        ax.axhline(report.table_avg(), color="tab:red", lw=1.2, ls="--",
                   label=f"average {report.table_avg():.1f}")
        ax.legend(loc="upper right")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels)
    ax.set_xlabel("weakness" if report.mode is None else "mode")
    ax.set_ylabel("mean actions to escalate")
    ax.set_title(f"Evaluation: {report.policy}")
    ax.grid(True, axis="y", alpha=0.25)
    fig.tight_layout()
    out = Path(out_png)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out

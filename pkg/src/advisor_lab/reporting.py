"""Delimited outputs, run manifests, and the figures rendered next to them.

CSV is the interchange contract; figures are a convenience rendering of the
same rows and never feed back into any computation.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

STATS_HEADER = [
    "strategy",
    "skill",
    "gate",
    "budget_target",
    "frequency",
    "mean_return",
    "std_err",
    "episodes",
    "seed",
]

CONCEPTS_HEADER = [
    "concept",
    "category",
    "freq_intervention",
    "freq_non_intervention",
    "delta_abs",
    "delta_signed",
]


def write_stats_csv(stats, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATS_HEADER)
        for r in stats:
            w.writerow(
                [
                    r.strategy,
                    r.skill,
                    r.gate,
                    "" if r.budget_target is None else repr(r.budget_target),
                    repr(r.frequency),
                    repr(r.mean_return),
                    repr(r.std_err),
                    r.episodes,
                    r.seed,
                ]
            )


def write_concepts_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONCEPTS_HEADER)
        for r in report.rows:
            w.writerow(
                [
                    r.concept,
                    r.category,
                    repr(r.freq_intervention),
                    repr(r.freq_non_intervention),
                    repr(r.delta_abs),
                    repr(r.delta_signed),
                ]
            )


def write_manifest(manifest: dict, path):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

_STRAT_STYLE = {
    "human": dict(color="#777777", marker="o"),
    "expert": dict(color="#d62728", marker="s"),
    "valuemax": dict(color="#1f77b4", marker="^"),
}


def render_sweep_figure(stats, path, title="Return vs intervention frequency"):
    """Frequency / mean-return curves per strategy with standard-error bars."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by = {}
    for r in stats:
        by.setdefault(r.strategy, []).append(r)
    for name, rows in by.items():
        rows.sort(key=lambda r: r.frequency)
        ax.errorbar(
            [r.frequency for r in rows],
            [r.mean_return for r in rows],
            yerr=[r.std_err for r in rows],
            label=name,
            capsize=3,
            **_STRAT_STYLE.get(name, {}),
        )
    ax.set_xlabel("intervention frequency")
    ax.set_ylabel("mean return")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_single_figure(stats, path, title="Single-intervention strategies by skill"):
    """Mean return per strategy across the skill ladder."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by = {}
    for r in stats:
        by.setdefault(r.strategy, []).append(r)
    for name, rows in by.items():
        rows.sort(key=lambda r: r.skill)
        ax.errorbar(
            [r.skill for r in rows],
            [r.mean_return for r in rows],
            yerr=[r.std_err for r in rows],
            label=name,
            capsize=3,
            **_STRAT_STYLE.get(name, {}),
        )
    ax.set_xlabel("skill preset")
    ax.set_ylabel("mean return")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_concepts_figure(report, path, top_k=10, title="Concept shifts at intervention states"):
    rows = report.top(top_k)
    fig, ax = plt.subplots(figsize=(6, 0.45 * max(len(rows), 4) + 1))
    labels = [f"{r.concept}-{r.category}" for r in rows][::-1]
    vals = [r.delta_signed for r in rows][::-1]
    ax.barh(labels, vals, color=["#1f77b4" if v >= 0 else "#d62728" for v in vals])
    ax.set_xlabel("frequency difference (intervention - non-intervention)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

"""Figure rendering for benchmark summaries.

Renders the two standard curves (average regret and average reward versus
time, mean across seeds with a +/- one-std band) to PNG files next to the
CSV output.  The CSVs remain the data contract; these figures are a
convenience view of the same aggregates.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import Summary

__all__ = ["render_summary_figures"]

_LABELS = {
    "toof": "TOOF",
    "greedy": "Greedy",
    "round_robin": "Round-Robin",
    "optimal": "Optimal",
}


def _plot_metric(summary: Summary, mean_attr: str, std_attr: str, ylabel: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    slots = range(1, summary.horizon + 1)
    for alg, cur in summary.curves.items():
        mean = getattr(cur, mean_attr)
        std = getattr(cur, std_attr)
        line, = ax.plot(slots, mean, label=_LABELS.get(alg, alg))
        if summary.num_seeds > 1:
            ax.fill_between(
                slots, mean - std, mean + std, alpha=0.15, color=line.get_color(), linewidth=0
            )
    ax.set_xlabel("time slot")
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_summary_figures(summary: Summary, out_dir) -> list[Path]:
    """Write avg_regret.png and avg_reward.png under out_dir; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    regret_path = out_dir / "avg_regret.png"
    reward_path = out_dir / "avg_reward.png"
    _plot_metric(summary, "mean_avg_regret", "std_avg_regret", "average regret", regret_path)
    _plot_metric(summary, "mean_avg_reward", "std_avg_reward", "average reward", reward_path)
    return [regret_path, reward_path]

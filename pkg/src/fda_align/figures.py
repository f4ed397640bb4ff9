"""Render run traces and period reports to image files (headless backend)."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .runner import TraceEntry


def render_trace_figure(trace: Sequence[TraceEntry], path) -> None:
    """Loss trajectory over evaluations: raw losses, per-period running best,
    and a marker at every change event."""
    fig, ax = plt.subplots(figsize=(10.0, 4.5))
    idx = [e.eval_index for e in trace]
    ax.plot(
        idx,
        [e.current_loss for e in trace],
        color="tab:blue",
        linewidth=0.6,
        alpha=0.55,
        label="evaluation loss",
    )
    # The running best restarts every period; draw one dashed segment per period so
    # the reset is a visual break instead of a misleading connecting line.
    label = "best this period"
    start = 0
    for i in range(1, len(trace) + 1):
        if i == len(trace) or trace[i].period_index != trace[start].period_index:
            ax.plot(
                idx[start:i],
                [e.best_loss_period for e in trace[start:i]],
                color="tab:red",
                linestyle="--",
                linewidth=1.4,
                label=label,
            )
            label = None
            start = i
    for e in trace:
        if e.is_change_event:
            ax.axvline(e.eval_index, color="tab:red", linestyle=":", linewidth=0.9, alpha=0.8)
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.set_xlabel("evaluation")
    ax.set_ylabel("trimmed L1 loss")
    ax.set_title("Dynamic alignment trace")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report_figure(report: dict, path) -> None:
    """Per-period reprojection error bars with loss annotations."""
    periods = report["periods"]
    indices = [p["period_index"] for p in periods]
    errors = [p["reprojection_error_px"] for p in periods]
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.bar(indices, errors, color="tab:blue", alpha=0.8)
    ax.set_xlabel("period")
    ax.set_ylabel("mean reprojection error (px)")
    ax.set_title(
        f"Alignment quality per period "
        f"(changes detected: {report['detected_changes']}, true moves: {report['true_moves']})"
    )
    ax.set_xticks(indices)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

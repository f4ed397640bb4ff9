"""Dynamic re-optimization over a stream of frames.

The runner keeps an incumbent homography fitted to the current period. Each
new frame first scores the incumbent; if that loss jumps past the change
detector's threshold the period is closed and a fresh search is launched for
the new period (optionally warm-started from the old incumbent). Every
objective evaluation, including the per-frame incumbent checks, lands in one
flat trace so the whole run can be replayed or plotted from a single file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigInvalid, EmptyMatchSet, EmptyTrace
from .homography import DOF_COUNT, Homography, from_vector, identity, to_vector
from .loss import MatchSet, TrimmedLossConfig, frame_objective, trimmed_loss
from .optimizer import FdaConfig, SearchSpace, explore

TRACE_HEADER = (
    "eval_index",
    "frame_id",
    "period_index",
    "current_loss",
    "best_loss_period",
    "is_change_event",
)

WARM = "warm"
FRESH = "fresh"


def default_dof_bounds() -> SearchSpace:
    """Search box for the 8 DoF: diagonal near 1, modest shear, +-100 px
    translation, and a tight band for the projective row."""
    return SearchSpace(
        lower=(0.5, -0.5, -100.0, -0.5, 0.5, -100.0, -0.005, -0.005),
        upper=(1.5, 0.5, 100.0, 0.5, 1.5, 100.0, 0.005, 0.005),
    )


@dataclass(frozen=True)
class ChangeDetectorConfig:
    """A change fires when the incumbent's loss on a new frame exceeds
    ``max(absolute_floor, relative_jump * best loss seen this period)``."""

    relative_jump: float = 3.0
    absolute_floor: float = 1.0

    def __post_init__(self):
        if not self.relative_jump > 1.0:
            raise ConfigInvalid(f"relative_jump must be > 1, got {self.relative_jump!r}")
        if not self.absolute_floor >= 0.0:
            raise ConfigInvalid(f"absolute_floor must be >= 0, got {self.absolute_floor!r}")


@dataclass(frozen=True)
class RunnerConfig:
    dof_bounds: SearchSpace = field(default_factory=default_dof_bounds)
    loss: TrimmedLossConfig = field(default_factory=TrimmedLossConfig)
    optimizer: FdaConfig = field(default_factory=lambda: FdaConfig(eval_budget=20000))
    detector: ChangeDetectorConfig = field(default_factory=ChangeDetectorConfig)
    warm_start_policy: str = WARM

    def __post_init__(self):
        if self.warm_start_policy not in (WARM, FRESH):
            raise ConfigInvalid(
                f"warm_start_policy must be '{WARM}' or '{FRESH}', got {self.warm_start_policy!r}"
            )
        if self.dof_bounds.dim != DOF_COUNT:
            raise ConfigInvalid(
                f"dof_bounds must have {DOF_COUNT} dimensions, got {self.dof_bounds.dim}"
            )
        if not self.dof_bounds.contains(to_vector(identity())):
            raise ConfigInvalid("dof_bounds must contain the identity homography")


class TraceEntry(NamedTuple):
    """One objective evaluation in the flat run trace."""

    eval_index: int
    frame_id: int
    period_index: int
    current_loss: float
    best_loss_period: float
    is_change_event: bool


@dataclass
class PeriodRecord:
    """Summary of one stability period (frames sharing one fitted homography)."""

    period_index: int
    start_frame: int
    best_h: Homography
    best_loss: float
    evaluations: int


def detect_change(prev_best_loss: float, incumbent_loss: float, cfg: ChangeDetectorConfig) -> bool:
    """True when the incumbent's loss jumps past the detector threshold."""
    return incumbent_loss > max(cfg.absolute_floor, cfg.relative_jump * prev_best_loss)


def run_dynamic(
    stream: Sequence[MatchSet],
    cfg: RunnerConfig,
    workers: int = 0,
) -> tuple[list[TraceEntry], list[PeriodRecord]]:
    """Align every frame of a stream, re-optimizing after each detected change.

    Returns the flat evaluation trace and one record per stability period.
    Fully deterministic for a given stream and config, whatever ``workers``.
    """
    stream = list(stream)
    if not stream:
        raise EmptyMatchSet("frame stream is empty")
    for prev, nxt in zip(stream, stream[1:]):
        if nxt.frame_id <= prev.frame_id:
            raise ValueError(
                f"frame ids must strictly increase, got {nxt.frame_id} after {prev.frame_id}"
            )

    trace: list[TraceEntry] = []
    periods: list[PeriodRecord] = []
    period_index = -1
    start_frame = 0
    period_evals = 0
    running_best = math.inf
    best_vec: np.ndarray | None = None
    best_h: Homography | None = None
    last_frame_loss = math.inf

    def close_period():
        periods.append(
            PeriodRecord(period_index, start_frame, best_h, last_frame_loss, period_evals)
        )

    for frame in stream:
        if period_index >= 0:
            current = trimmed_loss(best_h, frame, cfg.loss)
            if not detect_change(running_best, current, cfg.detector):
                # Still the same scene: just book the incumbent check.
                running_best = min(running_best, current)
                trace.append(
                    TraceEntry(len(trace), frame.frame_id, period_index, current, running_best, False)
                )
                period_evals += 1
                last_frame_loss = current
                continue
            close_period()
            period_index += 1
            running_best = current
            trace.append(
                TraceEntry(len(trace), frame.frame_id, period_index, current, current, True)
            )
            period_evals = 1
        else:
            period_index = 0
            period_evals = 0
            running_best = math.inf

        start_frame = frame.frame_id
        warm = best_vec if (cfg.warm_start_policy == WARM and best_vec is not None) else None
        result = explore(
            frame_objective(frame, cfg.loss),
            cfg.dof_bounds,
            cfg.optimizer,
            warm_start=warm,
            workers=workers,
        )
        # The very first evaluation of the run opens period 0, so it carries
        # the change flag just like the detector firings that open later ones.
        first_flag = not trace
        for i, rec in enumerate(result.trace):
            running_best = min(running_best, rec.value)
            trace.append(
                TraceEntry(
                    len(trace),
                    frame.frame_id,
                    period_index,
                    rec.value,
                    running_best,
                    first_flag and i == 0,
                )
            )
        period_evals += result.evaluations_used
        best_vec = result.best_point
        best_h = from_vector(result.best_point)
        last_frame_loss = result.best_value
    close_period()
    return trace, periods


@dataclass
class PeriodSummary:
    """Recovery statistics for one period, derived purely from the trace.

    ``peak_loss`` is the loss that opened the period (the detected jump, or
    the very first evaluation); ``evals_to_recover`` counts trace entries from
    the period start until the running best first comes within 5% of the
    period's final best.
    """

    period_index: int
    final_best: float
    peak_loss: float
    evals_to_recover: int


def trace_summary(trace: Sequence[TraceEntry]) -> list[PeriodSummary]:
    """Per-period convergence summary of a run trace."""
    if not trace:
        raise EmptyTrace("cannot summarize an empty trace")
    summaries: list[PeriodSummary] = []
    by_period: dict[int, list[TraceEntry]] = {}
    for entry in trace:
        by_period.setdefault(entry.period_index, []).append(entry)
    for period_index in sorted(by_period):
        entries = by_period[period_index]
        final_best = entries[-1].best_loss_period
        threshold = final_best * 1.05
        evals = next(
            i + 1 for i, e in enumerate(entries) if e.best_loss_period <= threshold
        )
        summaries.append(
            PeriodSummary(period_index, final_best, entries[0].current_loss, evals)
        )
    return summaries


def write_trace_csv(path, trace: Sequence[TraceEntry]) -> None:
    """Write the trace with floats in ``repr`` form so a read back is bitwise exact."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for e in trace:
            writer.writerow(
                [
                    e.eval_index,
                    e.frame_id,
                    e.period_index,
                    repr(float(e.current_loss)),
                    repr(float(e.best_loss_period)),
                    int(e.is_change_event),
                ]
            )


def read_trace_csv(path) -> list[TraceEntry]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header: {header}")
        return [
            TraceEntry(
                int(row[0]), int(row[1]), int(row[2]),
                float(row[3]), float(row[4]), bool(int(row[5])),
            )
            for row in reader
        ]


def write_periods_json(path, periods: Sequence[PeriodRecord]) -> None:
    """Persist period records (homographies as row-major 9-entry matrices)."""
    payload = [
        {
            "period_index": p.period_index,
            "start_frame": p.start_frame,
            "homography": [float(v) for v in p.best_h.dof] + [1.0],
            "best_loss": float(p.best_loss),
            "evaluations": p.evaluations,
        }
        for p in periods
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_periods_json(path) -> list[PeriodRecord]:
    with open(path) as fh:
        payload = json.load(fh)
    return [
        PeriodRecord(
            entry["period_index"],
            entry["start_frame"],
            from_vector(entry["homography"][:8]),
            float(entry["best_loss"]),
            entry["evaluations"],
        )
        for entry in payload
    ]

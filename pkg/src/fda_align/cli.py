"""Command-line entry point: generate scenarios, align streams, run benchmarks.

Exit codes: 0 success, 2 configuration error, 3 I/O failure, 4 malformed
matches CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import AppConfig, load_app_config
from .errors import ConfigInvalid, FdaAlignError, MatchesFormatError
from .figures import render_report_figure, render_trace_figure
from .loss import MatchSet, load_matches_csv, write_matches_csv
from .runner import (
    PeriodRecord,
    run_dynamic,
    write_periods_json,
    write_trace_csv,
)
from .scenes import (
    GroundTruth,
    generate,
    grid_points,
    reprojection_error,
    write_ground_truth_json,
)


def _workers_from_env() -> int:
    raw = os.environ.get("FDA_ALIGN_THREADS", "").strip()
    if not raw:
        return 0
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigInvalid(f"FDA_ALIGN_THREADS must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ConfigInvalid(f"FDA_ALIGN_THREADS must be >= 0, got {workers}")
    return workers


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _print_periods(args, periods: list[PeriodRecord]) -> None:
    for p in periods:
        _say(
            args,
            f"period {p.period_index}: start_frame={p.start_frame} "
            f"best_loss={p.best_loss:.6g} evaluations={p.evaluations}",
        )


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_synth(args) -> int:
    cfg = load_app_config(args.config, seed_override=args.seed)
    out = _outdir(args)
    frames, truth = generate(cfg.scenario)
    write_matches_csv(os.path.join(out, "matches.csv"), frames)
    write_ground_truth_json(os.path.join(out, "ground_truth.json"), truth)
    moves = len(cfg.scenario.resolved_move_frames())
    _say(
        args,
        f"generated {len(frames)} frames x {cfg.scenario.n_keypoints} keypoints "
        f"({moves} camera moves) -> {out}",
    )
    return 0


def _align_stream(args, frames: list[MatchSet], cfg: AppConfig, out: str):
    trace, periods = run_dynamic(frames, cfg.runner, workers=_workers_from_env())
    write_trace_csv(os.path.join(out, "trace.csv"), trace)
    write_periods_json(os.path.join(out, "periods.json"), periods)
    render_trace_figure(trace, os.path.join(out, "trace.png"))
    return trace, periods


def cmd_align(args) -> int:
    cfg = load_app_config(args.config, seed_override=args.seed)
    out = _outdir(args)
    frames = load_matches_csv(args.matches)
    _, periods = _align_stream(args, frames, cfg, out)
    _print_periods(args, periods)
    _say(args, f"wrote trace.csv, periods.json, trace.png -> {out}")
    return 0


def _reprojection_report(
    cfg: AppConfig, periods: list[PeriodRecord], truth: GroundTruth
) -> dict:
    points = grid_points(cfg.scenario.image_size)
    rows = []
    for p in periods:
        err = reprojection_error(p.best_h, truth.truths[p.start_frame], points)
        rows.append(
            {
                "period_index": p.period_index,
                "start_frame": p.start_frame,
                "best_loss": float(p.best_loss),
                "evaluations": p.evaluations,
                "reprojection_error_px": err,
            }
        )
    mean_err = sum(r["reprojection_error_px"] for r in rows) / len(rows)
    return {
        "periods": rows,
        "mean_reprojection_error_px": mean_err,
        "detected_changes": len(periods) - 1,
        "true_moves": len(cfg.scenario.resolved_move_frames()),
        "warm_start_policy": cfg.runner.warm_start_policy,
    }


def cmd_bench(args) -> int:
    cfg = load_app_config(args.config, seed_override=args.seed)
    out = _outdir(args)
    frames, truth = generate(cfg.scenario)
    write_matches_csv(os.path.join(out, "matches.csv"), frames)
    write_ground_truth_json(os.path.join(out, "ground_truth.json"), truth)
    _, periods = _align_stream(args, frames, cfg, out)
    report = _reprojection_report(cfg, periods, truth)
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    render_report_figure(report, os.path.join(out, "report.png"))
    _print_periods(args, periods)
    _say(
        args,
        f"detected {report['detected_changes']} changes "
        f"({report['true_moves']} true moves), "
        f"mean reprojection {report['mean_reprojection_error_px']:.3f} px -> {out}",
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fda-align",
        description="Dynamic homography alignment by fractal decomposition search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="JSON config file (defaults used when omitted)")
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario rng_seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_synth = sub.add_parser("synth", help="generate a synthetic scenario (matches.csv + ground_truth.json)")
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_align = sub.add_parser("align", help="align a matches CSV (trace.csv, periods.json, trace.png)")
    common(p_align)
    p_align.add_argument("--matches", required=True, help="input matches CSV")
    p_align.set_defaults(func=cmd_align)

    p_bench = sub.add_parser(
        "bench", help="generate a scenario, align it, and score against ground truth"
    )
    common(p_bench)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MatchesFormatError as exc:
        print(f"error: malformed matches CSV: {exc}", file=sys.stderr)
        return 4
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FdaAlignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

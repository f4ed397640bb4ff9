"""Percentile-trimmed L1 alignment loss over matched keypoint pairs.

Each matched pair contributes ``|dx| + |dy|`` between the transformed source
point and its target. Errors are sorted ascending, a nearest-rank percentile
threshold is taken, and every error less than or equal to the threshold is
summed. Summation always runs over the sorted array so the result does not
depend on pair order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigInvalid, EmptyErrorList, EmptyMatchSet, MatchesFormatError
from .homography import PROJECTION_EPS, Homography, Point2

MATCHES_HEADER = ("frame_id", "x1", "y1", "x2", "y2")


@dataclass(frozen=True)
class MatchedPair:
    """A putative correspondence: ``source`` in the reference view, ``target`` observed."""

    source: Point2
    target: Point2


@dataclass(frozen=True)
class MatchSet:
    """All matched pairs observed for one frame."""

    frame_id: int
    pairs: tuple[MatchedPair, ...]

    def __post_init__(self):
        if self.frame_id < 0:
            raise ValueError(f"frame_id must be >= 0, got {self.frame_id}")
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(source, target) coordinate arrays, each of shape (n, 2)."""
        src = np.array([(p.source.x, p.source.y) for p in self.pairs], dtype=float)
        tgt = np.array([(p.target.x, p.target.y) for p in self.pairs], dtype=float)
        return src, tgt


@dataclass(frozen=True)
class TrimmedLossConfig:
    """Knobs for the trimmed loss.

    ``percentile_i`` is the integer percentile (1..100) used for the trim
    threshold; ``degenerate_penalty`` replaces the error of any pair whose
    source point projects onto the line at infinity.
    """

    percentile_i: int = 80
    degenerate_penalty: float = 1e6

    def __post_init__(self):
        if not isinstance(self.percentile_i, int) or not 1 <= self.percentile_i <= 100:
            raise ConfigInvalid(
                f"percentile_i must be an integer in [1, 100], got {self.percentile_i!r}"
            )
        if not math.isfinite(self.degenerate_penalty) or self.degenerate_penalty <= 0:
            raise ConfigInvalid(
                f"degenerate_penalty must be positive and finite, got {self.degenerate_penalty!r}"
            )


def percentile_threshold(errors, i: int) -> float:
    """Nearest-rank percentile of a non-empty collection of error values.

    With ``n`` values sorted ascending, returns the one at 1-based rank
    ``ceil(i * n / 100)``. The rank is computed in integer arithmetic so no
    float rounding can shift it.
    """
    arr = np.asarray(errors, dtype=float).reshape(-1)
    n = arr.shape[0]
    if n == 0:
        raise EmptyErrorList("percentile of an empty error list is undefined")
    if not 1 <= i <= 100:
        raise ValueError(f"percentile must be in [1, 100], got {i}")
    rank = (i * n + 99) // 100
    return float(np.sort(arr)[rank - 1])


def _pair_errors(dof, sx, sy, tx, ty, penalty: float) -> np.ndarray:
    # Same elementwise formula as homography.apply; degenerate rows get the
    # penalty instead of raising so a single bad pair cannot abort a loss.
    w = dof[6] * sx + dof[7] * sy + 1.0
    ok = np.abs(w) > PROJECTION_EPS
    wsafe = np.where(ok, w, 1.0)
    px = (dof[0] * sx + dof[1] * sy + dof[2]) / wsafe
    py = (dof[3] * sx + dof[4] * sy + dof[5]) / wsafe
    err = np.abs(tx - px) + np.abs(ty - py)
    return np.where(ok, err, penalty)


def _trimmed_sum(errors: np.ndarray, percentile_i: int) -> float:
    ordered = np.sort(errors)
    n = ordered.shape[0]
    rank = (percentile_i * n + 99) // 100
    threshold = ordered[rank - 1]
    # Inclusive cut: ties at the threshold are kept, so the retained count can
    # exceed the rank but the retained set is unambiguous.
    retained = ordered[ordered <= threshold]
    return float(retained.sum())


def pair_error(h: Homography, pair: MatchedPair, cfg: TrimmedLossConfig = TrimmedLossConfig()) -> float:
    """L1 reprojection error of one pair; degenerate projection yields the penalty."""
    d = h.dof
    w = d[6] * pair.source.x + d[7] * pair.source.y + 1.0
    if abs(w) <= PROJECTION_EPS:
        return cfg.degenerate_penalty
    px = (d[0] * pair.source.x + d[1] * pair.source.y + d[2]) / w
    py = (d[3] * pair.source.x + d[4] * pair.source.y + d[5]) / w
    return abs(pair.target.x - px) + abs(pair.target.y - py)


def trimmed_loss(h: Homography, matches: MatchSet, cfg: TrimmedLossConfig = TrimmedLossConfig()) -> float:
    """Sum of all pair errors at or below the nearest-rank percentile threshold."""
    if len(matches) == 0:
        raise EmptyMatchSet(f"frame {matches.frame_id} has no matched pairs")
    src, tgt = matches.arrays
    errs = _pair_errors(
        h.dof, src[:, 0], src[:, 1], tgt[:, 0], tgt[:, 1], cfg.degenerate_penalty
    )
    return _trimmed_sum(errs, cfg.percentile_i)


def frame_objective(matches: MatchSet, cfg: TrimmedLossConfig) -> Callable[[np.ndarray], float]:
    """Bind one frame's pairs into an objective over raw 8-DoF vectors.

    The returned callable computes exactly ``trimmed_loss(from_vector(v), ...)``
    but skips per-call object construction; both paths share the same kernel.
    """
    if len(matches) == 0:
        raise EmptyMatchSet(f"frame {matches.frame_id} has no matched pairs")
    src, tgt = matches.arrays
    sx, sy = src[:, 0], src[:, 1]
    tx, ty = tgt[:, 0], tgt[:, 1]
    penalty = cfg.degenerate_penalty
    percentile_i = cfg.percentile_i

    def objective(v: np.ndarray) -> float:
        return _trimmed_sum(_pair_errors(v, sx, sy, tx, ty, penalty), percentile_i)

    return objective


def write_matches_csv(path, frames: Sequence[MatchSet]) -> None:
    """Write frames to CSV with header ``frame_id,x1,y1,x2,y2``.

    Floats are written with ``repr`` so a read back reproduces them bitwise.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MATCHES_HEADER)
        for frame in frames:
            for p in frame.pairs:
                writer.writerow(
                    [
                        frame.frame_id,
                        repr(float(p.source.x)),
                        repr(float(p.source.y)),
                        repr(float(p.target.x)),
                        repr(float(p.target.y)),
                    ]
                )


def load_matches_csv(path) -> list[MatchSet]:
    """Parse a matches CSV into per-frame :class:`MatchSet` objects.

    Rows for a frame must be contiguous and frame ids strictly increasing.
    Raises :class:`MatchesFormatError` carrying the first bad line number.
    """
    frames: list[MatchSet] = []
    current_id: int | None = None
    current_pairs: list[MatchedPair] = []

    def flush():
        if current_id is not None:
            frames.append(MatchSet(current_id, tuple(current_pairs)))

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        line_no = 0
        for row in reader:
            line_no += 1
            if line_no == 1:
                if tuple(cell.strip() for cell in row) != MATCHES_HEADER:
                    raise MatchesFormatError(
                        f"header must be {','.join(MATCHES_HEADER)}", line_no
                    )
                continue
            if len(row) != 5:
                raise MatchesFormatError(
                    f"expected 5 fields, got {len(row)}", line_no
                )
            try:
                fid = int(row[0])
            except ValueError:
                raise MatchesFormatError(
                    f"frame_id must be an integer, got {row[0]!r}", line_no
                ) from None
            if fid < 0:
                raise MatchesFormatError(f"frame_id must be >= 0, got {fid}", line_no)
            try:
                coords = [float(c) for c in row[1:]]
            except ValueError:
                raise MatchesFormatError(
                    f"coordinates must be numeric, got {row[1:]}", line_no
                ) from None
            if not all(math.isfinite(c) for c in coords):
                raise MatchesFormatError(
                    f"coordinates must be finite, got {row[1:]}", line_no
                )
            if current_id is None or fid != current_id:
                if current_id is not None and fid <= current_id:
                    raise MatchesFormatError(
                        f"frame_id must strictly increase, got {fid} after {current_id}",
                        line_no,
                    )
                flush()
                current_id = fid
                current_pairs = []
            current_pairs.append(
                MatchedPair(Point2(coords[0], coords[1]), Point2(coords[2], coords[3]))
            )
        flush()
    if not frames:
        raise MatchesFormatError("file contains no match rows", line_no + 1)
    return frames

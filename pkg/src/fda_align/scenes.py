"""Synthetic drifting-camera scenarios with known ground truth.

A scenario fixes a set of reference keypoints, then walks a ground-truth
homography through a sequence of camera moves (rotation about the image
center, translation, projective skew). Every frame observes all keypoints
through the current truth, perturbed by Gaussian noise, with a fraction
replaced by gross outliers drawn uniformly from a disk around the true
location. All randomness flows from one seeded generator, so a scenario is a
pure function of its config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid
from .homography import Homography, Point2, compose, from_vector, identity, transform_points
from .loss import MatchedPair, MatchSet


@dataclass(frozen=True)
class DriftMagnitude:
    """Upper bounds for randomly drawn camera-move components.

    Each drawn component has magnitude uniform in ``[bound / 2, bound]`` with
    a random sign, so a configured move can never be vanishingly small.
    """

    translation: float = 12.0
    rotation: float = 0.004
    skew: float = 1e-6

    def __post_init__(self):
        for name in ("translation", "rotation", "skew"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigInvalid(
                    f"drift_magnitude.{name} must be finite and >= 0, got {v!r}"
                )


@dataclass(frozen=True)
class CameraMove:
    """One explicit camera move: rotation (radians) about the image center,
    pixel translation, and projective skew entries."""

    rotation: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    skew_x: float = 0.0
    skew_y: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of a synthetic scenario.

    ``move_frames`` lists the frame indices at which the camera moves; when
    omitted, five moves are spaced evenly across the run. ``move_schedule``
    optionally pins the exact move applied at each move frame (same length as
    the resolved move frames); otherwise moves are drawn from ``drift_magnitude``.
    """

    rng_seed: int = 7
    image_size: tuple[int, int] = (1920, 1080)
    n_keypoints: int = 200
    n_frames: int = 30
    move_frames: tuple[int, ...] | None = None
    drift_magnitude: DriftMagnitude = field(default_factory=DriftMagnitude)
    noise_sigma: float = 0.5
    outlier_fraction: float = 0.1
    outlier_radius: float = 300.0
    move_schedule: tuple[CameraMove, ...] | None = None

    def __post_init__(self):
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ConfigInvalid(f"image_size must be positive, got {self.image_size}")
        if self.n_keypoints < 1:
            raise ConfigInvalid(f"n_keypoints must be >= 1, got {self.n_keypoints}")
        if self.n_frames < 1:
            raise ConfigInvalid(f"n_frames must be >= 1, got {self.n_frames}")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ConfigInvalid(
                f"outlier_fraction must be in [0, 1), got {self.outlier_fraction}"
            )
        if self.noise_sigma < 0:
            raise ConfigInvalid(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.outlier_radius <= 0:
            raise ConfigInvalid(f"outlier_radius must be > 0, got {self.outlier_radius}")
        if self.move_frames is not None:
            object.__setattr__(self, "move_frames", tuple(int(f) for f in self.move_frames))
            frames = self.move_frames
            if any(not 1 <= f < self.n_frames for f in frames):
                raise ConfigInvalid(
                    f"move_frames must lie in [1, {self.n_frames - 1}], got {list(frames)}"
                )
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise ConfigInvalid(
                    f"move_frames must be strictly increasing, got {list(frames)}"
                )
        if self.move_schedule is not None:
            object.__setattr__(self, "move_schedule", tuple(self.move_schedule))
            if len(self.move_schedule) != len(self.resolved_move_frames()):
                raise ConfigInvalid(
                    f"move_schedule has {len(self.move_schedule)} moves for "
                    f"{len(self.resolved_move_frames())} move frames"
                )

    def resolved_move_frames(self) -> tuple[int, ...]:
        if self.move_frames is not None:
            return self.move_frames
        if self.n_frames < 2:
            return ()
        # Five moves spread evenly, e.g. 30 frames -> 5, 10, 15, 20, 25.
        frames = sorted({max(1, (k * self.n_frames) // 6) for k in range(1, 6)})
        return tuple(f for f in frames if f < self.n_frames)


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame true homography and per-pair inlier flags."""

    truths: tuple[Homography, ...]
    inlier_flags: tuple[tuple[bool, ...], ...]


def move_homography(move: CameraMove, image_size: tuple[int, int]) -> Homography:
    """The homography for one camera move.

    Rotation is taken about the image center, then the translation is added;
    the skew entries land directly in the projective row.
    """
    w, h = image_size
    cx, cy = w / 2.0, h / 2.0
    c, s = math.cos(move.rotation), math.sin(move.rotation)
    return Homography(
        (
            c, -s, cx - (c * cx - s * cy) + move.tx,
            s, c, cy - (s * cx + c * cy) + move.ty,
            move.skew_x, move.skew_y,
        )
    )


def _draw_move(rng: np.random.Generator, drift: DriftMagnitude) -> CameraMove:
    def component(bound: float) -> float:
        magnitude = rng.uniform(bound / 2.0, bound)
        sign = 1.0 if rng.integers(0, 2) == 1 else -1.0
        return float(sign * magnitude)

    return CameraMove(
        rotation=component(drift.rotation),
        tx=component(drift.translation),
        ty=component(drift.translation),
        skew_x=component(drift.skew),
        skew_y=component(drift.skew),
    )


def generate(cfg: ScenarioConfig) -> tuple[list[MatchSet], GroundTruth]:
    """Generate the full frame stream and its ground truth.

    Deterministic: the same config always yields bitwise-identical frames.
    With ``noise_sigma == 0`` and ``outlier_fraction == 0`` every target
    equals the transformed source exactly, so the trimmed loss at the true
    homography is exactly zero.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    w, h = cfg.image_size
    n = cfg.n_keypoints
    base = rng.uniform([0.0, 0.0], [float(w), float(h)], size=(n, 2))
    move_frames = cfg.resolved_move_frames()
    move_set = set(move_frames)
    n_outliers = round(cfg.outlier_fraction * n)

    truth = identity()
    frames: list[MatchSet] = []
    truths: list[Homography] = []
    flags_per_frame: list[tuple[bool, ...]] = []
    move_idx = 0
    for f in range(cfg.n_frames):
        if f in move_set:
            if cfg.move_schedule is not None:
                move = cfg.move_schedule[move_idx]
            else:
                move = _draw_move(rng, cfg.drift_magnitude)
            truth = compose(first=truth, then=move_homography(move, cfg.image_size))
            move_idx += 1
        exact = transform_points(truth, base)
        targets = exact.copy()
        if cfg.noise_sigma > 0:
            targets += rng.normal(0.0, cfg.noise_sigma, size=(n, 2))
        flags = np.ones(n, dtype=bool)
        if n_outliers > 0:
            chosen = rng.choice(n, size=n_outliers, replace=False)
            angle = rng.uniform(0.0, 2.0 * math.pi, size=n_outliers)
            # sqrt of a uniform draw makes the displacement uniform over the disk
            radius = cfg.outlier_radius * np.sqrt(rng.random(n_outliers))
            targets[chosen, 0] = exact[chosen, 0] + radius * np.cos(angle)
            targets[chosen, 1] = exact[chosen, 1] + radius * np.sin(angle)
            flags[chosen] = False
        pairs = tuple(
            MatchedPair(
                Point2(float(base[k, 0]), float(base[k, 1])),
                Point2(float(targets[k, 0]), float(targets[k, 1])),
            )
            for k in range(n)
        )
        frames.append(MatchSet(f, pairs))
        truths.append(truth)
        flags_per_frame.append(tuple(bool(v) for v in flags))
    return frames, GroundTruth(tuple(truths), tuple(flags_per_frame))


def grid_points(image_size: tuple[int, int], nx: int = 10, ny: int = 10) -> np.ndarray:
    """An ``nx * ny`` evaluation grid spanning the image, as an (n, 2) array."""
    w, h = image_size
    xs = np.linspace(0.0, float(w), nx)
    ys = np.linspace(0.0, float(h), ny)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def reprojection_error(
    h: Homography, truth: Homography, points: np.ndarray
) -> float:
    """Mean L1 gap between ``h`` and the truth over sample points."""
    got = transform_points(h, points)
    want = transform_points(truth, points)
    diff = np.abs(got - want)
    return float(np.mean(diff[:, 0] + diff[:, 1]))


def write_ground_truth_json(path, truth: GroundTruth) -> None:
    """Persist ground truth as JSON (row-major 9-entry matrices, (3,3) = 1)."""
    payload = [
        {
            "frame_id": f,
            "homography": [float(v) for v in hom.dof] + [1.0],
            "inlier_flags": list(flags),
        }
        for f, (hom, flags) in enumerate(zip(truth.truths, truth.inlier_flags))
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_ground_truth_json(path) -> GroundTruth:
    with open(path) as fh:
        payload = json.load(fh)
    truths = tuple(from_vector(entry["homography"][:8]) for entry in payload)
    flags = tuple(tuple(bool(v) for v in entry["inlier_flags"]) for entry in payload)
    return GroundTruth(truths, flags)

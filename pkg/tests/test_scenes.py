import math

import numpy as np
import pytest

from fda_align import (
    CameraMove,
    DriftMagnitude,
    GroundTruth,
    Point2,
    ScenarioConfig,
    TrimmedLossConfig,
    default_dof_bounds,
    generate,
    grid_points,
    identity,
    move_homography,
    read_ground_truth_json,
    reprojection_error,
    translation,
    transform_points,
    trimmed_loss,
    write_ground_truth_json,
    write_matches_csv,
)
from fda_align.errors import ConfigInvalid
from fda_align.homography import apply, to_vector


def noiseless(**kwargs) -> ScenarioConfig:
    return ScenarioConfig(noise_sigma=0.0, outlier_fraction=0.0, **kwargs)


# -------------------------------------------------------------------- config

def test_resolved_move_frames_defaults():
    assert ScenarioConfig().resolved_move_frames() == (5, 10, 15, 20, 25)
    assert ScenarioConfig(n_frames=12).resolved_move_frames() == (2, 4, 6, 8, 10)
    assert ScenarioConfig(n_frames=1).resolved_move_frames() == ()
    assert ScenarioConfig(move_frames=(3, 7)).resolved_move_frames() == (3, 7)


def test_scenario_config_validation():
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(image_size=(0, 100))
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(n_keypoints=0)
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(n_frames=0)
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(outlier_fraction=1.0)
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(outlier_fraction=-0.1)
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(noise_sigma=-1.0)
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(outlier_radius=0.0)
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(n_frames=10, move_frames=(0,))
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(n_frames=10, move_frames=(10,))
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(n_frames=10, move_frames=(5, 5))
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(n_frames=10, move_frames=(7, 3))
    with pytest.raises(ConfigInvalid):
        ScenarioConfig(move_frames=(3,), move_schedule=(CameraMove(), CameraMove()))
    with pytest.raises(ConfigInvalid):
        DriftMagnitude(translation=-1.0)


# --------------------------------------------------------------------- moves

def test_move_homography_zero_move_is_identity():
    assert move_homography(CameraMove(), (1920, 1080)).dof == identity().dof


def test_move_homography_pure_translation_is_exact():
    h = move_homography(CameraMove(tx=5.0, ty=-3.0), (1920, 1080))
    assert h.dof == translation(5.0, -3.0).dof


def test_move_homography_rotates_about_image_center():
    size = (200, 100)
    h = move_homography(CameraMove(rotation=math.pi / 2), size)
    center = Point2(100.0, 50.0)
    moved = apply(h, center)
    assert moved.x == pytest.approx(center.x, abs=1e-9)
    assert moved.y == pytest.approx(center.y, abs=1e-9)
    # a point 10px right of center rotates to 10px below it (y grows downward)
    spun = apply(h, Point2(110.0, 50.0))
    assert spun.x == pytest.approx(100.0, abs=1e-9)
    assert spun.y == pytest.approx(60.0, abs=1e-9)


# ----------------------------------------------------------------- generate

def test_generate_deterministic_bitwise(tmp_path):
    cfg = ScenarioConfig(n_frames=6, n_keypoints=40, rng_seed=3)
    frames_a, truth_a = generate(cfg)
    frames_b, truth_b = generate(cfg)
    for fa, fb in zip(frames_a, frames_b):
        assert fa.frame_id == fb.frame_id
        for pa, pb in zip(fa.pairs, fb.pairs):
            assert (pa.source.x, pa.source.y) == (pb.source.x, pb.source.y)
            assert (pa.target.x, pa.target.y) == (pb.target.x, pb.target.y)
    for ha, hb in zip(truth_a.truths, truth_b.truths):
        assert ha.dof == hb.dof
    assert truth_a.inlier_flags == truth_b.inlier_flags
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_matches_csv(pa, frames_a)
    write_matches_csv(pb, frames_b)
    assert pa.read_bytes() == pb.read_bytes()


def test_generate_seeds_differ():
    frames_a, _ = generate(ScenarioConfig(n_frames=2, n_keypoints=10, rng_seed=1))
    frames_b, _ = generate(ScenarioConfig(n_frames=2, n_keypoints=10, rng_seed=2))
    assert any(
        pa.target != pb.target for pa, pb in zip(frames_a[0].pairs, frames_b[0].pairs)
    )


def test_noiseless_stream_has_zero_loss_at_truth():
    frames, truth = generate(noiseless(n_frames=8, n_keypoints=50))
    cfg = TrimmedLossConfig()
    for frame, h in zip(frames, truth.truths):
        assert trimmed_loss(h, frame, cfg) == 0.0


def test_truth_changes_exactly_at_move_frames():
    cfg = noiseless()
    frames, truth = generate(cfg)
    assert len(frames) == 30 and len(truth.truths) == 30
    assert truth.truths[0].dof == identity().dof
    moves = set(cfg.resolved_move_frames())
    for f in range(1, 30):
        changed = truth.truths[f].dof != truth.truths[f - 1].dof
        assert changed == (f in moves)
    assert len(moves) == 5


def test_outlier_flag_count_matches_fraction():
    frames, truth = generate(ScenarioConfig(n_frames=4))
    for flags in truth.inlier_flags:
        assert len(flags) == 200
        assert sum(1 for v in flags if not v) == 20  # round(0.1 * 200)


def test_outliers_displace_within_radius_and_inliers_are_exact():
    cfg = ScenarioConfig(
        n_frames=3, n_keypoints=100, noise_sigma=0.0,
        outlier_fraction=0.25, outlier_radius=300.0,
    )
    frames, truth = generate(cfg)
    for frame, h, flags in zip(frames, truth.truths, truth.inlier_flags):
        src = np.array([[p.source.x, p.source.y] for p in frame.pairs])
        tgt = np.array([[p.target.x, p.target.y] for p in frame.pairs])
        exact = transform_points(h, src)
        shift = np.linalg.norm(tgt - exact, axis=1)
        inlier = np.array(flags)
        assert np.all(shift[inlier] == 0.0)
        assert np.all(shift[~inlier] <= 300.0 + 1e-9)
        assert np.all(shift[~inlier] > 0.0)


def test_move_schedule_pins_exact_moves():
    cfg = noiseless(
        n_frames=4,
        n_keypoints=10,
        move_frames=(2,),
        move_schedule=(CameraMove(tx=5.0),),
    )
    _, truth = generate(cfg)
    want = translation(5.0, 0.0).dof
    assert truth.truths[0].dof == identity().dof
    assert truth.truths[1].dof == identity().dof
    assert truth.truths[2].dof == want
    assert truth.truths[3].dof == want


def test_default_scenario_truths_stay_inside_default_bounds():
    space = default_dof_bounds()
    for seed in range(12):
        _, truth = generate(ScenarioConfig(rng_seed=seed, n_keypoints=20))
        for h in truth.truths:
            assert space.contains(to_vector(h))


# -------------------------------------------------------------- measurement

def test_grid_points_layout():
    pts = grid_points((1920, 1080))
    assert pts.shape == (100, 2)
    corners = grid_points((1920, 1080), nx=2, ny=2)
    assert sorted(map(tuple, corners)) == [
        (0.0, 0.0), (0.0, 1080.0), (1920.0, 0.0), (1920.0, 1080.0),
    ]


def test_reprojection_error_frozen_values():
    pts = grid_points((1920, 1080))
    truth = identity()
    assert reprojection_error(truth, truth, pts) == 0.0
    assert reprojection_error(translation(1.0, 0.0), truth, pts) == 1.0
    assert reprojection_error(translation(-2.0, 3.0), truth, pts) == 5.0


def test_reprojection_error_matches_per_point_computation():
    rng = np.random.default_rng(99)
    est = move_homography(
        CameraMove(rotation=0.01, tx=4.0, ty=-2.5, skew_x=1e-5, skew_y=-2e-5),
        (1920, 1080),
    )
    truth = move_homography(CameraMove(rotation=0.012, tx=3.0), (1920, 1080))
    pts = rng.uniform([0, 0], [1920, 1080], size=(57, 2))
    by_hand = []
    for x, y in pts:
        a = apply(est, Point2(float(x), float(y)))
        b = apply(truth, Point2(float(x), float(y)))
        by_hand.append(abs(a.x - b.x) + abs(a.y - b.y))
    want = float(np.mean(by_hand))
    assert reprojection_error(est, truth, pts) == pytest.approx(want, rel=1e-12)


def test_ground_truth_json_round_trip(tmp_path):
    _, truth = generate(ScenarioConfig(n_frames=3, n_keypoints=8))
    path = tmp_path / "truth.json"
    write_ground_truth_json(path, truth)
    back = read_ground_truth_json(path)
    assert isinstance(back, GroundTruth)
    for ha, hb in zip(truth.truths, back.truths):
        assert ha.dof == hb.dof
    assert back.inlier_flags == truth.inlier_flags

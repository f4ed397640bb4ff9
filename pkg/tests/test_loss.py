import numpy as np
import pytest

from fda_align import (
    EmptyErrorList,
    EmptyMatchSet,
    Homography,
    MatchedPair,
    MatchSet,
    MatchesFormatError,
    Point2,
    TrimmedLossConfig,
    frame_objective,
    from_vector,
    identity,
    load_matches_csv,
    pair_error,
    percentile_threshold,
    translation,
    trimmed_loss,
    write_matches_csv,
)
from fda_align.errors import ConfigInvalid

RNG = np.random.default_rng(987123)


def pairs_with_errors(errors):
    # source (0,0), target (e,0): the pair error under identity is exactly e
    return MatchSet(0, tuple(MatchedPair(Point2(0.0, 0.0), Point2(float(e), 0.0)) for e in errors))


def nearest_rank_index(i: int, n: int) -> int:
    # 1-based rank ceil(i*n/100) computed purely with integer ceil-division
    return -((-i * n) // 100)


def brute_force_trim(errors, i: int) -> float:
    ordered = np.sort(np.asarray(errors, dtype=float))
    threshold = ordered[nearest_rank_index(i, len(errors)) - 1]
    return float(ordered[ordered <= threshold].sum())


# ---------------------------------------------------------------- percentile

def test_percentile_frozen_cases():
    # ceil(0.8 * 10) = 8 -> the 8th smallest of 1..10 is 8
    assert percentile_threshold(list(range(1, 11)), 80) == 8.0
    assert percentile_threshold([5.0], 37) == 5.0
    assert percentile_threshold([3.0, 3.0, 3.0, 3.0], 80) == 3.0
    assert percentile_threshold([5.0, 1.0, 9.0, 3.0], 50) == 3.0
    assert percentile_threshold([5.0, 1.0, 9.0, 3.0], 100) == 9.0
    assert percentile_threshold([5.0, 1.0, 9.0, 3.0], 1) == 1.0


def test_percentile_rank_never_drifts_from_float_rounding():
    # i*n/100 computed in floats can land just above an integer (e.g.
    # 0.8*10 = 8.000000000000002); the rank must use the exact integer value.
    values = list(range(100))
    for n in (5, 10, 20, 25, 40, 50):
        for i in (20, 40, 60, 80):
            got = percentile_threshold(values[:n], i)
            assert got == float(sorted(values[:n])[nearest_rank_index(i, n) - 1])


def test_percentile_exhaustive_small_sizes():
    for n in range(1, 21):
        errors = RNG.uniform(0.0, 100.0, n)
        ordered = sorted(float(e) for e in errors)
        for i in range(1, 101):
            assert percentile_threshold(errors, i) == ordered[nearest_rank_index(i, n) - 1]


def test_percentile_order_invariance():
    errors = RNG.uniform(0.0, 50.0, 31)
    shuffled = errors.copy()
    RNG.shuffle(shuffled)
    for i in (1, 33, 80, 100):
        assert percentile_threshold(errors, i) == percentile_threshold(shuffled, i)


def test_percentile_empty_and_bad_i():
    with pytest.raises(EmptyErrorList):
        percentile_threshold([], 50)
    with pytest.raises(ValueError):
        percentile_threshold([1.0], 0)
    with pytest.raises(ValueError):
        percentile_threshold([1.0], 101)


# ---------------------------------------------------------------- pair error

def test_pair_error_exact_translation():
    pair = MatchedPair(Point2(10.0, 20.0), Point2(15.0, 17.0))
    assert pair_error(translation(5.0, -3.0), pair) == 0.0


def test_pair_error_l1():
    pair = MatchedPair(Point2(0.0, 0.0), Point2(3.0, 4.0))
    assert pair_error(identity(), pair) == 7.0


def test_pair_error_degenerate_becomes_penalty():
    h = Homography((1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -0.01, 0.0))
    pair = MatchedPair(Point2(100.0, 0.0), Point2(0.0, 0.0))
    assert pair_error(h, pair) == 1e6
    assert pair_error(h, pair, TrimmedLossConfig(degenerate_penalty=42.0)) == 42.0


# -------------------------------------------------------------- trimmed loss

def test_trimmed_loss_perfect_matches():
    src = RNG.uniform([0, 0], [1920, 1080], (30, 2))
    h = translation(12.0, -7.0)
    pairs = tuple(
        MatchedPair(Point2(x, y), Point2(x + 12.0, y + -7.0)) for x, y in src
    )
    assert trimmed_loss(h, MatchSet(0, pairs)) == 0.0


def test_trimmed_loss_frozen_prefix_sum():
    # errors 1..10 at i=80: threshold is 8, retained sum = 1+2+...+8 = 36
    assert trimmed_loss(identity(), pairs_with_errors(range(1, 11))) == 36.0


def test_trimmed_loss_outliers_fully_trimmed():
    # 8 exact pairs + 2 gross outliers; rank ceil(0.8*10)=8 -> threshold 0,
    # so only the eight zero-error pairs are retained
    exact = [MatchedPair(Point2(float(k), 1.0), Point2(float(k), 1.0)) for k in range(8)]
    outliers = [
        MatchedPair(Point2(50.0, 50.0), Point2(300.0, 300.0)),
        MatchedPair(Point2(60.0, 40.0), Point2(310.0, 290.0)),
    ]
    frame = MatchSet(3, tuple(exact + outliers))
    assert pair_error(identity(), outliers[0]) == 500.0
    assert trimmed_loss(identity(), frame) == 0.0


def test_trimmed_loss_matches_brute_force_oracle():
    for _ in range(1000):
        n = int(RNG.integers(1, 51))
        errors = RNG.uniform(0.0, 1000.0, n)
        i = int(RNG.integers(1, 101))
        got = trimmed_loss(identity(), pairs_with_errors(errors), TrimmedLossConfig(percentile_i=i))
        assert got == brute_force_trim(errors, i)


def test_trimmed_loss_tie_retention_is_inclusive():
    # threshold value 2.0 is duplicated; every tied error must be retained
    errors = [1.0, 2.0, 2.0, 2.0, 9.0]
    # rank ceil(0.6*5) = 3 -> threshold 2.0 -> retain 1 + 2 + 2 + 2
    got = trimmed_loss(identity(), pairs_with_errors(errors), TrimmedLossConfig(percentile_i=60))
    assert got == 7.0


def test_trimmed_loss_permutation_invariant():
    errors = RNG.uniform(0.0, 100.0, 25)
    frame = pairs_with_errors(errors)
    shuffled = list(frame.pairs)
    RNG.shuffle(shuffled)
    assert trimmed_loss(identity(), frame) == trimmed_loss(identity(), MatchSet(0, tuple(shuffled)))


def test_trimmed_loss_monotone_in_percentile():
    errors = RNG.uniform(0.0, 100.0, 37)
    frame = pairs_with_errors(errors)
    losses = [
        trimmed_loss(identity(), frame, TrimmedLossConfig(percentile_i=i))
        for i in range(1, 101)
    ]
    assert all(a <= b for a, b in zip(losses, losses[1:]))


def test_trimmed_loss_translation_sensitivity_exact():
    # integer sources and a dyadic delta keep every float op exact, so the
    # loss responds by exactly (retained count) * |delta|
    src = [(100 * k + 7, 50 * k + 3) for k in range(10)]
    truth = translation(5.0, -3.0)
    pairs = tuple(
        MatchedPair(Point2(float(x), float(y)), Point2(x + 5.0, y - 3.0)) for x, y in src
    )
    frame = MatchSet(0, pairs)
    delta = 0.25
    perturbed = translation(5.0 + delta, -3.0)
    assert trimmed_loss(truth, frame) == 0.0
    assert trimmed_loss(perturbed, frame) == 10 * delta


def test_trimmed_loss_empty_matchset():
    with pytest.raises(EmptyMatchSet):
        trimmed_loss(identity(), MatchSet(0, ()))
    with pytest.raises(EmptyMatchSet):
        frame_objective(MatchSet(0, ()), TrimmedLossConfig())


def test_frame_objective_equals_trimmed_loss_bitwise():
    src = RNG.uniform([0, 0], [1920, 1080], (50, 2))
    tgt = src + RNG.normal(0, 3.0, (50, 2))
    frame = MatchSet(
        0,
        tuple(MatchedPair(Point2(*s), Point2(*t)) for s, t in zip(src, tgt)),
    )
    cfg = TrimmedLossConfig()
    objective = frame_objective(frame, cfg)
    for _ in range(25):
        v = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0]) + RNG.uniform(-0.01, 0.01, 8)
        v[[6, 7]] *= 1e-2
        assert objective(v) == trimmed_loss(from_vector(v), frame, cfg)


def test_loss_config_validation():
    with pytest.raises(ConfigInvalid):
        TrimmedLossConfig(percentile_i=0)
    with pytest.raises(ConfigInvalid):
        TrimmedLossConfig(percentile_i=101)
    with pytest.raises(ConfigInvalid):
        TrimmedLossConfig(degenerate_penalty=0.0)
    with pytest.raises(ConfigInvalid):
        TrimmedLossConfig(degenerate_penalty=float("inf"))


def test_matchset_validation():
    with pytest.raises(ValueError):
        MatchSet(-1, (MatchedPair(Point2(0, 0), Point2(0, 0)),))


# ----------------------------------------------------------------- CSV round trip

def test_matches_csv_round_trip_bitwise(tmp_path):
    frames = []
    for f in range(3):
        src = RNG.uniform([0, 0], [1920, 1080], (7, 2))
        tgt = src + RNG.normal(0, 1.0, (7, 2))
        frames.append(
            MatchSet(f, tuple(MatchedPair(Point2(*s), Point2(*t)) for s, t in zip(src, tgt)))
        )
    path = tmp_path / "matches.csv"
    write_matches_csv(path, frames)
    loaded = load_matches_csv(path)
    assert len(loaded) == 3
    for orig, back in zip(frames, loaded):
        assert back.frame_id == orig.frame_id
        for a, b in zip(orig.pairs, back.pairs):
            assert (a.source.x, a.source.y, a.target.x, a.target.y) == (
                b.source.x, b.source.y, b.target.x, b.target.y,
            )


def _write(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    return path


def test_matches_csv_bad_header(tmp_path):
    path = _write(tmp_path, "frame,x1,y1,x2,y2\n0,1,2,3,4\n")
    with pytest.raises(MatchesFormatError) as err:
        load_matches_csv(path)
    assert err.value.line == 1


def test_matches_csv_missing_column(tmp_path):
    path = _write(tmp_path, "frame_id,x1,y1,x2,y2\n0,1.0,2.0,3.0,4.0\n0,1.0,2.0,3.0\n")
    with pytest.raises(MatchesFormatError) as err:
        load_matches_csv(path)
    assert err.value.line == 3


def test_matches_csv_non_numeric(tmp_path):
    path = _write(tmp_path, "frame_id,x1,y1,x2,y2\n0,1.0,oops,3.0,4.0\n")
    with pytest.raises(MatchesFormatError) as err:
        load_matches_csv(path)
    assert err.value.line == 2


def test_matches_csv_non_finite(tmp_path):
    path = _write(tmp_path, "frame_id,x1,y1,x2,y2\n0,1.0,nan,3.0,4.0\n")
    with pytest.raises(MatchesFormatError) as err:
        load_matches_csv(path)
    assert err.value.line == 2


def test_matches_csv_decreasing_frame(tmp_path):
    path = _write(
        tmp_path,
        "frame_id,x1,y1,x2,y2\n1,1.0,2.0,3.0,4.0\n0,1.0,2.0,3.0,4.0\n",
    )
    with pytest.raises(MatchesFormatError) as err:
        load_matches_csv(path)
    assert err.value.line == 3


def test_matches_csv_negative_frame(tmp_path):
    path = _write(tmp_path, "frame_id,x1,y1,x2,y2\n-1,1.0,2.0,3.0,4.0\n")
    with pytest.raises(MatchesFormatError) as err:
        load_matches_csv(path)
    assert err.value.line == 2


def test_matches_csv_empty_or_header_only(tmp_path):
    with pytest.raises(MatchesFormatError):
        load_matches_csv(_write(tmp_path, ""))
    with pytest.raises(MatchesFormatError):
        load_matches_csv(_write(tmp_path, "frame_id,x1,y1,x2,y2\n"))

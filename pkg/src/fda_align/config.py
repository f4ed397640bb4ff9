"""JSON run configuration: one file describing scenario, loss, search, and runner.

Every section is optional and falls back to package defaults. Unknown fields
anywhere raise :class:`ConfigInvalid` naming the offending path, so typos fail
loudly instead of silently running defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigInvalid
from .loss import TrimmedLossConfig
from .optimizer import FdaConfig, SearchSpace
from .runner import ChangeDetectorConfig, RunnerConfig
from .scenes import CameraMove, DriftMagnitude, ScenarioConfig

_TOP_LEVEL = ("scenario", "loss", "optimizer", "detector", "runner")


@dataclass(frozen=True)
class AppConfig:
    scenario: ScenarioConfig
    runner: RunnerConfig


def _require_object(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigInvalid(f"{where} must be a JSON object, got {type(value).__name__}")
    return value


def _check_keys(data: dict, allowed, where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigInvalid(f"{where}: unknown field(s): {', '.join(unknown)}")


def _build(cls, data: dict, where: str, allowed: tuple[str, ...]):
    _check_keys(data, allowed, where)
    try:
        return cls(**data)
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"{where}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from None


def _build_scenario(data: dict, seed_override: int | None) -> ScenarioConfig:
    where = "scenario"
    allowed = (
        "rng_seed", "image_size", "n_keypoints", "n_frames", "move_frames",
        "drift_magnitude", "noise_sigma", "outlier_fraction", "outlier_radius", "move_schedule",
    )
    _check_keys(data, allowed, where)
    kwargs = dict(data)
    if "image_size" in kwargs:
        size = kwargs["image_size"]
        if not (isinstance(size, (list, tuple)) and len(size) == 2):
            raise ConfigInvalid(f"{where}.image_size must be a [width, height] pair")
        kwargs["image_size"] = (int(size[0]), int(size[1]))
    if "move_frames" in kwargs and kwargs["move_frames"] is not None:
        if not isinstance(kwargs["move_frames"], (list, tuple)):
            raise ConfigInvalid(f"{where}.move_frames must be a list of frame indices")
        kwargs["move_frames"] = tuple(kwargs["move_frames"])
    if "drift_magnitude" in kwargs:
        drift = _require_object(kwargs["drift_magnitude"], f"{where}.drift_magnitude")
        kwargs["drift_magnitude"] = _build(
            DriftMagnitude, drift, f"{where}.drift_magnitude", ("translation", "rotation", "skew")
        )
    if "move_schedule" in kwargs and kwargs["move_schedule"] is not None:
        if not isinstance(kwargs["move_schedule"], (list, tuple)):
            raise ConfigInvalid(f"{where}.move_schedule must be a list of moves")
        moves = []
        for k, entry in enumerate(kwargs["move_schedule"]):
            entry = _require_object(entry, f"{where}.move_schedule[{k}]")
            moves.append(
                _build(
                    CameraMove, entry, f"{where}.move_schedule[{k}]",
                    ("rotation", "tx", "ty", "skew_x", "skew_y"),
                )
            )
        kwargs["move_schedule"] = tuple(moves)
    if seed_override is not None:
        kwargs["rng_seed"] = int(seed_override)
    return _build(ScenarioConfig, kwargs, where, allowed)


def _build_runner(raw: dict) -> RunnerConfig:
    loss = _build(
        TrimmedLossConfig,
        _require_object(raw.get("loss", {}), "loss"),
        "loss",
        ("percentile_i", "degenerate_penalty"),
    )
    optimizer = _build(
        FdaConfig,
        {"eval_budget": 20000, **_require_object(raw.get("optimizer", {}), "optimizer")},
        "optimizer",
        (
            "eval_budget", "max_depth", "inflation",
            "ils_initial_step", "ils_step_decay", "ils_min_step", "rng_seed",
        ),
    )
    detector = _build(
        ChangeDetectorConfig,
        _require_object(raw.get("detector", {}), "detector"),
        "detector",
        ("relative_jump", "absolute_floor"),
    )
    runner_raw = _require_object(raw.get("runner", {}), "runner")
    _check_keys(runner_raw, ("warm_start_policy", "dof_bounds"), "runner")
    kwargs = {"loss": loss, "optimizer": optimizer, "detector": detector}
    if "warm_start_policy" in runner_raw:
        kwargs["warm_start_policy"] = runner_raw["warm_start_policy"]
    if "dof_bounds" in runner_raw:
        bounds = _require_object(runner_raw["dof_bounds"], "runner.dof_bounds")
        _check_keys(bounds, ("lower", "upper"), "runner.dof_bounds")
        if "lower" not in bounds or "upper" not in bounds:
            raise ConfigInvalid("runner.dof_bounds needs both 'lower' and 'upper'")
        kwargs["dof_bounds"] = _build(
            SearchSpace,
            {"lower": tuple(bounds["lower"]), "upper": tuple(bounds["upper"])},
            "runner.dof_bounds",
            ("lower", "upper"),
        )
    try:
        return RunnerConfig(**kwargs)
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"runner: {exc}") from None


def load_app_config(path=None, seed_override: int | None = None) -> AppConfig:
    """Load an :class:`AppConfig` from a JSON file (or defaults when ``path`` is None).

    ``seed_override`` replaces the scenario's ``rng_seed`` when given.
    File-system failures propagate as ``OSError``; anything wrong with the
    content raises :class:`ConfigInvalid`.
    """
    raw: dict = {}
    if path is not None:
        with open(path) as fh:
            text = fh.read()
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from None
        raw = _require_object(parsed, "config root")
    _check_keys(raw, _TOP_LEVEL, "config")
    scenario = _build_scenario(
        _require_object(raw.get("scenario", {}), "scenario"), seed_override
    )
    return AppConfig(scenario=scenario, runner=_build_runner(raw))

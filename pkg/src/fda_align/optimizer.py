"""Fractal hypersphere decomposition search with intensive local refinement.

The search runs in the normalized box ``[-1, 1]^D``. The root hypersphere
(center 0, radius 1) is recursively split into ``2 * D`` children, two per
axis, placed at ``center +/- (radius / 2) * e_d``. Children are visited
best-first by their center's objective value; at the maximum depth a
coordinate-wise pattern search (intensive local search) refines the most
promising leaves until the evaluation budget runs out.

Child radii are ``(radius / 2) * inflation`` where the effective inflation is
floored at the smallest value that lets the children jointly cover the parent
sphere, so no point of the parent can fall outside every child.
"""

from __future__ import annotations

import heapq
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import BudgetTooSmall, ConfigInvalid, MaxDepthReached, OutOfBounds


@dataclass(frozen=True)
class SearchSpace:
    """An axis-aligned box of valid parameter vectors.

    Parameters
    ----------
    lower, upper : tuple of floats
        Per-dimension bounds; every ``lower[d]`` must be strictly below
        ``upper[d]`` and all entries finite.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != len(self.upper):
            raise ConfigInvalid(
                f"bounds length mismatch: {len(self.lower)} vs {len(self.upper)}"
            )
        if len(self.lower) == 0:
            raise ConfigInvalid("search space needs at least one dimension")
        for d, (lo, up) in enumerate(zip(self.lower, self.upper)):
            if not (math.isfinite(lo) and math.isfinite(up)):
                raise ConfigInvalid(f"bounds for dimension {d} must be finite")
            if not lo < up:
                raise ConfigInvalid(
                    f"lower bound must be strictly below upper in dimension {d}: "
                    f"{lo} vs {up}"
                )

    @property
    def dim(self) -> int:
        return len(self.lower)

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lower, dtype=float), np.array(self.upper, dtype=float)

    def contains(self, x) -> bool:
        lo, up = self._arrays
        arr = np.asarray(x, dtype=float).reshape(-1)
        return arr.shape[0] == self.dim and bool(
            np.all(arr >= lo) and np.all(arr <= up)
        )


def normalize(space: SearchSpace, x) -> np.ndarray:
    """Map a point of the box onto ``[-1, 1]^D``.

    Raises
    ------
    OutOfBounds
        If any coordinate falls outside its ``[lower, upper]`` interval.
    """
    lo, up = space._arrays
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape[0] != space.dim:
        raise OutOfBounds(f"expected {space.dim} coordinates, got {arr.shape[0]}")
    if np.any(arr < lo) or np.any(arr > up):
        bad = int(np.argmax((arr < lo) | (arr > up)))
        raise OutOfBounds(
            f"coordinate {bad} = {arr[bad]} outside [{lo[bad]}, {up[bad]}]"
        )
    return 2.0 * (arr - lo) / (up - lo) - 1.0


def denormalize(space: SearchSpace, z) -> np.ndarray:
    """Map a normalized point back into the box, clamping to ``[-1, 1]`` first.

    The output is additionally clamped to the box so float rounding can never
    produce a point a last-place unit outside it.
    """
    lo, up = space._arrays
    arr = np.asarray(z, dtype=float).reshape(-1)
    if arr.shape[0] != space.dim:
        raise OutOfBounds(f"expected {space.dim} coordinates, got {arr.shape[0]}")
    clamped = np.clip(arr, -1.0, 1.0)
    return np.clip(lo + (clamped + 1.0) * 0.5 * (up - lo), lo, up)


@dataclass
class HypersphereNode:
    """One hypersphere of the decomposition tree (center in ``[-1, 1]^D``)."""

    center: np.ndarray
    radius: float
    depth: int
    quality: float | None = None


@dataclass(frozen=True)
class FdaConfig:
    """Search hyperparameters.

    ``eval_budget`` is the hard cap on objective calls for one search.
    ``rng_seed`` is reserved for stochastic variants; the search itself is
    deterministic and never draws from it.
    """

    eval_budget: int
    max_depth: int = 4
    inflation: float = 1.75
    ils_initial_step: float = 0.1
    ils_step_decay: float = 0.5
    ils_min_step: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.eval_budget, int) or self.eval_budget <= 0:
            raise ConfigInvalid(f"eval_budget must be a positive integer, got {self.eval_budget!r}")
        if not isinstance(self.max_depth, int) or self.max_depth < 1:
            raise ConfigInvalid(f"max_depth must be an integer >= 1, got {self.max_depth!r}")
        if not self.inflation > 1.0:
            raise ConfigInvalid(f"inflation must be > 1, got {self.inflation!r}")
        if not 0.0 < self.ils_step_decay < 1.0:
            raise ConfigInvalid(f"ils_step_decay must be in (0, 1), got {self.ils_step_decay!r}")
        if not self.ils_initial_step > 0:
            raise ConfigInvalid(f"ils_initial_step must be > 0, got {self.ils_initial_step!r}")
        if not 0 < self.ils_min_step <= self.ils_initial_step:
            raise ConfigInvalid(
                f"ils_min_step must be in (0, ils_initial_step], got {self.ils_min_step!r}"
            )


def covering_inflation(dim: int) -> float:
    """Smallest child-radius inflation that covers the parent sphere.

    A child at distance ``r/2`` from the parent center must reach the farthest
    parent point not closer to any other child. Equating the child radius
    ``(r/2) * delta`` against that worst-case distance gives
    ``delta = 2 * sqrt(5/4 - 1/sqrt(D))``; below it the parent sphere has
    uncovered corners for D >= 6.
    """
    if dim < 1:
        raise ConfigInvalid(f"dimension must be >= 1, got {dim}")
    return 2.0 * math.sqrt(1.25 - 1.0 / math.sqrt(dim))


def decompose(
    node: HypersphereNode, inflation: float, max_depth: int | None = None
) -> list[HypersphereNode]:
    """Split a node into ``2 * D`` child hyperspheres.

    Children are ordered by axis index ascending, the ``+`` offset before the
    ``-`` offset. Child centers are clamped into ``[-1, 1]^D``; the child
    radius is ``(radius / 2) * max(inflation, covering_inflation(D))``.

    Raises
    ------
    MaxDepthReached
        If ``max_depth`` is given and the node already sits at it.
    """
    if max_depth is not None and node.depth >= max_depth:
        raise MaxDepthReached(f"node at depth {node.depth} cannot be split")
    dim = node.center.shape[0]
    half = node.radius / 2.0
    child_radius = half * max(inflation, covering_inflation(dim))
    children: list[HypersphereNode] = []
    for d in range(dim):
        for sign in (1.0, -1.0):
            center = node.center.copy()
            center[d] = min(1.0, max(-1.0, center[d] + sign * half))
            children.append(HypersphereNode(center, child_radius, node.depth + 1))
    return children


def ils(
    objective: Callable[[np.ndarray], float],
    start: np.ndarray,
    cfg: FdaConfig,
    budget: int,
    start_value: float | None = None,
) -> tuple[np.ndarray, float | None, int]:
    """Intensive local search: coordinate-wise pattern descent.

    From the current point, axes are probed in ascending order with offsets
    ``+step`` then ``-step`` (clamped to ``[-1, 1]``). The first strictly
    improving candidate is accepted and the sweep restarts at axis 0. A full
    sweep with no acceptance halves the step (by ``ils_step_decay``); the
    search stops once the step falls below ``ils_min_step`` or the budget is
    spent.

    Parameters
    ----------
    start_value : float, optional
        Known objective value at ``start``; when given, the start is not
        re-evaluated and costs nothing from the budget.

    Returns
    -------
    (point, value, evaluations) : the best point found, its value (``None``
        only when nothing could be evaluated), and objective calls consumed.
    """
    current = np.clip(np.asarray(start, dtype=float).reshape(-1), -1.0, 1.0)
    dim = current.shape[0]
    evals = 0
    if start_value is None:
        if budget <= 0:
            return current, None, 0
        fcur = float(objective(current))
        evals = 1
    else:
        fcur = float(start_value)

    step = cfg.ils_initial_step
    while step >= cfg.ils_min_step and evals < budget:
        d = 0
        while d < dim and evals < budget:
            accepted = False
            for sign in (1.0, -1.0):
                coord = min(1.0, max(-1.0, current[d] + sign * step))
                if coord == current[d]:
                    continue  # clamped into a no-op; skip without spending budget
                if evals >= budget:
                    return current, fcur, evals
                candidate = current.copy()
                candidate[d] = coord
                value = float(objective(candidate))
                evals += 1
                if value < fcur:
                    current, fcur = candidate, value
                    accepted = True
                    break
            if accepted:
                d = 0
            else:
                d += 1
        if d >= dim:
            # A clean sweep at this step size: refine.
            step *= cfg.ils_step_decay
    return current, fcur, evals


class EvalRecord(NamedTuple):
    """One recorded objective call: its 0-based index, value, and the running best."""

    index: int
    value: float
    best: float


@dataclass
class OptimizationResult:
    """Outcome of one :func:`explore` run, in original (denormalized) coordinates."""

    best_point: np.ndarray
    best_value: float
    evaluations_used: int
    trace: list[EvalRecord] = field(repr=False)


class _Recorder:
    """Wraps the raw objective: denormalizes, counts, traces, tracks the best."""

    def __init__(self, objective, space: SearchSpace, budget: int, workers: int):
        self._objective = objective
        self._space = space
        self.budget = budget
        self.used = 0
        self.best_point: np.ndarray | None = None
        self.best_value = math.inf
        self.trace: list[EvalRecord] = []
        self._executor = ThreadPoolExecutor(max_workers=workers) if workers >= 2 else None

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def _account(self, x: np.ndarray, value: float) -> None:
        if value < self.best_value:
            self.best_value = value
            self.best_point = x
        self.trace.append(EvalRecord(self.used, value, self.best_value))
        self.used += 1

    def evaluate(self, z: np.ndarray) -> float:
        x = denormalize(self._space, z)
        value = float(self._objective(x))
        self._account(x, value)
        return value

    def evaluate_batch(self, zs: Sequence[np.ndarray]) -> list[float]:
        xs = [denormalize(self._space, z) for z in zs]
        if self._executor is not None:
            values = [float(v) for v in self._executor.map(self._objective, xs)]
        else:
            values = [float(self._objective(x)) for x in xs]
        # Accounting happens after the batch, in child order, so the trace and
        # the incumbent are identical whatever the worker count.
        for x, value in zip(xs, values):
            self._account(x, value)
        return values

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)


def explore(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace,
    cfg: FdaConfig,
    warm_start=None,
    workers: int = 0,
) -> OptimizationResult:
    """Run the full decomposition search over ``space``.

    The objective receives points in original coordinates. When
    ``warm_start`` (a point inside ``space``) is given it is evaluated first
    and refined with a local search before the tree search starts, so a still
    valid previous optimum is exploited rather than rediscovered.

    ``workers >= 2`` evaluates each sibling batch in a thread pool; results
    are merged in child order, so outputs are identical to a sequential run.

    Raises
    ------
    BudgetTooSmall
        If ``cfg.eval_budget < 2 * D * max_depth``, not enough to evaluate one
        child chain down to the deepest level.
    """
    dim = space.dim
    if cfg.eval_budget < 2 * dim * cfg.max_depth:
        raise BudgetTooSmall(
            f"budget {cfg.eval_budget} cannot cover one decomposition path "
            f"(need >= {2 * dim * cfg.max_depth})"
        )
    rec = _Recorder(objective, space, cfg.eval_budget, workers)
    try:
        if warm_start is not None:
            z = normalize(space, warm_start)
            warm_value = rec.evaluate(z)
            if rec.remaining > 0:
                ils(rec.evaluate, z, cfg, rec.remaining, start_value=warm_value)

        heap: list[tuple[float, int, HypersphereNode]] = []
        counter = itertools.count()
        if rec.remaining > 0:
            root = HypersphereNode(np.zeros(dim), 1.0, 0)
            root.quality = rec.evaluate(root.center)
            heapq.heappush(heap, (root.quality, next(counter), root))
        while heap and rec.remaining > 0:
            _, _, node = heapq.heappop(heap)
            if node.depth >= cfg.max_depth:
                ils(rec.evaluate, node.center, cfg, rec.remaining, start_value=node.quality)
                continue
            children = decompose(node, cfg.inflation)
            children = children[: rec.remaining]
            values = rec.evaluate_batch([c.center for c in children])
            for child, value in zip(children, values):
                child.quality = value
                heapq.heappush(heap, (value, next(counter), child))
    finally:
        rec.close()
    assert rec.best_point is not None  # budget guard guarantees >= 1 evaluation
    return OptimizationResult(rec.best_point, rec.best_value, rec.used, rec.trace)

"""The three optimization loops and their scheduling helpers.

``run_ego`` is the classical loop with per-iteration maximum-likelihood
length-scale re-estimation.  ``run_greedy_sweep`` is the oracle variant that
probes the true objective at the EI maximizer of every length-scale on a grid
and keeps the best probe.  ``run_ensemble_ego`` drives a small ensemble of
fixed-length-scale models per iteration, filters their proposals through
shrinking exclusion balls around the design, and densifies around the
best-performing length-scale.

All loops consume an explicit generator and emit :class:`ConvergenceRecord`
streams indexed by cumulative objective evaluations, so runs with the same
seed reproduce identical records.  Within one ensemble iteration the EI
maximizations use per-model generator substreams over immutable models; they
are mutually independent and could run concurrently without changing the
result.  The design is mutated only once, at iteration end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .acquisition import AcquisitionProblem, maximize_ei
from .design import BoxDomain, min_distance, sample_lengthscales
from .kriging import DesignOfExperiments, estimate_theta_ml, fit

#: Allowed provenance tags on convergence records.
PROVENANCES = ("init", "selected", "densified", "fallback", "ml-ego")


@dataclass(frozen=True)
class ConvergenceRecord:
    """One objective evaluation: where, what, and the running best."""

    run_id: str
    eval_index: int
    x: np.ndarray
    f: float
    best_so_far: float
    provenance: str


@dataclass(frozen=True)
class SweepTrace:
    """Per-iteration sweep data: each grid length-scale's EI maximizer and
    its true objective value."""

    thetas: np.ndarray
    candidates: np.ndarray
    f_values: np.ndarray

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float).reshape(-1)
        candidates = np.atleast_2d(np.asarray(self.candidates, dtype=float))
        f_values = np.asarray(self.f_values, dtype=float).reshape(-1)
        if not (thetas.size == candidates.shape[0] == f_values.size):
            raise ValueError("trace arrays must have matching lengths")
        if np.any(np.diff(thetas) < 0):
            raise ValueError("theta grid must be ascending")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "candidates", candidates)
        object.__setattr__(self, "f_values", f_values)


@dataclass(frozen=True)
class RadiusSchedule:
    """Linearly shrinking exclusion-ball radius over iterations.

    The radius starts at ``r1``, decays linearly to ``r1 / t_threshold`` at
    iteration ``t_threshold``, and is exactly zero afterwards.
    """

    r1: float
    t_threshold: int
    t_max: int

    def __post_init__(self):
        if self.r1 < 0:
            raise ValueError("r1 must be nonnegative")
        if not (1 <= self.t_threshold <= self.t_max):
            raise ValueError("need 1 <= t_threshold <= t_max")


def radius(t: int, schedule: RadiusSchedule) -> float:
    """Exclusion radius at iteration ``t`` (1-based)."""
    if t < 1:
        raise ValueError("iteration index starts at 1")
    if t > schedule.t_threshold:
        return 0.0
    return schedule.r1 - (schedule.r1 / schedule.t_threshold) * (t - 1)


def initial_radius(doe: DesignOfExperiments) -> float:
    """Half the distance from the best design point to its nearest neighbor."""
    if doe.n < 2:
        raise ValueError("initial radius needs at least two design points")
    best = int(np.argmin(doe.y))
    others = np.delete(doe.X, best, axis=0)
    return 0.5 * min_distance(doe.X[best], others)


def densify_lengthscales(thetas: Sequence[float], star_index: int,
                         lengthscale_range: tuple[float, float] = (0.01, 10.0),
                         ) -> tuple[float, float]:
    """Bracket the winning length-scale with two nearby ones.

    Interior winners take a third of the gap toward each neighbor; a winner
    at the low (high) end of the list is bracketed by the range's lower
    (upper) limit instead.
    """
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    q = thetas.size
    if q < 2:
        raise ValueError("need at least two length-scales to densify")
    if not 0 <= star_index < q:
        raise ValueError("star_index out of range")
    star = float(thetas[star_index])
    if star_index == 0:
        lo = float(lengthscale_range[0])
    else:
        lo = star - (star - float(thetas[star_index - 1])) / 3.0
    if star_index == q - 1:
        hi = float(lengthscale_range[1])
    else:
        hi = star + (float(thetas[star_index + 1]) - star) / 3.0
    return lo, hi


def select_candidates(candidates: np.ndarray, X: np.ndarray, r: float,
                      dedup_tol: float = 0.0) -> tuple[list[int], bool]:
    """Filter ensemble proposals by the exclusion balls around the design.

    Candidates closer than ``dedup_tol`` to an earlier candidate or to a
    design point are dropped first.  Of the survivors, those at distance at
    least ``r`` from the design are selected.  If that leaves nothing, the
    single candidate farthest from the design (maximin over the deduplicated
    proposals) is selected and the fallback flag is set.

    Returns indices into ``candidates`` (ascending) and the fallback flag.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kept: list[int] = []
    for i in range(len(candidates)):
        if all(float(np.linalg.norm(candidates[i] - candidates[j])) > dedup_tol
               for j in kept):
            kept.append(i)
    dists = {i: min_distance(candidates[i], X) for i in kept}
    selected = [i for i in kept if dists[i] > dedup_tol and dists[i] >= r]
    if selected:
        return selected, False
    maximin = max(kept, key=lambda i: (dists[i], -i))
    return [maximin], True


@dataclass(frozen=True)
class LoopConfig:
    """Shared knobs for the optimization loops."""

    domain: BoxDomain
    ei_search_budget: int | None = None
    ml_theta_bounds: tuple[float, float] = (0.01, 10.0)
    lengthscale_log_range: tuple[float, float] = (-2.0, 1.0)
    # When set, the two densified models see the points selected earlier in
    # the same iteration; by default they are fitted on the design as it was
    # at iteration start.
    densify_on_updated_doe: bool = False
    run_id: str = "run"


class _Recorder:
    """Accumulates records with a running best and a cumulative eval index."""

    def __init__(self, run_id: str, on_record: Callable[[ConvergenceRecord], None] | None):
        self.run_id = run_id
        self.on_record = on_record
        self.records: list[ConvergenceRecord] = []
        self.best = math.inf
        self.count = 0

    def add(self, x: np.ndarray, f: float, provenance: str) -> None:
        self.count += 1
        self.best = min(self.best, float(f))
        rec = ConvergenceRecord(
            run_id=self.run_id,
            eval_index=self.count,
            x=np.asarray(x, dtype=float).copy(),
            f=float(f),
            best_so_far=self.best,
            provenance=provenance,
        )
        self.records.append(rec)
        if self.on_record is not None:
            self.on_record(rec)

    def add_initial(self, doe: DesignOfExperiments) -> None:
        for i in range(doe.n):
            self.add(doe.X[i], doe.y[i], "init")


def run_ego(f: Callable[[np.ndarray], float], doe_init: DesignOfExperiments,
            budget: int, config: LoopConfig, rng: np.random.Generator,
            on_record: Callable[[ConvergenceRecord], None] | None = None,
            ) -> list[ConvergenceRecord]:
    """Classical EGO: per-iteration ML length-scale, one EI point per step.

    ``budget`` counts total objective evaluations including the initial
    design, so ``budget == doe_init.n`` runs no iterations.
    """
    if budget < doe_init.n:
        raise ValueError("budget must cover the initial design")
    rec = _Recorder(config.run_id, on_record)
    rec.add_initial(doe_init)
    doe = doe_init
    while rec.count < budget:
        theta = estimate_theta_ml(doe, config.ml_theta_bounds)
        model = fit(doe, theta)
        problem = AcquisitionProblem.from_model(model, config.domain)
        x, _ = maximize_ei(problem, config.ei_search_budget, rng)
        y = f(x)
        rec.add(x, y, "ml-ego")
        doe = doe.append(x, y)
    return rec.records


def run_greedy_sweep(f: Callable[[np.ndarray], float],
                     doe_init: DesignOfExperiments,
                     theta_grid: Sequence[float], n_iterations: int,
                     config: LoopConfig, rng: np.random.Generator,
                     on_record: Callable[[ConvergenceRecord], None] | None = None,
                     ) -> tuple[list[ConvergenceRecord], list[SweepTrace]]:
    """Oracle sweep: probe f at every grid length-scale's EI maximizer.

    Each iteration adds the probe with the lowest objective value to the
    design (never re-adding an existing point, unlike a literal
    replace-the-worst loop, which would duplicate a design point when no
    probe improves on it).  Only the added point enters the convergence
    record stream; the full per-length-scale probe data is returned as one
    :class:`SweepTrace` per iteration.
    """
    theta_grid = np.asarray(theta_grid, dtype=float).reshape(-1)
    if theta_grid.size == 0:
        raise ValueError("theta_grid must be nonempty")
    if np.any(np.diff(theta_grid) < 0):
        raise ValueError("theta_grid must be ascending")
    rec = _Recorder(config.run_id, on_record)
    rec.add_initial(doe_init)
    doe = doe_init
    traces: list[SweepTrace] = []
    for _ in range(n_iterations):
        candidates = np.empty((theta_grid.size, doe.dim))
        f_values = np.empty(theta_grid.size)
        for i, theta in enumerate(theta_grid):
            model = fit(doe, float(theta))
            problem = AcquisitionProblem.from_model(model, config.domain)
            x, _ = maximize_ei(problem, config.ei_search_budget, rng)
            candidates[i] = x
            f_values[i] = f(x)
        traces.append(SweepTrace(theta_grid.copy(), candidates, f_values))
        j = int(np.argmin(f_values))
        rec.add(candidates[j], f_values[j], "selected")
        doe = doe.append(candidates[j], f_values[j])
    return rec.records, traces


def run_ensemble_ego(f: Callable[[np.ndarray], float],
                     doe_init: DesignOfExperiments, t_max: int,
                     config: LoopConfig, rng: np.random.Generator, q: int = 5,
                     max_evaluations: int | None = None,
                     on_record: Callable[[ConvergenceRecord], None] | None = None,
                     ) -> list[ConvergenceRecord]:
    """EGO driven by a small ensemble of fixed-length-scale kriging models.

    Per iteration: draw ``q`` fresh length-scales (no cross-iteration
    adaptation), collect each model's EI maximizer, select the proposals
    outside the exclusion balls of the current radius (maximin fallback if
    none), evaluate them, densify around the length-scale whose proposal
    scored best (ties favor the smallest length-scale), evaluate the two
    densified proposals, and append everything to the design.

    The exclusion threshold iteration count is 70% of ``t_max`` (rounded
    up).  ``max_evaluations``, when given, truncates the run cleanly after
    the evaluation that reaches it.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if q < 2:
        raise ValueError("q must be >= 2")
    schedule = RadiusSchedule(
        r1=initial_radius(doe_init),
        t_threshold=math.ceil(0.7 * t_max),
        t_max=t_max,
    )
    dedup_tol = 1e-8 * float(np.max(config.domain.width))
    rec = _Recorder(config.run_id, on_record)
    rec.add_initial(doe_init)
    doe = doe_init

    def exhausted() -> bool:
        return max_evaluations is not None and rec.count >= max_evaluations

    for t in range(1, t_max + 1):
        if exhausted():
            break
        r_t = radius(t, schedule)
        thetas = sample_lengthscales(q, rng, config.lengthscale_log_range)
        streams = rng.spawn(q + 2)

        candidates = np.empty((q, doe.dim))
        for i in range(q):
            model = fit(doe, float(thetas[i]))
            problem = AcquisitionProblem.from_model(model, config.domain)
            candidates[i], _ = maximize_ei(problem, config.ei_search_budget, streams[i])

        selected_idx, fallback = select_candidates(candidates, doe.X, r_t, dedup_tol)
        tag = "fallback" if fallback else "selected"
        y_selected = []
        for i in selected_idx:
            y_i = f(candidates[i])
            rec.add(candidates[i], y_i, tag)
            y_selected.append(y_i)
            if exhausted():
                return rec.records

        # argmin returns the first minimum; selected_idx is ascending, so
        # ties go to the smallest length-scale.
        star_index = selected_idx[int(np.argmin(y_selected))]
        theta_lo, theta_hi = densify_lengthscales(thetas, star_index)

        base = doe
        if config.densify_on_updated_doe:
            base = doe.append(candidates[selected_idx], y_selected)
        new_points = np.empty((2, doe.dim))
        y_new = []
        for k, theta_new in enumerate((theta_lo, theta_hi)):
            model = fit(base, theta_new)
            problem = AcquisitionProblem.from_model(model, config.domain)
            new_points[k], _ = maximize_ei(problem, config.ei_search_budget, streams[q + k])
            y_k = f(new_points[k])
            rec.add(new_points[k], y_k, "densified")
            y_new.append(y_k)
            if exhausted():
                return rec.records

        doe = doe.append(
            np.vstack([candidates[selected_idx], new_points]),
            np.concatenate([y_selected, y_new]),
        )
    return rec.records

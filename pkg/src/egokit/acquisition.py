"""Expected Improvement and its global maximization over a box domain.

``expected_improvement`` is a pure function of immutable inputs, so
concurrent evaluation is safe.  ``maximize_ei`` is deterministic for a given
generator seed; its multistart refinements are mutually independent and could
be evaluated concurrently without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .design import BoxDomain, lhs
from .kriging import KrigingModel, predict

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: s below ZERO_SD_FRACTION * max(sigma_hat, 1) triggers the analytic
#: zero-variance limit EI = max(f_min - mean, 0).
ZERO_SD_FRACTION = 1e-12


@dataclass(frozen=True)
class AcquisitionProblem:
    """EI maximization instance: a fitted model, the incumbent, the box."""

    model: KrigingModel
    f_min: float
    domain: BoxDomain

    def __post_init__(self):
        if self.domain.dim != self.model.doe.dim:
            raise ValueError("domain dimension does not match the design")
        observed = float(np.min(self.model.doe.y))
        if not math.isclose(self.f_min, observed, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"f_min={self.f_min} is not the best observed response {observed}")

    @classmethod
    def from_model(cls, model: KrigingModel, domain: BoxDomain) -> "AcquisitionProblem":
        return cls(model=model, f_min=float(np.min(model.doe.y)), domain=domain)


def _phi(u: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * u * u)


def ei_value(mean, sd, f_min, sd_threshold: float = 0.0):
    """Closed-form EI of a N(mean, sd^2) prediction against incumbent f_min.

    EI = (f_min - mean) Phi(u) + sd phi(u) with u = (f_min - mean)/sd; a
    standard deviation at or below ``sd_threshold`` takes the analytic
    zero-variance limit max(f_min - mean, 0) instead of dividing by it.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    improvement = f_min - mean
    degenerate = sd <= sd_threshold
    s_safe = np.where(degenerate, 1.0, sd)
    # subnormal sd saturates u to +/-inf, for which Phi and phi take their
    # correct limits; silence the benign overflow
    with np.errstate(over="ignore"):
        u = improvement / s_safe
        ei = improvement * ndtr(u) + s_safe * _phi(u)
    ei = np.where(degenerate, np.maximum(improvement, 0.0), ei)
    ei = np.maximum(ei, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def expected_improvement(problem: AcquisitionProblem, x):
    """EI at ``x`` (a point or an (m, d) batch); always nonnegative."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    mean, var = predict(problem.model, np.atleast_2d(x))
    threshold = ZERO_SD_FRACTION * max(math.sqrt(problem.model.sigma2_hat), 1.0)
    ei = ei_value(mean, np.sqrt(var), problem.f_min, sd_threshold=threshold)
    if single:
        return float(ei[0])
    return ei


def maximize_ei(problem: AcquisitionProblem, search_budget: int | None = None,
                rng: np.random.Generator | None = None) -> tuple[np.ndarray, float]:
    """Maximize EI over the domain by seeded multistart pattern search.

    Starts are a fresh Latin hypercube of 20*d points plus a perturbed copy
    of the best design point; each start is refined by bound-constrained
    compass search down to steps of 1e-6 times the domain width.  The total
    number of EI evaluations is capped by ``search_budget`` (default
    2000*d).  Ties keep the first maximizer found, so the result is
    deterministic per seed.  If EI is identically zero the best sampled
    start is returned with value 0.
    """
    if rng is None:
        rng = np.random.default_rng()
    domain = problem.domain
    d = domain.dim
    budget = 2000 * d if search_budget is None else int(search_budget)
    if budget < 1:
        raise ValueError("search_budget must be >= 1")

    n_starts = 20 * d
    starts = lhs(n_starts, domain, rng)
    incumbent = problem.model.doe.X[int(np.argmin(problem.model.doe.y))]
    perturbed = domain.clip(incumbent + rng.uniform(-1.0, 1.0, size=d) * 0.01 * domain.width)
    starts = np.vstack([starts, perturbed])
    if len(starts) > budget:
        starts = starts[:budget]

    ei0 = np.atleast_1d(expected_improvement(problem, starts))
    used = len(starts)
    order = np.argsort(-ei0, kind="stable")

    best_x = starts[order[0]].copy()
    best_ei = float(ei0[order[0]])
    step_tol = 1e-6 * domain.width
    for idx in order:
        if used + 2 * d > budget:
            break
        x, val, used = _compass_search(problem, starts[idx], float(ei0[idx]),
                                       step_tol, budget, used)
        if val > best_ei:
            best_x, best_ei = x, val
    return best_x, best_ei


def _compass_search(problem: AcquisitionProblem, x0: np.ndarray, f0: float,
                    step_tol: np.ndarray, budget: int, used: int):
    """Coordinate pattern search; halves the step when no move improves."""
    domain = problem.domain
    d = domain.dim
    x = np.asarray(x0, dtype=float).copy()
    best = f0
    step = 0.1 * domain.width.copy()
    while np.any(step > step_tol) and used < budget:
        moves = np.repeat(x[None, :], 2 * d, axis=0)
        moves[np.arange(d), np.arange(d)] += step
        moves[d + np.arange(d), np.arange(d)] -= step
        np.clip(moves, domain.lower, domain.upper, out=moves)
        take = min(len(moves), budget - used)
        moves = moves[:take]
        vals = np.atleast_1d(expected_improvement(problem, moves))
        used += take
        j = int(np.argmax(vals))
        if vals[j] > best:
            x = moves[j]
            best = float(vals[j])
        else:
            step *= 0.5
    return x, best, used

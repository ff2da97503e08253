"""Search domains, space-filling designs, and shifted benchmark functions.

Everything here is a pure function of its inputs; random routines take an
explicit ``numpy.random.Generator`` so callers control the stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BENCHMARK_NAMES = ("sphere", "ackley", "rastrigin")

#: Location of the global minimum in every coordinate, for all benchmarks.
OPTIMUM_OFFSET = 2.5


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with finite per-coordinate bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("domain bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("domain requires lower < upper in every coordinate")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    @classmethod
    def cube(cls, lower: float, upper: float, dim: int) -> "BoxDomain":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))


def lhs(n: int, domain: BoxDomain, rng: np.random.Generator,
        midpoint: bool = False) -> np.ndarray:
    """Latin hypercube sample of ``n`` points in ``domain``.

    Each coordinate is split into ``n`` equal strata and every stratum
    receives exactly one point.  Points are jittered uniformly within their
    stratum unless ``midpoint`` is set, in which case stratum centers are
    used.  Deterministic for a given generator state.

    Returns an (n, d) array strictly inside the domain.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = domain.dim
    if midpoint:
        offsets = np.full((n, d), 0.5)
    else:
        offsets = rng.random((n, d))
        # rng.random lives in [0, 1); 0.0 would land exactly on a stratum
        # boundary (and possibly the domain edge), so bump it to the center.
        offsets[offsets == 0.0] = 0.5
    unit = np.empty((n, d))
    for j in range(d):
        unit[:, j] = (rng.permutation(n) + offsets[:, j]) / n
    return domain.lower + unit * domain.width


def sample_lengthscales(q: int, rng: np.random.Generator,
                        log_range: tuple[float, float] = (-2.0, 1.0)) -> np.ndarray:
    """Draw ``q`` kernel length-scales, stratified on a log10 scale.

    The log10 interval ``log_range`` is split into ``q`` equal strata, one
    value is drawn uniformly inside each, and the result is returned in
    ascending order (strata are disjoint, so sorting preserves the
    one-per-stratum property).
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    lo, hi = float(log_range[0]), float(log_range[1])
    if not lo < hi:
        raise ValueError("log_range must be increasing")
    u = rng.random(q)
    u[u == 0.0] = 0.5
    exponents = lo + (np.arange(q) + u) * (hi - lo) / q
    return np.sort(10.0 ** exponents)


def min_distance(x: np.ndarray, X: np.ndarray) -> float:
    """Euclidean distance from ``x`` to its nearest row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("X must contain at least one point")
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(np.min(np.linalg.norm(X - x, axis=1)))


@dataclass(frozen=True)
class BenchmarkFunction:
    """Shifted benchmark objective with its global minimum at ``offset``.

    All three functions are nonnegative and vanish exactly at the point
    whose coordinates all equal ``offset``.
    """

    name: str
    dimension: int
    offset: float = OPTIMUM_OFFSET

    def __post_init__(self):
        if self.name not in BENCHMARK_NAMES:
            raise ValueError(f"unknown benchmark '{self.name}'; choose from {BENCHMARK_NAMES}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    def __call__(self, x) -> float:
        return evaluate_benchmark(self, x)

    @property
    def optimum(self) -> np.ndarray:
        return np.full(self.dimension, self.offset)


def make_benchmark(name: str, dimension: int, offset: float = OPTIMUM_OFFSET) -> BenchmarkFunction:
    return BenchmarkFunction(name=name, dimension=dimension, offset=offset)


def _sphere(z: np.ndarray) -> float:
    return float(np.sum(z * z))


def _ackley(z: np.ndarray) -> float:
    d = z.size
    a, b, c = 20.0, 0.2, 2.0 * np.pi
    return float(
        -a * np.exp(-b * np.sqrt(np.sum(z * z) / d))
        - np.exp(np.sum(np.cos(c * z)) / d)
        + a
        + np.e
    )


def _rastrigin(z: np.ndarray) -> float:
    return float(10.0 * z.size + np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z)))


_BENCHMARKS = {"sphere": _sphere, "ackley": _ackley, "rastrigin": _rastrigin}


def evaluate_benchmark(fn: BenchmarkFunction, x) -> float:
    """Evaluate ``fn`` at a single point ``x`` of matching dimension."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != fn.dimension:
        raise ValueError(f"point has dimension {x.size}, expected {fn.dimension}")
    return _BENCHMARKS[fn.name](x - fn.offset)

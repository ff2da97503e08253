"""Isotropic Matern 5/2 kriging with a constant trend.

The trend and process variance have closed forms once the length-scale is
fixed:

    mu_hat    = 1' Rinv y / 1' Rinv 1
    sigma2hat = (y - mu_hat 1)' Rinv (y - mu_hat 1) / n

where R is the unit-variance correlation matrix of the design.  R is
regularized with a small diagonal jitter before Cholesky factorization, and
the jitter escalates tenfold on failure up to ``MAX_JITTER``; all quantities
(including the concentrated log-likelihood) are defined on the regularized
matrix.

A fitted :class:`KrigingModel` is immutable and safe to share across
concurrent readers.  Fitting itself is single-threaded per model; independent
fits may run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import cdist

_SQRT5 = math.sqrt(5.0)

#: Base diagonal jitter is BASE_JITTER_PER_POINT * n.
BASE_JITTER_PER_POINT = 1e-10
#: Jitter escalation ceiling; factorization failure beyond this is an error.
MAX_JITTER = 1e-6


class IllConditionedModelError(RuntimeError):
    """Raised when the regularized correlation matrix cannot be factorized."""

    def __init__(self, theta: float, n: int, jitter: float, detail: str = ""):
        self.theta = float(theta)
        self.n = int(n)
        self.jitter = float(jitter)
        msg = (f"Cholesky factorization failed for theta={theta:g} with n={n} "
               f"design points (last jitter tried: {jitter:g})")
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class Kernel:
    """Isotropic Matern 5/2 kernel parameters.

    ``theta`` is the length-scale in design-space units; ``sigma2`` the
    process variance in squared response units.
    """

    theta: float
    sigma2: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


def matern52(r, kernel: Kernel):
    """Matern 5/2 covariance at distance ``r`` (scalar or array).

    k(r) = sigma2 * (1 + sqrt5 r/theta + 5 r^2 / (3 theta^2)) exp(-sqrt5 r/theta)
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance r must be nonnegative")
    h = _SQRT5 * r / kernel.theta
    k = kernel.sigma2 * (1.0 + h + h * h / 3.0) * np.exp(-h)
    if k.ndim == 0:
        return float(k)
    return k


def _unit_matern52(r: np.ndarray, theta: float) -> np.ndarray:
    # matern52 with sigma2 = 1, no input validation (hot path)
    h = (_SQRT5 / theta) * r
    return (1.0 + h + h * h / 3.0) * np.exp(-h)


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return cdist(X, X)


def correlation_matrix(X: np.ndarray, theta: float) -> np.ndarray:
    """Unit-variance Matern 5/2 correlation matrix of the design rows."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    return _unit_matern52(pairwise_distances(X), theta)


@dataclass(frozen=True)
class DesignOfExperiments:
    """Evaluated points ``X`` (n x d) with their responses ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if y.size < 1:
            raise ValueError("a design needs at least one point")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def append(self, X_new, y_new) -> "DesignOfExperiments":
        """New design with extra points appended (self is unchanged)."""
        X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
        y_new = np.atleast_1d(np.asarray(y_new, dtype=float))
        return DesignOfExperiments(np.vstack([self.X, X_new]),
                                   np.concatenate([self.y, y_new]))


@dataclass(frozen=True)
class KrigingModel:
    """Immutable fitted surrogate.

    ``sigma2_hat`` may be exactly zero for a constant response or a single
    observation (the degenerate zero-variance limit), which is why the model
    carries theta and sigma2_hat directly instead of a strictly-positive
    :class:`Kernel`.  ``lower_factor`` is the Cholesky factor L of
    R(theta) + jitter*I and ``alpha`` the precomputed solve of
    (R + jitter*I)^-1 (y - mu_hat 1).  ``ones_white`` (= L^-1 1) and
    ``ones_quad`` (= 1' Rinv 1) are cached for prediction.
    """

    doe: DesignOfExperiments
    theta: float
    mu_hat: float
    sigma2_hat: float
    lower_factor: np.ndarray
    alpha: np.ndarray
    jitter: float
    ones_white: np.ndarray
    ones_quad: float


def _jitter_ladder(n: int):
    jit = BASE_JITTER_PER_POINT * n
    while jit < MAX_JITTER:
        yield jit
        jit *= 10.0
    yield MAX_JITTER


def _factorize(distances: np.ndarray, theta: float) -> tuple[np.ndarray, float]:
    """Cholesky factor of R(theta) + jitter*I with jitter escalation."""
    n = distances.shape[0]
    R = _unit_matern52(distances, theta)
    last = 0.0
    for jit in _jitter_ladder(n):
        last = jit
        try:
            L = np.linalg.cholesky(R + jit * np.eye(n))
            return L, jit
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedModelError(theta, n, last, "matrix not positive definite")


def _profile(distances: np.ndarray, y: np.ndarray, theta: float):
    """Factorize and evaluate the closed-form trend and process variance.

    Returns (L, jitter, mu_hat, sigma2_hat, resid_white, ones_white) where
    resid_white = L^-1 (y - mu_hat 1).
    """
    n = y.size
    L, jit = _factorize(distances, theta)
    y_white = solve_triangular(L, y, lower=True, check_finite=False)
    ones_white = solve_triangular(L, np.ones(n), lower=True, check_finite=False)
    ones_quad = float(ones_white @ ones_white)
    mu_hat = float(ones_white @ y_white) / ones_quad
    resid_white = y_white - mu_hat * ones_white
    sigma2_hat = float(resid_white @ resid_white) / n
    return L, jit, mu_hat, sigma2_hat, resid_white, ones_white


def fit(doe: DesignOfExperiments, theta: float) -> KrigingModel:
    """Fit a kriging model with fixed length-scale ``theta``.

    ``sigma2_hat`` is zero for a constant response (or n = 1); downstream
    consumers treat that as the zero-variance limit.

    Raises :class:`IllConditionedModelError` if factorization fails after
    jitter escalation.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    D = pairwise_distances(doe.X)
    L, jit, mu_hat, sigma2_hat, resid_white, ones_white = _profile(D, doe.y, theta)
    alpha = solve_triangular(L.T, resid_white, lower=False, check_finite=False)
    return KrigingModel(
        doe=doe,
        theta=float(theta),
        mu_hat=mu_hat,
        sigma2_hat=sigma2_hat,
        lower_factor=L,
        alpha=alpha,
        jitter=jit,
        ones_white=ones_white,
        ones_quad=float(ones_white @ ones_white),
    )


def predict(model: KrigingModel, x):
    """Predictive mean and variance at ``x`` (a point or an (m, d) batch).

    The variance convention includes the estimated-trend correction:

        s^2(x) = sigma2_hat * (1 - r' Rinv r + (1 - 1' Rinv r)^2 / (1' Rinv 1))

    with Rinv the inverse of the regularized correlation matrix.  Variances
    are clamped at zero.  At design points the mean reproduces the
    observation and the variance vanishes (up to the jitter).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    r = _unit_matern52(cdist(pts, model.doe.X), model.theta)  # (m, n)
    mean = model.mu_hat + r @ model.alpha
    v = solve_triangular(model.lower_factor, r.T, lower=True, check_finite=False)  # (n, m)
    quad = np.einsum("ij,ij->j", v, v)
    trend_dev = 1.0 - model.ones_white @ v
    var = model.sigma2_hat * (1.0 - quad + trend_dev * trend_dev / model.ones_quad)
    np.maximum(var, 0.0, out=var)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def concentrated_log_likelihood(doe: DesignOfExperiments, theta: float) -> float:
    """Profile Gaussian log-likelihood of ``theta`` (constants dropped).

    Equals -(n/2) log sigma2_hat(theta) - (1/2) log det R(theta), evaluated
    on the regularized correlation matrix.  sigma2_hat is floored at the
    smallest positive float so the value stays finite for constant responses.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    D = pairwise_distances(doe.X)
    return _concentrated_from_distances(D, doe.y, theta)


def _concentrated_from_distances(D: np.ndarray, y: np.ndarray, theta: float) -> float:
    n = y.size
    L, _, _, sigma2_hat, _, _ = _profile(D, y, theta)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    # Floor sigma2 at roundoff level relative to the response scale so a
    # constant response yields the same variance term for every theta
    # (leaving only the log-det), instead of comparing amplified noise.
    floor = max(np.finfo(float).tiny, 1e-24 * float(np.mean(y * y)))
    sigma2_hat = max(sigma2_hat, floor)
    return -0.5 * n * math.log(sigma2_hat) - 0.5 * log_det


def estimate_theta_ml(doe: DesignOfExperiments,
                      bounds: tuple[float, float] = (0.01, 10.0),
                      n_starts: int = 10) -> float:
    """Maximum-likelihood length-scale by multistart bounded 1-d search.

    ``n_starts`` log-spaced candidates seed the search; every local maximum
    of the start grid is refined with a bounded derivative-free search (in
    log10 space) to a relative resolution of 1e-3.  On likelihood plateaus
    the largest candidate theta wins, which prefers the smoother model.

    Raises :class:`IllConditionedModelError` if every candidate fails to
    factorize.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not (0 < lo < hi):
        raise ValueError("bounds must satisfy 0 < lower < upper")
    D = pairwise_distances(doe.X)
    y = doe.y

    def loglik(theta: float) -> float:
        try:
            return _concentrated_from_distances(D, y, theta)
        except IllConditionedModelError:
            return -np.inf

    starts = np.geomspace(lo, hi, n_starts)
    vals = np.array([loglik(t) for t in starts])
    if not np.any(np.isfinite(vals)):
        raise IllConditionedModelError(hi, y.size, MAX_JITTER,
                                       "every candidate length-scale is ill-conditioned")

    candidates = list(zip(starts, vals))
    xatol = math.log10(1.0 + 1e-3)
    for i in range(n_starts):
        if not np.isfinite(vals[i]):
            continue
        left = vals[i - 1] if i > 0 else -np.inf
        right = vals[i + 1] if i < n_starts - 1 else -np.inf
        if vals[i] < left or vals[i] < right:
            continue  # not a local maximum of the start grid
        a = math.log10(starts[max(i - 1, 0)])
        b = math.log10(starts[min(i + 1, n_starts - 1)])
        if a == b:
            continue
        res = minimize_scalar(lambda t: -max(loglik(10.0 ** t), -1e300),
                              bounds=(a, b), method="bounded",
                              options={"xatol": xatol})
        candidates.append((10.0 ** float(res.x), -float(res.fun)))

    best_val = max(v for _, v in candidates)
    plateau_tol = 1e-9 * max(1.0, abs(best_val))
    return max(t for t, v in candidates if v >= best_val - plateau_tol)

"""Exact Gaussian-process regression with a squared-exponential ARD kernel.

Fitting factors the regularized Gram matrix once (Cholesky) and also
precomputes its inverse so that posterior prediction is a fused
kernel-plus-dot-product pass handled by the selected backend. Hyper-
parameters are chosen by multi-start Latin-hypercube search over the log
marginal likelihood followed by Nelder-Mead refinement in log-space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky
from scipy.optimize import minimize

from . import backend
from .errors import DimensionError, NumericalError, ShapeError

# jitter escalation: multiples of signal_variance tried in order
_JITTER_START = 1e-10
_JITTER_MAX = 1e-4

# hyperparameter search is fitted on at most this many rows; the final
# model is refitted on everything (exact LML at n in the thousands would
# dominate runtime without improving the selection)
_SEARCH_MAX_POINTS = 400


@dataclass(frozen=True)
class KernelSpec:
    """SE-ARD kernel hyperparameters plus observation noise variance."""

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __init__(self, lengthscales, signal_variance, noise_variance):
        lengthscales = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        if np.any(lengthscales <= 0) or signal_variance <= 0:
            raise ShapeError("lengthscales and signal variance must be positive")
        if noise_variance < 0:
            raise ShapeError("noise variance must be non-negative")
        object.__setattr__(self, "lengthscales", lengthscales)
        object.__setattr__(self, "signal_variance", float(signal_variance))
        object.__setattr__(self, "noise_variance", float(noise_variance))

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]


def kernel_eval(spec: KernelSpec, s, s2) -> float:
    """k(s, s') = signal_variance * exp(-0.5 * sum(((s-s')/ls)^2))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    s2 = np.atleast_1d(np.asarray(s2, dtype=float))
    if s.shape != (spec.dim,) or s2.shape != (spec.dim,):
        raise DimensionError(f"kernel inputs must have dimension {spec.dim}")
    r = (s - s2) / spec.lengthscales
    return spec.signal_variance * math.exp(-0.5 * float(r @ r))


@dataclass(frozen=True)
class GpModel:
    """Fitted GP: training set, Cholesky factor, and solved weights.

    The Gram inverse needed for variance prediction is built lazily on
    the first variance query (mean-only users skip the O(n^3) solve).
    """

    kernel: KernelSpec
    train_inputs: np.ndarray
    train_targets: np.ndarray
    factor: np.ndarray
    weights: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def kinv(self) -> np.ndarray:
        cached = getattr(self, "_kinv", None)
        if cached is None:
            cached = np.ascontiguousarray(
                cho_solve((self.factor, True), np.eye(self.n),
                          check_finite=False))
            object.__setattr__(self, "_kinv", cached)
        return cached

    @classmethod
    def prior(cls, spec: KernelSpec) -> "GpModel":
        d = spec.dim
        e = np.empty((0, d))
        return cls(spec, e, np.empty(0), np.empty((0, 0)), np.empty(0), 0.0)


def _as_matrix(inputs) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[:, None]
    if inputs.ndim != 2:
        raise ShapeError("inputs must be a (n, D) matrix")
    return np.ascontiguousarray(inputs)


def gp_fit(inputs, targets, spec: KernelSpec) -> GpModel:
    """Factor K + (noise + jitter) I and solve for the weight vector.

    Jitter starts at 1e-10 * signal_variance and escalates by 10x up to
    1e-4 * signal_variance before giving up with NumericalError.
    """
    x = _as_matrix(inputs)
    y = np.asarray(targets, dtype=float).ravel()
    n = x.shape[0]
    if n < 1:
        raise ShapeError("gp_fit needs at least one row")
    if y.shape != (n,):
        raise ShapeError(f"targets must have length {n}, got {y.shape}")
    if x.shape[1] != spec.dim:
        raise DimensionError(
            f"inputs have dimension {x.shape[1]}, kernel expects {spec.dim}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ShapeError("inputs and targets must be finite")

    gram = backend.se_kernel(x, x, spec.lengthscales, spec.signal_variance)
    mult = _JITTER_START
    while True:
        jitter = mult * spec.signal_variance
        try:
            reg = gram + (spec.noise_variance + jitter) * np.eye(n)
            factor = cholesky(reg, lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            if mult >= _JITTER_MAX:
                raise NumericalError(
                    f"Cholesky failed at maximum jitter {jitter:g} (n={n})")
            mult *= 10.0
    alpha = cho_solve((factor, True), y, check_finite=False)
    return GpModel(spec, x, y, factor, np.ascontiguousarray(alpha), jitter)


def gp_predict(model: GpModel, query):
    """Posterior (mean, variance) at one query point; prior when n = 0."""
    q = np.atleast_1d(np.asarray(query, dtype=float))
    if q.shape != (model.kernel.dim,):
        raise DimensionError(
            f"query has shape {q.shape}, expected ({model.kernel.dim},)")
    mean, var = gp_predict_batch(model, q[None, :])
    return float(mean[0]), float(var[0])


def gp_predict_batch(model: GpModel, queries):
    """Posterior mean and latent variance for a (m, D) batch of queries."""
    q = _as_matrix(queries)
    if q.shape[1] != model.kernel.dim:
        raise DimensionError(
            f"queries have dimension {q.shape[1]}, expected {model.kernel.dim}")
    if model.n == 0:
        m = q.shape[0]
        return np.zeros(m), np.full(m, model.kernel.signal_variance)
    return backend.gp_mean_var(q, model.train_inputs,
                               model.kernel.lengthscales,
                               model.kernel.signal_variance,
                               model.weights, model.kinv)


def gp_predict_mean(model: GpModel, queries) -> np.ndarray:
    """Posterior mean only; skips the variance quadratic form entirely."""
    q = _as_matrix(queries)
    if q.shape[1] != model.kernel.dim:
        raise DimensionError(
            f"queries have dimension {q.shape[1]}, expected {model.kernel.dim}")
    if model.n == 0:
        return np.zeros(q.shape[0])
    kc = backend.se_kernel(q, model.train_inputs, model.kernel.lengthscales,
                           model.kernel.signal_variance)
    return kc @ model.weights


def log_marginal_likelihood(model: GpModel) -> float:
    """-0.5 y'a - sum(log diag L) - n/2 log(2 pi) for the fitted system."""
    n = model.n
    if n == 0:
        return 0.0
    fit = -0.5 * float(model.train_targets @ model.weights)
    logdet = float(np.sum(np.log(np.diag(model.factor))))
    return fit - logdet - 0.5 * n * math.log(2.0 * math.pi)


def _latin_hypercube(n_points: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Stratified samples in [0,1]^dim, one point per stratum per axis."""
    u = (rng.random((n_points, dim)) + np.arange(n_points)[:, None]) / n_points
    for d in range(dim):
        u[:, d] = u[rng.permutation(n_points), d]
    return u


def _degenerate_spec(x: np.ndarray) -> KernelSpec:
    spans = np.ptp(x, axis=0)
    spans[spans == 0] = 1.0
    return KernelSpec(spans, 1.0, 1e-6)


def optimize_hyperparams(inputs, targets, search_budget: int = 16,
                         rng: np.random.Generator | None = None,
                         refine_evals: int = 200) -> KernelSpec:
    """Select the KernelSpec with the highest log marginal likelihood.

    Log-space Latin-hypercube starts over lengthscales in [1e-2, 1e2] x
    input range, signal variance in [1e-2, 1e2] x target variance, and
    noise in [1e-6, 1] x target variance, then Nelder-Mead refinement
    from the best start. Deterministic given the rng. Constant targets
    short-circuit to a fixed tiny-noise spec.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    x = _as_matrix(inputs)
    y = np.asarray(targets, dtype=float).ravel()
    n, d = x.shape
    if n < 3:
        raise ShapeError("hyperparameter search needs at least 3 rows")
    y_var = float(np.var(y))
    if y_var == 0.0:
        # DegenerateDataError path: nothing to fit, return a floor spec
        return _degenerate_spec(x)

    if n > _SEARCH_MAX_POINTS:
        idx = rng.choice(n, size=_SEARCH_MAX_POINTS, replace=False)
        idx.sort()
        xs, ys = x[idx], y[idx]
    else:
        xs, ys = x, y

    spans = np.ptp(x, axis=0)
    spans[spans == 0] = 1.0
    lo = np.log(np.concatenate([1e-2 * spans, [1e-2 * y_var, 1e-6 * y_var]]))
    hi = np.log(np.concatenate([1e2 * spans, [1e2 * y_var, 1.0 * y_var]]))

    def spec_of(theta: np.ndarray) -> KernelSpec:
        p = np.exp(np.clip(theta, lo - 2.0, hi + 2.0))
        return KernelSpec(p[:d], p[d], p[d + 1])

    def neg_lml(theta: np.ndarray) -> float:
        try:
            model = gp_fit(xs, ys, spec_of(theta))
            return -log_marginal_likelihood(model)
        except NumericalError:
            return np.inf

    starts = lo + _latin_hypercube(search_budget, d + 2, rng) * (hi - lo)
    scores = np.array([neg_lml(t) for t in starts])
    best_i = int(np.argmin(scores))
    best_theta, best_score = starts[best_i], scores[best_i]
    if not np.isfinite(best_score):
        return _degenerate_spec(x)

    res = minimize(neg_lml, best_theta, method="Nelder-Mead",
                   options={"maxfev": refine_evals, "xatol": 1e-3,
                            "fatol": 1e-6, "adaptive": True})
    if np.isfinite(res.fun) and res.fun < best_score:
        best_theta = res.x
    return spec_of(best_theta)

"""Per-node exogenous-noise recovery and density estimation.

Each node gets a two-part regression of its value on (parent values,
actions): a GP for the conditional mean and a second GP on log squared
residuals for the conditional scale. Standardizing an observation by
those two curves recovers the node's exogenous value up to an affine
map whenever the mechanism decomposes as f_a(z) + f_b(z) * f_c(u); the
recovered values are then density-fitted with a Gaussian mixture and
decoded back through a GP over (z, a, u).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateDataError, ShapeError
from .gp import (GpModel, KernelSpec, gp_fit, gp_predict_batch,
                 gp_predict_mean, optimize_hyperparams)
from .scm import CausalGraph, ObservationSet

# epsilon inside log(r^2 + eps) relative to target variance
_LOG_EPS_REL = 1e-8
# residual-scale floor relative to target standard deviation
_SCALE_FLOOR_REL = 1e-3
# mixture variance floor relative to sample variance
_VAR_FLOOR_REL = 1e-6
_EM_RESTARTS = 8
_EM_MAX_ITER = 200


@dataclass(frozen=True)
class MeanScaleModel:
    """Conditional mean and scale of a node value given (z, a) inputs."""

    mean_gp: GpModel
    scale_gp: GpModel
    scale_floor: float
    # multiplies the scale curve so mean predicted variance matches the
    # mean squared residual; regression on log r^2 alone underestimates
    # the scale by a distribution-dependent constant
    calibration: float
    degenerate: bool = False

    def predict_mean(self, inputs) -> np.ndarray:
        return gp_predict_mean(self.mean_gp, inputs)

    def predict_scale(self, inputs) -> np.ndarray:
        if self.degenerate:
            n = np.atleast_2d(np.asarray(inputs)).shape[0]
            return np.full(n, self.scale_floor)
        log_r2 = gp_predict_mean(self.scale_gp, inputs)
        scale = self.calibration * np.exp(0.5 * log_r2)
        return np.maximum(scale, self.scale_floor)


def fit_mean_scale(inputs, targets, rng: np.random.Generator | None = None,
                   mean_spec: KernelSpec | None = None,
                   scale_spec: KernelSpec | None = None,
                   search_budget: int = 16) -> MeanScaleModel:
    """Fit the heteroscedastic regression used by the encoder.

    Hyperparameters are optimized unless explicit specs are supplied
    (the optimization loop caches them between refits). Constant
    targets take the degenerate path: the scale is pinned to the floor
    and the encoder maps every observation to zero.
    """
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(targets, dtype=float).ravel()
    n = x.shape[0]
    if n < 3:
        raise ShapeError("mean/scale fit needs at least 3 rows")
    if y.shape != (n,):
        raise ShapeError("inputs and targets disagree on length")
    if rng is None:
        rng = np.random.default_rng(0)

    y_var = float(np.var(y))
    if y_var == 0.0:
        # DegenerateDataError path: no variation to standardize
        spec = mean_spec or KernelSpec(np.ones(x.shape[1]), 1.0, 1e-6)
        trivial = gp_fit(x, y, spec)
        return MeanScaleModel(trivial, trivial, scale_floor=1e-12,
                              calibration=1.0, degenerate=True)

    if mean_spec is None:
        mean_spec = optimize_hyperparams(x, y, search_budget, rng=rng)
    mean_gp = gp_fit(x, y, mean_spec)

    resid = y - gp_predict_mean(mean_gp, x)
    log_r2 = np.log(resid ** 2 + _LOG_EPS_REL * y_var)
    if scale_spec is None:
        scale_spec = optimize_hyperparams(x, log_r2, search_budget, rng=rng)
    scale_gp = gp_fit(x, log_r2, scale_spec)

    raw_scale2 = np.exp(gp_predict_mean(scale_gp, x))
    calibration = float(np.sqrt(np.mean(resid ** 2) / np.mean(raw_scale2)))
    floor = _SCALE_FLOOR_REL * float(np.std(y))
    return MeanScaleModel(mean_gp, scale_gp, floor, calibration)


def encode(model: MeanScaleModel, inputs, values) -> np.ndarray:
    """Recover exogenous values: (x - mean(z, a)) / max(scale(z, a), floor)."""
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if model.degenerate:
        return np.zeros(v.shape[0])
    mean = model.predict_mean(x)
    scale = model.predict_scale(x)
    return (v - mean) / scale


def recover_noise(obs: ObservationSet, graph: CausalGraph,
                  rng: np.random.Generator | None = None,
                  search_budget: int = 16) -> list[np.ndarray]:
    """Fit each node's mean/scale model and encode all its observations."""
    if obs.rounds < 3:
        raise ShapeError("noise recovery needs at least 3 rounds")
    if rng is None:
        rng = np.random.default_rng(0)
    recovered = []
    for i in range(graph.node_count):
        za = obs.node_inputs(i)
        x = obs.node_values(i)
        model = fit_mean_scale(za, x, rng=rng, search_budget=search_budget)
        recovered.append(encode(model, za, x))
    return recovered


@dataclass(frozen=True)
class GaussianMixture:
    """1-D Gaussian mixture: weights, means, variances per component."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    # per-iteration EM log-likelihood of the winning restart
    loglik_trace: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ShapeError("mixture weights must sum to 1")
        if np.any(np.asarray(self.variances) <= 0):
            raise ShapeError("mixture variances must be positive")

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def mean(self) -> float:
        return float(self.weights @ self.means)

    def variance(self) -> float:
        m = self.mean()
        second = self.weights @ (self.variances + self.means ** 2)
        return float(second - m * m)


def _kmeanspp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(x.shape[0])]]
    for _ in range(k - 1):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total == 0:
            centers.append(x[rng.integers(x.shape[0])])
        else:
            centers.append(x[rng.choice(x.shape[0], p=d2 / total)])
    return np.array(centers)


def _em_once(x: np.ndarray, k: int, var_floor: float,
             rng: np.random.Generator):
    n = x.shape[0]
    means = _kmeanspp_centers(x, k, rng)
    assign = np.argmin((x[:, None] - means[None, :]) ** 2, axis=1)
    weights = np.full(k, 1.0 / k)
    variances = np.full(k, max(float(np.var(x)), var_floor))
    for c in range(k):
        sel = x[assign == c]
        if sel.size:
            weights[c] = sel.size / n
            means[c] = sel.mean()
            variances[c] = max(float(sel.var()), var_floor)
    weights /= weights.sum()

    trace = []
    prev = -np.inf
    for _ in range(_EM_MAX_ITER):
        log_comp = (np.log(weights + 1e-300)[None, :]
                    - 0.5 * np.log(2.0 * np.pi * variances)[None, :]
                    - 0.5 * (x[:, None] - means[None, :]) ** 2 / variances[None, :])
        log_norm = logsumexp(log_comp, axis=1)
        ll = float(log_norm.sum())
        if ll < prev:
            # variance flooring can in principle push the likelihood
            # down; reject the step and keep the previous parameters
            weights, means, variances = prev_params
            break
        trace.append(ll)
        if ll - prev < 1e-8 * n:
            prev = ll
            break
        prev = ll
        prev_params = (weights, means, variances)
        resp = np.exp(log_comp - log_norm[:, None])
        nk = resp.sum(axis=0)
        safe = np.maximum(nk, 1e-300)
        weights = nk / n
        weights /= weights.sum()
        means = np.where(nk > 0, resp.T @ x / safe, means)
        new_var = (resp * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / safe
        variances = np.where(nk > 0, np.maximum(new_var, var_floor), variances)
    return (weights, means, variances), prev, tuple(trace)


def fit_gmm(samples, n_components: int, rng: np.random.Generator) -> GaussianMixture:
    """EM fit with k-means++ seeding and 8 restarts; best restart wins.

    All-identical samples return a single spike component at the value.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.shape[0]
    k = int(n_components)
    if k < 1:
        raise ShapeError("need at least one component")
    if n < max(2 * k, 8):
        raise ShapeError(f"need at least {max(2 * k, 8)} samples for K={k}")
    sample_var = float(np.var(x))
    if sample_var == 0.0:
        # DegenerateDataError path: spike at the common value
        return GaussianMixture(np.array([1.0]), np.array([x[0]]),
                               np.array([1e-12]), loglik_trace=())
    var_floor = _VAR_FLOOR_REL * sample_var

    best = None
    for child in rng.spawn(_EM_RESTARTS):
        params, ll, trace = _em_once(x, k, var_floor, child)
        if best is None or ll > best[1]:
            best = (params, ll, trace)
    (w, m, v), _, trace = best
    return GaussianMixture(w, m, v, loglik_trace=trace)


def gmm_sample(mixture: GaussianMixture, rng: np.random.Generator,
               size: int | None = None):
    """Draw from the mixture: component by weight, then a Gaussian."""
    k = rng.choice(mixture.n_components, size=size, p=mixture.weights)
    draw = rng.normal(mixture.means[k], np.sqrt(mixture.variances[k]))
    return float(draw) if size is None else draw


def gmm_logpdf(mixture: GaussianMixture, values):
    """Log density via log-sum-exp over components."""
    v = np.atleast_1d(np.asarray(values, dtype=float))
    log_comp = (np.log(mixture.weights + 1e-300)[None, :]
                - 0.5 * np.log(2.0 * np.pi * mixture.variances)[None, :]
                - 0.5 * (v[:, None] - mixture.means[None, :]) ** 2
                / mixture.variances[None, :])
    out = logsumexp(log_comp, axis=1)
    return float(out[0]) if np.isscalar(values) or np.ndim(values) == 0 else out


def fit_decoder(inputs, noise_values, targets,
                rng: np.random.Generator | None = None,
                spec: KernelSpec | None = None,
                search_budget: int = 16) -> GpModel:
    """GP surrogate of the mechanism over concatenated (z, a, u) inputs."""
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    u = np.asarray(noise_values, dtype=float).ravel()
    y = np.asarray(targets, dtype=float).ravel()
    if not (x.shape[0] == u.shape[0] == y.shape[0]):
        raise ShapeError("inputs, noise values, and targets disagree on length")
    full = np.hstack([x, u[:, None]])
    if spec is None:
        if rng is None:
            rng = np.random.default_rng(0)
        if full.shape[0] >= 3 and np.var(y) > 0:
            spec = optimize_hyperparams(full, y, search_budget, rng=rng)
        else:
            spans = np.ptp(full, axis=0)
            spans[spans == 0] = 1.0
            spec = KernelSpec(spans, max(float(np.var(y)), 1.0), 1e-6)
    return gp_fit(full, y, spec)


@dataclass(frozen=True)
class NodeSurrogate:
    """Everything the acquisition loop needs about one node."""

    mean_scale: MeanScaleModel
    decoder: GpModel
    noise_density: GaussianMixture
    recovered_noise: np.ndarray

    def predict_joint(self, z_rows: np.ndarray, a_rows: np.ndarray,
                      noise_rows: np.ndarray):
        """Posterior (mean, variance) at stacked (z, a, u) rows."""
        q = np.hstack([z_rows, a_rows, noise_rows[:, None]])
        return gp_predict_batch(self.decoder, q)

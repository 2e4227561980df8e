"""The sequential optimization loops: the exogenous-learning algorithm
plus the plain-UCB and additive-noise-network baselines.

All three share the trace schema and the acquisition machinery; a run
is a pure function of (scm, settings) because every random draw comes
from streams spawned off the (algorithm, seed) pair.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import (AcquisitionContext, SurrogateNetwork, constant_beta,
                          draw_context, maximize_acquisition,
                          optimize_acquisition, sqrt_log_beta)
from .errors import ShapeError
from .exo import (GaussianMixture, NodeSurrogate, encode, fit_decoder,
                  fit_gmm, fit_mean_scale)
from .gp import KernelSpec, gp_fit, gp_predict_batch, optimize_hyperparams
from .scm import GroundTruthScm, ObservationSet, append_round, sample_scm

_ALG_IDS = {"excbo": 1, "ucb": 2, "anm": 3}


@dataclass(frozen=True)
class LoopSettings:
    """Knobs of one optimization run; defaults follow the experiment CLI."""

    rounds: int = 60
    n_initial: int = 10
    mc_paths: int = 32
    mixture_components: int = 2
    beta0: float = 2.0
    beta_mode: str = "constant"
    acquisition_budget: int = 256
    propagation_mode: str = "sampled"
    refit_period: int = 5
    search_budget: int = 16
    seed: int = 0
    config_hash: str = ""

    def beta_schedule(self):
        if self.beta_mode == "constant":
            return constant_beta(self.beta0)
        if self.beta_mode == "sqrt_log":
            return sqrt_log_beta(self.beta0)
        raise ShapeError(f"unknown beta mode {self.beta_mode!r}")


@dataclass(frozen=True)
class TraceRow:
    round: int
    action: np.ndarray
    reward: float
    best_so_far: float
    wall_clock: float


@dataclass
class RunTrace:
    algorithm: str
    seed: int
    config_hash: str
    n_initial: int
    rows: list[TraceRow] = field(default_factory=list)

    def rewards(self) -> np.ndarray:
        return np.array([r.reward for r in self.rows])

    def best_so_far(self) -> np.ndarray:
        return np.array([r.best_so_far for r in self.rows])

    def actions(self) -> np.ndarray:
        return np.array([r.action for r in self.rows])


def _streams(algorithm: str, seed: int):
    base = np.random.SeedSequence((0x0EC5, _ALG_IDS[algorithm], int(seed)))
    init, noise, ctx, acq, gmm, hyper = base.spawn(6)
    return {k: np.random.default_rng(v) for k, v in
            [("init", init), ("noise", noise), ("ctx", ctx),
             ("acq", acq), ("gmm", gmm), ("hyper", hyper)]}


class _Recorder:
    """Appends trace rows and tracks the incumbent best observation."""

    def __init__(self, trace: RunTrace):
        self.trace = trace
        self.best = -np.inf
        self.best_action = None
        self._t0 = time.perf_counter()

    def record(self, rnd: int, action: np.ndarray, reward: float):
        if reward > self.best:
            self.best = reward
            self.best_action = action.copy()
        self.trace.rows.append(TraceRow(rnd, action.copy(), float(reward),
                                        float(self.best),
                                        time.perf_counter() - self._t0))


def _observe_initial(scm, settings, rngs, obs, rec):
    for j in range(settings.n_initial):
        action = scm.space.sample(rngs["init"])
        values = sample_scm(scm, action, rngs["noise"])
        append_round(obs, values, action)
        rec.record(j + 1, action, values[scm.graph.reward_node])


def _moment_mixture(values: np.ndarray) -> GaussianMixture:
    """Single-Gaussian stand-in while there are too few recovered values."""
    var = max(float(np.var(values)), 1e-12)
    return GaussianMixture(np.array([1.0]), np.array([float(np.mean(values))]),
                           np.array([var]))


def _fit_node_mixture(values, k, rng):
    n = values.shape[0]
    k_eff = min(int(k), max(1, n // 4))
    if n < max(2 * k_eff, 8):
        return _moment_mixture(values)
    return fit_gmm(values, k_eff, rng)


def excbo_run(scm: GroundTruthScm, settings: LoopSettings) -> RunTrace:
    """Exogenous-distribution-learning loop (Algorithm "excbo").

    Every round refits each node's mean/scale regression, re-encodes all
    recovered noise values, refits the mixtures and decoders, then
    maximizes the propagated UCB under a fresh frozen context.
    Hyperparameters are re-optimized every refit_period rounds.
    """
    rngs = _streams("excbo", settings.seed)
    graph = scm.graph
    trace = RunTrace("excbo", settings.seed, settings.config_hash,
                     settings.n_initial)
    rec = _Recorder(trace)
    obs = ObservationSet(graph)
    _observe_initial(scm, settings, rngs, obs, rec)
    beta = settings.beta_schedule()

    specs = [None] * graph.node_count  # (mean, scale, decoder) kernel cache
    for t in range(1, settings.rounds + 1):
        refit = specs[0] is None or (t - 1) % settings.refit_period == 0
        nodes = []
        for i in range(graph.node_count):
            za = obs.node_inputs(i)
            x = obs.node_values(i)
            mean_spec, scale_spec, dec_spec = specs[i] if not refit and specs[i] \
                else (None, None, None)
            ms = fit_mean_scale(za, x, rng=rngs["hyper"],
                                mean_spec=mean_spec, scale_spec=scale_spec,
                                search_budget=settings.search_budget)
            noise_values = encode(ms, za, x)
            mix = _fit_node_mixture(noise_values, settings.mixture_components,
                                    rngs["gmm"])
            dec = fit_decoder(za, noise_values, x, rng=rngs["hyper"],
                              spec=dec_spec,
                              search_budget=settings.search_budget)
            specs[i] = (ms.mean_gp.kernel, ms.scale_gp.kernel, dec.kernel)
            nodes.append(NodeSurrogate(ms, dec, mix, noise_values))

        net = SurrogateNetwork(graph, tuple(nodes), beta, settings.mc_paths,
                               settings.propagation_mode)
        ctx = draw_context(net, rngs["ctx"])
        action = optimize_acquisition(net, scm.space, ctx, t,
                                      settings.acquisition_budget,
                                      rngs["acq"], incumbent=rec.best_action)
        values = sample_scm(scm, action, rngs["noise"])
        append_round(obs, values, action)
        rec.record(settings.n_initial + t, action,
                   values[graph.reward_node])
    return trace


def baseline_ucb_run(scm: GroundTruthScm, settings: LoopSettings) -> RunTrace:
    """Conventional BO: one GP from the full action vector to the reward."""
    rngs = _streams("ucb", settings.seed)
    graph = scm.graph
    trace = RunTrace("ucb", settings.seed, settings.config_hash,
                     settings.n_initial)
    rec = _Recorder(trace)
    obs = ObservationSet(graph)
    _observe_initial(scm, settings, rngs, obs, rec)
    beta = settings.beta_schedule()

    actions = [row.action for row in trace.rows]
    rewards = [row.reward for row in trace.rows]
    spec = None
    for t in range(1, settings.rounds + 1):
        a_mat = np.array(actions)
        y = np.array(rewards)
        if spec is None or (t - 1) % settings.refit_period == 0:
            spec = optimize_hyperparams(a_mat, y, settings.search_budget,
                                        rng=rngs["hyper"])
        model = gp_fit(a_mat, y, spec)
        bt = beta(t)

        def batch_eval(cands):
            mean, var = gp_predict_batch(model, cands)
            return mean + bt * np.sqrt(var)

        action, _ = maximize_acquisition(batch_eval, scm.space,
                                         settings.acquisition_budget,
                                         rngs["acq"], incumbent=rec.best_action)
        values = sample_scm(scm, action, rngs["noise"])
        append_round(obs, values, action)
        reward = values[graph.reward_node]
        actions.append(action)
        rewards.append(reward)
        rec.record(settings.n_initial + t, action, reward)
    return trace


_STD_NORMAL = GaussianMixture(np.array([1.0]), np.array([0.0]), np.array([1.0]))


@dataclass(frozen=True)
class AnmNodeSurrogate:
    """Additive-unit-Gaussian node model: GP on (z, a) plus u ~ N(0, 1)."""

    decoder: object  # GpModel over (z, a)
    noise_density: GaussianMixture = _STD_NORMAL

    def predict_joint(self, z_rows, a_rows, noise_rows):
        mean, var = gp_predict_batch(self.decoder, np.hstack([z_rows, a_rows]))
        return mean + noise_rows, var


def baseline_anm_network_run(scm: GroundTruthScm,
                             settings: LoopSettings) -> RunTrace:
    """Network baseline that assumes x = f(z, a) + u with u ~ N(0, 1).

    Exactly the propagation/UCB loop of excbo_run but with no encoder,
    no scale model, and no mixture learning; it isolates the value of
    exogenous distribution learning.
    """
    rngs = _streams("anm", settings.seed)
    graph = scm.graph
    trace = RunTrace("anm", settings.seed, settings.config_hash,
                     settings.n_initial)
    rec = _Recorder(trace)
    obs = ObservationSet(graph)
    _observe_initial(scm, settings, rngs, obs, rec)
    beta = settings.beta_schedule()

    specs = [None] * graph.node_count
    for t in range(1, settings.rounds + 1):
        refit = specs[0] is None or (t - 1) % settings.refit_period == 0
        nodes = []
        for i in range(graph.node_count):
            za = obs.node_inputs(i)
            x = obs.node_values(i)
            if refit or specs[i] is None:
                if np.var(x) > 0:
                    specs[i] = optimize_hyperparams(
                        za, x, settings.search_budget, rng=rngs["hyper"])
                else:
                    spans = np.ptp(za, axis=0)
                    spans[spans == 0] = 1.0
                    specs[i] = KernelSpec(spans, 1.0, 1e-6)
            nodes.append(AnmNodeSurrogate(gp_fit(za, x, specs[i])))

        net = SurrogateNetwork(graph, tuple(nodes), beta, settings.mc_paths,
                               settings.propagation_mode)
        ctx = draw_context(net, rngs["ctx"])
        action = optimize_acquisition(net, scm.space, ctx, t,
                                      settings.acquisition_budget,
                                      rngs["acq"], incumbent=rec.best_action)
        values = sample_scm(scm, action, rngs["noise"])
        append_round(obs, values, action)
        rec.record(settings.n_initial + t, action,
                   values[graph.reward_node])
    return trace


ALGORITHMS = {
    "excbo": excbo_run,
    "ucb": baseline_ucb_run,
    "anm": baseline_anm_network_run,
}

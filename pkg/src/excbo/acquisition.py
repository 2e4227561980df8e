"""Monte-Carlo propagation of surrogate networks and UCB acquisition.

A candidate action is pushed through the DAG along S simulated paths
with frozen exogenous draws (common random numbers), the reward node's
posterior mean and spread are averaged over paths, and the acquisition
is mean + beta_t * spread. The optimizer scans uniform candidates and
refines the best few with Nelder-Mead projected onto the bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import ShapeError
from .exo import gmm_sample
from .scm import ActionSpace, CausalGraph, topological_order


@dataclass(frozen=True)
class SurrogateNetwork:
    """Per-node surrogates plus the schedule and sampling settings."""

    graph: CausalGraph
    nodes: tuple
    beta_schedule: Callable[[int], float]
    mc_paths: int = 32
    propagation_mode: str = "sampled"

    def __post_init__(self):
        if len(self.nodes) != self.graph.node_count:
            raise ShapeError("one surrogate per node required")
        if self.propagation_mode not in ("sampled", "mean"):
            raise ShapeError(f"unknown propagation mode {self.propagation_mode!r}")
        object.__setattr__(self, "_order", topological_order(self.graph))


@dataclass(frozen=True)
class AcquisitionContext:
    """Frozen exogenous and propagation draws for one acquisition round."""

    exo_draws: np.ndarray   # (S, node_count)
    path_noise: np.ndarray  # (S, node_count), standard normal


def draw_context(net: SurrogateNetwork, rng: np.random.Generator) -> AcquisitionContext:
    s, d = net.mc_paths, net.graph.node_count
    exo = np.empty((s, d))
    for i in range(d):
        exo[:, i] = gmm_sample(net.nodes[i].noise_density, rng, size=s)
    return AcquisitionContext(exo, rng.standard_normal((s, d)))


def propagate_batch(net: SurrogateNetwork, actions: np.ndarray,
                    ctx: AcquisitionContext):
    """Propagate (B, A) candidate actions; returns mu, sigma of shape (B,).

    Nodes are visited in topological order; each node's surrogate is
    queried at (propagated parents, action slice, frozen exogenous
    draw). In sampled mode the propagated value is mean + std * frozen
    normal draw; in mean mode it is the posterior mean. At the reward
    node the per-path posterior mean and standard deviation are
    averaged over paths.
    """
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    b = actions.shape[0]
    graph = net.graph
    s = ctx.exo_draws.shape[0]
    if ctx.exo_draws.shape != (s, graph.node_count):
        raise ShapeError("context draws do not match the graph")
    values = np.empty((b, s, graph.node_count))
    mu = sigma = None
    for i in net._order:
        pa = list(graph.parents(i))
        z = values[:, :, pa].reshape(b * s, len(pa))
        sl = graph.action_slice(i)
        a = np.repeat(actions[:, sl], s, axis=0)
        u = np.tile(ctx.exo_draws[:, i], b)
        mean, var = net.nodes[i].predict_joint(z, a, u)
        std = np.sqrt(var)
        if i == graph.reward_node:
            mu = mean.reshape(b, s).mean(axis=1)
            sigma = std.reshape(b, s).mean(axis=1)
        if net.propagation_mode == "sampled":
            eps = np.tile(ctx.path_noise[:, i], b)
            values[:, :, i] = (mean + std * eps).reshape(b, s)
        else:
            values[:, :, i] = mean.reshape(b, s)
    return mu, sigma


def propagate(net: SurrogateNetwork, action, ctx: AcquisitionContext):
    """Single-action propagation: (mu, sigma) floats."""
    mu, sigma = propagate_batch(net, np.asarray(action, dtype=float)[None, :], ctx)
    return float(mu[0]), float(sigma[0])


def ucb_value(net: SurrogateNetwork, action, ctx: AcquisitionContext,
              t: int) -> float:
    """mu + beta_t * sigma at one action under the frozen context."""
    mu, sigma = propagate(net, action, ctx)
    return mu + net.beta_schedule(t) * sigma


def maximize_acquisition(batch_eval: Callable[[np.ndarray], np.ndarray],
                         space: ActionSpace, budget: int,
                         rng: np.random.Generator,
                         incumbent: np.ndarray | None = None,
                         refine_top: int = 3,
                         refine_evals: int = 200) -> tuple[np.ndarray, float]:
    """Random scan plus Nelder-Mead polish; returns the argmax seen.

    batch_eval maps an (m, A) matrix of in-bounds actions to m scores.
    Deterministic given the rng and a deterministic batch_eval.
    """
    if budget < 1:
        raise ShapeError("need a candidate budget of at least 1")
    cands = space.sample_batch(budget, rng)
    if incumbent is not None:
        cands = np.vstack([cands, space.clip(incumbent)[None, :]])
    scores = batch_eval(cands)
    order = np.argsort(scores)[::-1]
    best_a = cands[order[0]].copy()
    best_v = float(scores[order[0]])

    tracker = {"a": best_a, "v": best_v}

    def neg_obj(a):
        clipped = space.clip(a)
        v = float(batch_eval(clipped[None, :])[0])
        if v > tracker["v"]:
            tracker["a"], tracker["v"] = clipped.copy(), v
        return -v

    for idx in order[:refine_top]:
        minimize(neg_obj, cands[idx], method="Nelder-Mead",
                 options={"maxfev": refine_evals, "xatol": 1e-4,
                          "fatol": 1e-8, "adaptive": True})
    return tracker["a"], tracker["v"]


def optimize_acquisition(net: SurrogateNetwork, space: ActionSpace,
                         ctx: AcquisitionContext, t: int, budget: int,
                         rng: np.random.Generator,
                         incumbent: np.ndarray | None = None) -> np.ndarray:
    """Argmax of the UCB acquisition over the action space."""
    beta = net.beta_schedule(t)

    def batch_eval(actions):
        mu, sigma = propagate_batch(net, actions, ctx)
        return mu + beta * sigma

    best_a, _ = maximize_acquisition(batch_eval, space, budget, rng, incumbent)
    return best_a


def constant_beta(value: float) -> Callable[[int], float]:
    return lambda t: float(value)


def sqrt_log_beta(value: float) -> Callable[[int], float]:
    """beta_t = beta0 * sqrt(log(t + 1)), a slowly growing alternative."""
    return lambda t: float(value) * np.sqrt(np.log(t + 1.0))

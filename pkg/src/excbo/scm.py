"""Causal graphs, soft-intervention action spaces, ground-truth simulators,
and per-round observation storage.

Node ids are dense integers 0..d with the reward fixed at index d. Action
slots serialize in (node id ascending, action index ascending) order, and
exogenous draws are consumed in topological-order node sequence from a
single per-round RNG stream so one seed reproduces a whole trajectory.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BoundsError, CycleError, NonFiniteError, ShapeError


@dataclass(frozen=True)
class CausalGraph:
    """DAG over endogenous nodes with action attachments and a reward node."""

    node_count: int
    edges: frozenset[tuple[int, int]]
    action_arity: tuple[int, ...]
    reward_node: int

    def __init__(self, node_count, edges, action_arity, reward_node=None):
        if node_count < 1:
            raise ShapeError("graph needs at least one node")
        edges = frozenset((int(a), int(b)) for a, b in edges)
        arity = tuple(int(k) for k in action_arity)
        if len(arity) != node_count:
            raise ShapeError(
                f"action_arity has {len(arity)} entries for {node_count} nodes")
        if any(k < 0 for k in arity):
            raise ShapeError("action arity must be non-negative")
        if reward_node is None:
            reward_node = node_count - 1
        reward_node = int(reward_node)
        if not 0 <= reward_node < node_count:
            raise ShapeError(f"reward node {reward_node} out of range")
        if arity[reward_node] != 0:
            raise ShapeError("the reward node cannot carry action inputs")
        for a, b in edges:
            if not (0 <= a < node_count and 0 <= b < node_count):
                raise ShapeError(f"edge ({a},{b}) references a missing node")
            if a == b:
                raise CycleError(f"self-loop on node {a}")
        object.__setattr__(self, "node_count", int(node_count))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "action_arity", arity)
        object.__setattr__(self, "reward_node", reward_node)
        # validates acyclicity eagerly
        object.__setattr__(self, "_order", _kahn_order(self))
        parents = tuple(
            tuple(sorted(a for a, b in edges if b == i))
            for i in range(node_count))
        object.__setattr__(self, "_parents", parents)

    def parents(self, node: int) -> tuple[int, ...]:
        return self._parents[node]

    @property
    def total_actions(self) -> int:
        return sum(self.action_arity)

    def action_slice(self, node: int) -> slice:
        start = sum(self.action_arity[:node])
        return slice(start, start + self.action_arity[node])


def _kahn_order(graph: CausalGraph) -> tuple[int, ...]:
    indeg = [0] * graph.node_count
    children: list[list[int]] = [[] for _ in range(graph.node_count)]
    for a, b in graph.edges:
        indeg[b] += 1
        children[a].append(b)
    ready = [i for i in range(graph.node_count) if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for c in children[i]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != graph.node_count:
        raise CycleError("edge relation contains a cycle")
    return tuple(order)


def topological_order(graph: CausalGraph) -> tuple[int, ...]:
    """Parents-first node order, ties broken by ascending node id."""
    return graph._order


@dataclass(frozen=True)
class ActionSpace:
    """Per-slot closed bounds for a graph's flat action vector."""

    graph: CausalGraph
    lows: np.ndarray
    highs: np.ndarray

    def __init__(self, graph, lows, highs):
        lows = np.asarray(lows, dtype=float)
        highs = np.asarray(highs, dtype=float)
        k = graph.total_actions
        if lows.shape != (k,) or highs.shape != (k,):
            raise ShapeError(f"bounds must have {k} slots")
        if np.any(highs < lows):
            raise BoundsError("upper bound below lower bound")
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)

    @property
    def size(self) -> int:
        return self.lows.shape[0]

    def validate(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.size,):
            raise ShapeError(f"action vector must have {self.size} slots, "
                             f"got shape {values.shape}")
        if np.any(values < self.lows) or np.any(values > self.highs):
            raise BoundsError("action outside bounds")
        return values

    def clip(self, values) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lows, self.highs)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lows, self.highs)

    def sample_batch(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lows, self.highs, size=(count, self.size))


class NoiseModel:
    """Sampleable exogenous distribution attached to one node."""

    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class GroundTruthScm:
    """Graph plus per-node mechanisms f(z, a, u) -> x and noise models."""

    graph: CausalGraph
    space: ActionSpace
    mechanisms: tuple[Callable, ...]
    noise_models: tuple[NoiseModel, ...]
    name: str = "scm"
    # epidemic-style rewards keep a noise floor even at the optimum, so
    # expected-reward evaluation must average draws instead of zeroing noise
    stochastic_reward: bool = False

    def __post_init__(self):
        d = self.graph.node_count
        if len(self.mechanisms) != d or len(self.noise_models) != d:
            raise ShapeError("one mechanism and one noise model per node")


def sample_scm(scm: GroundTruthScm, action, rng: np.random.Generator,
               noiseless: bool = False) -> np.ndarray:
    """Draw one joint sample of all node values under the given action.

    Values are computed in topological order; each node consumes its
    parents' sampled values, its action slice, and one fresh exogenous
    draw. With ``noiseless=True`` every draw is replaced by the noise
    model's mean.
    """
    action = scm.space.validate(action)
    graph = scm.graph
    values = np.empty(graph.node_count)
    for i in topological_order(graph):
        z = values[list(graph.parents(i))]
        a = action[graph.action_slice(i)]
        if noiseless:
            u = scm.noise_models[i].mean()
        else:
            u = scm.noise_models[i].sample(rng)
        x = float(scm.mechanisms[i](z, a, u))
        if not np.isfinite(x):
            raise NonFiniteError(
                f"mechanism of node {i} returned {x!r} in {scm.name}")
        values[i] = x
    return values


@dataclass
class ObservationSet:
    """Per-round, per-node records of (parent values, actions, node value).

    Single-writer append; everything else treats an instance as read-only.
    """

    graph: CausalGraph
    rounds: int = 0
    _z: list[list[np.ndarray]] = field(default_factory=list)
    _a: list[list[np.ndarray]] = field(default_factory=list)
    _x: list[list[float]] = field(default_factory=list)

    def __post_init__(self):
        if not self._z:
            d = self.graph.node_count
            self._z = [[] for _ in range(d)]
            self._a = [[] for _ in range(d)]
            self._x = [[] for _ in range(d)]

    def node_inputs(self, node: int) -> np.ndarray:
        """(rounds, |pa| + arity) matrix of regression inputs for one node."""
        z = np.array(self._z[node], dtype=float).reshape(self.rounds, -1)
        a = np.array(self._a[node], dtype=float).reshape(self.rounds, -1)
        return np.hstack([z, a])

    def node_values(self, node: int) -> np.ndarray:
        return np.array(self._x[node], dtype=float)

    def node_parent_values(self, node: int) -> np.ndarray:
        return np.array(self._z[node], dtype=float).reshape(self.rounds, -1)


def append_round(obs: ObservationSet, node_values, action) -> ObservationSet:
    """Record one observed round; returns the same (mutated) set."""
    graph = obs.graph
    node_values = np.asarray(node_values, dtype=float)
    if node_values.shape != (graph.node_count,):
        raise ShapeError(
            f"need {graph.node_count} node values, got {node_values.shape}")
    action = np.asarray(action, dtype=float)
    if action.shape != (graph.total_actions,):
        raise ShapeError(
            f"need {graph.total_actions} action slots, got {action.shape}")
    for i in range(graph.node_count):
        z = node_values[list(graph.parents(i))]
        obs._z[i].append(z)
        obs._a[i].append(action[graph.action_slice(i)])
        obs._x[i].append(float(node_values[i]))
    obs.rounds += 1
    return obs

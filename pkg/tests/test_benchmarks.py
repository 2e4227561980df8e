import math

import numpy as np
import pytest

from excbo.benchmarks import (EpidemicConfig, MixtureNoiseSpec, alpine2_scm,
                              benchmark_names, dropwave_scm,
                              epidemic_calibration_scm, epidemic_noise_floor,
                              epidemic_step, make_benchmark,
                              mixture_noise_sample, register_benchmark,
                              rosenbrock_scm)
from excbo.errors import BoundsError, ConfigError
from excbo.scm import sample_scm, topological_order
from oracles import mixture_moments

ZERO = MixtureNoiseSpec(sigma=0.0, mu1=0.0, mu2=0.0)


def _noiseless(scm, action):
    return sample_scm(scm, action, np.random.default_rng(0), noiseless=True)


# ---------------------------------------------------------------------------
# Dropwave


def test_dropwave_center_is_optimum():
    scm = dropwave_scm(ZERO)
    v = _noiseless(scm, [0.5, 0.5])
    assert v[0] == pytest.approx(0.0, abs=1e-12)
    assert v[1] == pytest.approx(1.0, abs=1e-12)


def test_dropwave_corner_value():
    scm = dropwave_scm(ZERO)
    v = _noiseless(scm, [0.0, 0.0])
    x = math.sqrt(2.0) * 5.12
    assert v[0] == pytest.approx(x, abs=1e-12)
    assert v[1] == pytest.approx(
        (1.0 + math.cos(12.0 * x)) / (2.0 + 0.5 * x * x), abs=1e-12)


def test_dropwave_grid_bounded_by_one():
    scm = dropwave_scm(ZERO)
    grid = np.linspace(0, 1, 101)
    best, best_a = -np.inf, None
    for a0 in grid:
        for a1 in grid:
            y = _noiseless(scm, [a0, a1])[1]
            assert y <= 1.0 + 1e-12
            if y > best:
                best, best_a = y, (a0, a1)
    assert best == pytest.approx(1.0, abs=1e-12)
    assert best_a == (0.5, 0.5)


def test_dropwave_bounds_error():
    with pytest.raises(BoundsError):
        _noiseless(dropwave_scm(ZERO), [0.5, 1.2])


# ---------------------------------------------------------------------------
# Rosenbrock reconstruction


def test_rosenbrock_all_ones_is_maximum():
    scm = rosenbrock_scm(ZERO)
    # actions (1, 0, 0) drive the chain to x = (1, 1, 1)
    v = _noiseless(scm, [1.0, 0.0, 0.0])
    assert np.allclose(v[:3], 1.0)
    assert v[3] == pytest.approx(0.0, abs=1e-12)


def test_rosenbrock_zero_actions_direct_formula():
    scm = rosenbrock_scm(ZERO)
    v = _noiseless(scm, [0.0, 0.0, 0.0])
    x0 = x1 = x2 = 0.0
    total = (100 * (x1 - x0 ** 2) ** 2 + (1 - x0) ** 2
             + 100 * (x2 - x1 ** 2) ** 2 + (1 - x1) ** 2)
    assert v[3] == pytest.approx(-total / 800.0, abs=1e-12)


def test_rosenbrock_node_count():
    scm = rosenbrock_scm(ZERO)
    assert scm.graph.node_count == 4
    assert topological_order(scm.graph) == (0, 1, 2, 3)


def test_rosenbrock_reward_roughly_unit_range():
    scm = rosenbrock_scm(ZERO)
    rng = np.random.default_rng(1)
    vals = [_noiseless(scm, scm.space.sample(rng))[3] for _ in range(500)]
    assert min(vals) >= -1.1
    assert max(vals) <= 0.0 + 1e-12


# ---------------------------------------------------------------------------
# Alpine2 reconstruction


def test_alpine2_node_count():
    scm = alpine2_scm(ZERO)
    assert scm.graph.node_count == 6


def test_alpine2_zero_parent_reduces_to_action():
    scm = alpine2_scm(ZERO)
    # x0 = 0, so node 1 sees sqrt(0) sin(0) + a1 = a1
    v = _noiseless(scm, [0.0, 3.0, 0.0, 0.0, 0.0])
    assert v[0] == 0.0
    assert v[1] == pytest.approx(3.0, abs=1e-12)


def test_alpine2_matches_direct_chain_evaluation():
    scm = alpine2_scm(ZERO)
    actions = np.array([2.0, 1.0, 4.0, 0.5, 3.0])
    v = _noiseless(scm, actions)
    x = 0.0
    factor = lambda t: math.sqrt(max(t, 0.0)) * math.sin(t)
    for k in range(5):
        x = (factor(x) if k else 0.0) + actions[k]
        assert v[k] == pytest.approx(x, abs=1e-12)
    assert v[5] == pytest.approx(factor(x), abs=1e-12)


# ---------------------------------------------------------------------------
# Epidemic


def test_epidemic_step_disease_free_fixed_point():
    nxt, clamped = epidemic_step([0.0, 0.0], np.zeros((2, 2)), 0.3)
    assert np.array_equal(nxt, [0.0, 0.0])
    assert not clamped


def test_epidemic_step_single_group_decay():
    nxt, _ = epidemic_step([0.1], np.zeros((1, 1)), 0.5)
    assert nxt[0] == pytest.approx(0.05, abs=1e-15)


def test_epidemic_step_worked_example():
    nxt, clamped = epidemic_step([0.1, 0.2], [[0.2, 0.1], [0.1, 0.2]], 0.1)
    assert nxt[0] == pytest.approx(0.126, abs=1e-15)
    assert nxt[1] == pytest.approx(0.22, abs=1e-15)
    assert not clamped


def test_epidemic_step_preserves_unit_interval():
    rng = np.random.default_rng(5)
    for _ in range(300):
        g = int(rng.integers(1, 5))
        i_vec = rng.uniform(0, 1, g)
        betas = rng.uniform(0, 1, (g, g))
        betas = betas / np.maximum(betas.sum(axis=1, keepdims=True), 1.0)
        gamma = float(rng.uniform(0.01, 0.99))
        nxt, clamped = epidemic_step(i_vec, betas, gamma)
        assert np.all(nxt >= 0.0) and np.all(nxt <= 1.0)
        assert not clamped


def test_epidemic_graph_shape():
    scm = epidemic_calibration_scm(EpidemicConfig(), MixtureNoiseSpec(sigma=0.2))
    assert scm.graph.node_count == 7  # 2 groups x 3 steps + reward
    assert scm.graph.total_actions == 12
    assert scm.graph.reward_node == 6
    assert scm.stochastic_reward


def test_epidemic_true_betas_zero_noise_reward():
    cfg = EpidemicConfig()
    scm = epidemic_calibration_scm(cfg, ZERO)
    action = cfg.betas_array().reshape(-1)
    v = _noiseless(scm, action)
    assert v[-1] == pytest.approx(0.0, abs=1e-15)


def test_epidemic_noise_floor_matches_measurement():
    noise = MixtureNoiseSpec(sigma=0.2)
    cfg = EpidemicConfig()
    scm = epidemic_calibration_scm(cfg, noise)
    action = cfg.betas_array().reshape(-1)
    rng = np.random.default_rng(77)
    measured = np.mean([sample_scm(scm, action, rng)[-1] for _ in range(2000)])
    predicted = epidemic_noise_floor(cfg, noise, scm.epidemic_reference)
    assert abs(measured - predicted) <= 0.1 * abs(predicted)


def test_epidemic_config_validation():
    with pytest.raises(ConfigError):
        EpidemicConfig(gamma=1.5)
    with pytest.raises(ConfigError):
        EpidemicConfig(initial_infectious=(0.5,))
    with pytest.raises(ConfigError):
        EpidemicConfig(true_betas=[[[9.0, 0.0], [0.0, 0.0]]], horizon=1)


# ---------------------------------------------------------------------------
# Mixture noise


def test_mixture_sample_zero_sigma():
    spec = MixtureNoiseSpec(sigma=0.0, mu1=0.0, mu2=0.0)
    rng = np.random.default_rng(0)
    assert all(mixture_noise_sample(spec, rng) == 0.0 for _ in range(10))


def test_mixture_moments_match_montecarlo():
    spec = MixtureNoiseSpec(sigma=0.7)
    w, m, s = spec.component_params()
    want_mean, want_var = mixture_moments(w, m, s)
    draws = mixture_noise_sample(spec, np.random.default_rng(8), size=100_000)
    assert abs(np.mean(draws) - want_mean) <= 0.01 * spec.sigma
    assert abs(np.var(draws) - want_var) <= 0.03 * want_var
    # the closed-form combination itself
    assert want_var == pytest.approx(
        w[0] * s[0] ** 2 + w[1] * s[1] ** 2 + w[0] * w[1] * (m[0] - m[1]) ** 2)


def test_mixture_variance_interpretation_flag():
    std_spec = MixtureNoiseSpec(sigma=0.5, scale_is_variance=False)
    var_spec = MixtureNoiseSpec(sigma=0.5, scale_is_variance=True)
    _, _, s_std = std_spec.component_params()
    _, _, s_var = var_spec.component_params()
    assert np.allclose(s_std ** 2, [0.25, 1.0])
    assert np.allclose(s_var ** 2, [0.5, 1.0])


def test_mixture_spec_validation():
    with pytest.raises(ConfigError):
        MixtureNoiseSpec(w1=0.7, w2=0.7)
    with pytest.raises(ConfigError):
        MixtureNoiseSpec(c1=-1.0)
    with pytest.raises(ConfigError):
        MixtureNoiseSpec(sigma=-0.1)


# ---------------------------------------------------------------------------
# Registry


def test_registry_names():
    names = benchmark_names()
    for expected in ("dropwave", "rosenbrock", "alpine2", "epidemic"):
        assert expected in names


def test_registry_unknown_benchmark():
    with pytest.raises(ConfigError):
        make_benchmark("nope", ZERO)


def test_registry_custom_benchmark():
    register_benchmark("custom_test_probe", lambda noise, **kw: dropwave_scm(noise))
    scm = make_benchmark("custom_test_probe", ZERO)
    assert scm.name == "dropwave"


def test_all_benchmarks_validate():
    for name in ("dropwave", "rosenbrock", "alpine2", "epidemic"):
        scm = make_benchmark(name, MixtureNoiseSpec(sigma=0.1))
        order = topological_order(scm.graph)
        assert len(order) == scm.graph.node_count
        assert scm.graph.action_arity[scm.graph.reward_node] == 0
        a = scm.space.sample(np.random.default_rng(0))
        v = sample_scm(scm, a, np.random.default_rng(1))
        assert np.all(np.isfinite(v))

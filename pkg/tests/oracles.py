"""Independent oracles used across the test suite.

Each routine recomputes a quantity by a route that shares nothing with
the library path it checks: dense numpy solves instead of Cholesky
factors, explicit recursion instead of the topological evaluator,
binned statistics instead of fitted scale curves.
"""

import math

import numpy as np

from excbo.gp import KernelSpec


def se_kernel_direct(spec: KernelSpec, a, b) -> float:
    r = (np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) \
        / spec.lengthscales
    return spec.signal_variance * math.exp(-0.5 * float(np.dot(r, r)))


def dense_gp_posterior(inputs, targets, spec: KernelSpec, queries,
                       jitter: float = 0.0):
    """Posterior mean/variance and LML by direct dense solves."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    n = x.shape[0]
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            gram[i, j] = se_kernel_direct(spec, x[i], x[j])
    reg = gram + (spec.noise_variance + jitter) * np.eye(n)
    alpha = np.linalg.solve(reg, y)
    means = np.empty(q.shape[0])
    variances = np.empty(q.shape[0])
    for k, row in enumerate(q):
        ks = np.array([se_kernel_direct(spec, row, x[j]) for j in range(n)])
        means[k] = ks @ alpha
        variances[k] = max(se_kernel_direct(spec, row, row)
                           - ks @ np.linalg.solve(reg, ks), 0.0)
    _, logdet = np.linalg.slogdet(reg)
    lml = (-0.5 * float(y @ alpha) - 0.5 * logdet
           - 0.5 * n * math.log(2.0 * math.pi))
    return means, variances, lml


def recursive_scm_eval(graph, mechanisms, action, noise_constants):
    """Evaluate an SCM by literal recursion over parents (no topo sort)."""
    memo = {}

    def node_value(i):
        if i in memo:
            return memo[i]
        z = np.array([node_value(p) for p in graph.parents(i)])
        a = np.asarray(action, dtype=float)[graph.action_slice(i)]
        memo[i] = float(mechanisms[i](z, a, noise_constants[i]))
        return memo[i]

    return np.array([node_value(i) for i in range(graph.node_count)])


def binned_residual_std(z, x, mean_fn, n_bins: int = 10):
    """Conditional residual spread from raw bin statistics."""
    z = np.asarray(z, dtype=float).ravel()
    resid = np.asarray(x, dtype=float) - mean_fn(z)
    edges = np.quantile(z, np.linspace(0, 1, n_bins + 1))
    centers, stds = [], []
    for k in range(n_bins):
        sel = (z >= edges[k]) & (z <= edges[k + 1])
        if sel.sum() >= 5:
            centers.append(float(np.mean(z[sel])))
            stds.append(float(np.std(resid[sel])))
    return np.array(centers), np.array(stds)


def affine_alignment_r2(u_hat, target) -> float:
    """R^2 of the best affine map from target onto u_hat."""
    u_hat = np.asarray(u_hat, dtype=float)
    design = np.vstack([np.asarray(target, dtype=float),
                        np.ones(len(u_hat))]).T
    coef, *_ = np.linalg.lstsq(design, u_hat, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((u_hat - pred) ** 2))
    ss_tot = float(np.sum((u_hat - np.mean(u_hat)) ** 2))
    return 1.0 - ss_res / ss_tot


def mixture_moments(weights, means, stds):
    """Exact mean and variance of a Gaussian mixture."""
    w = np.asarray(weights, dtype=float)
    m = np.asarray(means, dtype=float)
    s = np.asarray(stds, dtype=float)
    mean = float(w @ m)
    var = float(w @ (s ** 2 + m ** 2) - mean ** 2)
    return mean, var

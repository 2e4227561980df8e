"""Pure-numpy implementations of the hot GP kernels.

Signature-compatible with the compiled module ``excbo._gpcore``; the
active implementation is chosen once at import by ``excbo.backend``.
"""

import numpy as np

BACKEND_NAME = "python"


def se_kernel(queries, inputs, lengthscales, signal_variance):
    """Squared-exponential (ARD) cross-covariance matrix, shape (m, n)."""
    q = queries[:, None, :] / lengthscales
    x = inputs[None, :, :] / lengthscales
    sq = np.sum((q - x) ** 2, axis=2)
    return signal_variance * np.exp(-0.5 * sq)


def gp_mean_var(queries, inputs, lengthscales, signal_variance, alpha, kinv):
    """Fused posterior mean and latent variance for a batch of queries.

    mean = k* @ alpha, var = k(q,q) - k* @ kinv @ k* clamped at zero;
    kinv is the precomputed inverse of the regularized Gram matrix.
    """
    kc = se_kernel(queries, inputs, lengthscales, signal_variance)
    mean = kc @ alpha
    var = signal_variance - np.einsum("ij,ij->i", kc @ kinv, kc)
    np.maximum(var, 0.0, out=var)
    return mean, var

"""Shared independent oracles used to freeze expected test values.

These deliberately avoid the library's own code paths: the plug-in oracle
integrates the empirical quantile step function by brute-force Riemann
summation, and the tail-moment oracle reduces the variance double integral to
one-dimensional tail moments.
"""

import numpy as np
from scipy import integrate


def riemann_plugin_oracle(values, alpha, nodes=1_000_000):
    """(1/alpha) * integral of the empirical quantile function over (1-alpha, 1).

    Midpoint Riemann sum over ``nodes`` points; the empirical quantile at u is
    the ceil(u*N)-th order statistic.
    """
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    u = 1.0 - alpha + alpha * (np.arange(nodes) + 0.5) / nodes
    idx = np.ceil(u * n).astype(int) - 1
    np.clip(idx, 0, n - 1, out=idx)
    return ordered[idx].mean()


def tail_variance_oracle(spec, alpha):
    """sigma_ES^2 via Var((X - q)^+)/alpha^2 with 1-d tail-moment quadrature."""
    q = spec.tail_quantile(alpha)
    m1, _ = integrate.quad(lambda t: (t - q) * spec.pdf(t), q, np.inf,
                           epsabs=1e-13, epsrel=1e-12, limit=400)
    m2, _ = integrate.quad(lambda t: (t - q) ** 2 * spec.pdf(t), q, np.inf,
                           epsabs=1e-13, epsrel=1e-12, limit=400)
    return (m2 - m1 * m1) / (alpha * alpha)

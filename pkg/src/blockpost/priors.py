"""Multinomial-Dirichlet assignment prior and prior-mass estimates."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.special import gammaln

from .model import ClusterAssignment

DEFAULT_ALPHA = 0.5
DEFAULT_BUDGET = 10**6

__all__ = [
    "DEFAULT_ALPHA",
    "as_alpha",
    "log_marginal_assignment_prior",
    "log_prior_from_sizes",
    "enumerate_assignments",
    "assignment_table",
    "max_prior_ratio",
    "sample_mixing_proportions",
    "sample_assignments",
    "prior_ball_mass",
    "BudgetExceeded",
]


class BudgetExceeded(ValueError):
    """Raised when k**n assignments exceed the enumeration budget."""


def as_alpha(alpha, k: int) -> np.ndarray:
    """Broadcast a scalar or length-k hyper-parameter to a positive vector."""
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (k,)).copy()
    if np.any(a <= 0):
        raise ValueError("Dirichlet weights must be positive")
    return a


def log_prior_from_sizes(sizes, alpha) -> np.ndarray:
    """Log marginal prior of any z with the given cluster sizes.

    ``sizes`` may be a length-k vector or an ``(m, k)`` batch.
    """
    sizes = np.asarray(sizes, dtype=float)
    alpha = as_alpha(alpha, sizes.shape[-1])
    n = sizes.sum(axis=-1)
    a0 = alpha.sum()
    return (
        gammaln(a0)
        - gammaln(n + a0)
        + np.sum(gammaln(sizes + alpha) - gammaln(alpha), axis=-1)
    )


def log_marginal_assignment_prior(z: ClusterAssignment, alpha=DEFAULT_ALPHA) -> float:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim == 1 and alpha.size != z.k:
        raise ValueError("alpha length must equal k")
    return float(log_prior_from_sizes(z.sizes, as_alpha(alpha, z.k)))


def _check_budget(n: int, k: int, budget: int):
    if k**n > budget:
        raise BudgetExceeded(f"k**n = {k}**{n} exceeds enumeration budget {budget}")


def enumerate_assignments(n: int, k: int, budget: int = DEFAULT_BUDGET):
    """Yield all k**n assignments in lexicographic label order."""
    _check_budget(n, k, budget)
    for labels in itertools.product(range(k), repeat=n):
        yield ClusterAssignment(np.array(labels, dtype=np.int64), k)


def assignment_table(n: int, k: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """All assignments as a ``(k**n, n)`` array, same order as :func:`enumerate_assignments`."""
    _check_budget(n, k, budget)
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices((k,) * n, dtype=np.int64).reshape(n, -1).T.copy()


def table_sizes(table: np.ndarray, k: int) -> np.ndarray:
    sizes = np.zeros((table.shape[0], k), dtype=np.int64)
    for r in range(k):
        sizes[:, r] = np.count_nonzero(table == r, axis=1)
    return sizes


def max_prior_ratio(n: int, k: int, alpha, z_ref: ClusterAssignment, budget: int = DEFAULT_BUDGET) -> float:
    """Exact ``max_z p(z) / p(z_ref)`` by enumerating every z.

    ``z_ref`` must occupy every cluster.
    """
    if z_ref.n != n or z_ref.k != k:
        raise ValueError("z_ref does not match (n, k)")
    if np.any(z_ref.sizes < 1):
        raise ValueError("z_ref must have every cluster nonempty")
    table = assignment_table(n, k, budget)
    logp = log_prior_from_sizes(table_sizes(table, k), alpha)
    best = int(np.argmax(logp))  # first maximiser in enumeration order
    return float(np.exp(logp[best] - log_marginal_assignment_prior(z_ref, alpha)))


def sample_mixing_proportions(alpha, k: int, rng) -> np.ndarray:
    return rng.dirichlet(as_alpha(alpha, k))


def sample_assignments(n: int, k: int, alpha, size: int, rng) -> np.ndarray:
    """Ancestral draws of z: pi ~ Dirichlet(alpha), then iid labels given pi.

    Returns a ``(size, n)`` label array.
    """
    alpha = as_alpha(alpha, k)
    pis = rng.dirichlet(alpha, size=size)
    cdf = np.cumsum(pis, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((size, n))
    labels = np.empty((size, n), dtype=np.int64)
    for s in range(size):
        labels[s] = np.searchsorted(cdf[s], u[s], side="right")
    return labels


def prior_ball_mass(theta0, radius: float, alpha=DEFAULT_ALPHA, k: int = 2,
                    mc_samples: int = 10_000, seed=0, chunk: int = 4096):
    """Monte-Carlo estimate of the prior probability of ``||theta - theta0|| < radius``.

    Returns ``(estimate, std_error)`` with the binomial standard error.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    theta0 = np.asarray(theta0, dtype=float)
    n = theta0.shape[0]
    if radius <= 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    r2 = radius * radius
    chunk = max(1, min(chunk, 2**22 // max(n * n, 1)))
    while done < mc_samples:
        m = min(chunk, mc_samples - done)
        labels = sample_assignments(n, k, alpha, m, rng)
        Q = rng.random((m, k, k))
        theta = Q[np.arange(m)[:, None, None], labels[:, :, None], labels[:, None, :]]
        d2 = np.sum((theta - theta0) ** 2, axis=(1, 2))
        hits += int(np.count_nonzero(d2 < r2))
        done += m
    p = hits / mc_samples
    return p, float(np.sqrt(p * (1.0 - p) / mc_samples))

"""Generative stochastic block model on directed graphs with self-loops.

Labels are stored 0-based (``0..k-1``) in memory. File formats and CSV dumps
use 1-based labels and node ids.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ClusterAssignment",
    "BlockSufficientStats",
    "TruthSpec",
    "theta_from_assignment",
    "sample_truth",
    "sample_adjacency",
    "block_stats",
    "log_likelihood",
    "bernoulli_log_likelihood",
    "normalized_sq_error",
    "blocked_distance",
    "direct_distance",
    "project_onto_slice",
]


@dataclass(frozen=True)
class ClusterAssignment:
    """A label vector z with 0-based labels in ``range(k)``."""

    labels: np.ndarray
    k: int
    sizes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in 0..{self.k - 1}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        sizes = np.bincount(labels, minlength=self.k)
        sizes.setflags(write=False)
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def __eq__(self, other):
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.k, self.labels.tobytes()))

    @classmethod
    def from_one_based(cls, labels, k: int) -> "ClusterAssignment":
        return cls(np.asarray(labels, dtype=np.int64) - 1, k)

    def one_based(self) -> np.ndarray:
        return self.labels + 1


@dataclass(frozen=True)
class BlockSufficientStats:
    """Per-block edge counts ``edges[r, s]`` and pair counts ``pairs[r, s]``."""

    edges: np.ndarray
    pairs: np.ndarray


@dataclass(frozen=True)
class TruthSpec:
    n: int
    k: int
    delta: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")


def _check_square(Q: np.ndarray, k: int):
    if Q.shape != (k, k):
        raise ValueError(f"connectivity matrix has shape {Q.shape}, expected ({k}, {k})")


def theta_from_assignment(z: ClusterAssignment, Q) -> np.ndarray:
    """Edge-probability matrix with ``theta[i, j] = Q[z_i, z_j]``."""
    Q = np.asarray(Q, dtype=float)
    _check_square(Q, z.k)
    return Q[np.ix_(z.labels, z.labels)]


def sample_truth(spec: TruthSpec):
    """Draw a truth (z, Q, theta) satisfying the interior and nonempty-cluster conditions.

    Labels are assigned round-robin then shuffled, so every cluster is occupied.
    Q entries are iid uniform on (delta, 1 - delta).
    """
    if spec.k < 1 or spec.n < spec.k:
        raise ValueError(f"need n >= k >= 1 to occupy every cluster (n={spec.n}, k={spec.k})")
    rng = np.random.default_rng(spec.seed)
    labels = np.arange(spec.n) % spec.k
    rng.shuffle(labels)
    z = ClusterAssignment(labels, spec.k)
    Q = rng.uniform(spec.delta, 1.0 - spec.delta, size=(spec.k, spec.k))
    return z, Q, theta_from_assignment(z, Q)


def sample_adjacency(theta, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    theta = np.asarray(theta, dtype=float)
    return (rng.random(theta.shape) < theta).astype(np.uint8)


def block_stats(A, z: ClusterAssignment) -> BlockSufficientStats:
    A = np.asarray(A)
    if A.shape != (z.n, z.n):
        raise ValueError(f"adjacency shape {A.shape} does not match n={z.n}")
    onehot = np.zeros((z.n, z.k), dtype=np.int64)
    onehot[np.arange(z.n), z.labels] = 1
    edges = onehot.T @ A.astype(np.int64) @ onehot
    pairs = np.outer(z.sizes, z.sizes).astype(np.int64)
    return BlockSufficientStats(edges, pairs)


def _bernoulli_terms(ones, zeros, p):
    # 0 * log 0 := 0; an observation with zero probability gives -inf
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(ones > 0, ones * np.log(p), 0.0)
        t0 = np.where(zeros > 0, zeros * np.log1p(-p), 0.0)
    return float(np.sum(t1) + np.sum(t0))


def log_likelihood(A, z: ClusterAssignment, Q) -> float:
    """Block log-likelihood of A given (z, Q); ``-inf`` for impossible observations."""
    Q = np.asarray(Q, dtype=float)
    _check_square(Q, z.k)
    stats = block_stats(A, z)
    return _bernoulli_terms(stats.edges, stats.pairs - stats.edges, Q)


def bernoulli_log_likelihood(A, theta) -> float:
    """Entrywise log P_theta(A) for independent Bernoulli edges."""
    A = np.asarray(A)
    theta = np.asarray(theta, dtype=float)
    if A.shape != theta.shape:
        raise ValueError("shape mismatch")
    return _bernoulli_terms(A.astype(float), 1.0 - A, theta)


def normalized_sq_error(theta, theta0) -> float:
    theta = np.asarray(theta, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if theta.shape != theta0.shape:
        raise ValueError(f"shape mismatch: {theta.shape} vs {theta0.shape}")
    n = theta.shape[0]
    return float(np.sum((theta - theta0) ** 2) / n**2)


def direct_distance(z, Q, z_star, Q_star) -> float:
    """Frobenius distance computed entrywise over all n^2 pairs."""
    return float(np.linalg.norm(theta_from_assignment(z, Q) - theta_from_assignment(z_star, Q_star)))


def blocked_distance(z: ClusterAssignment, Q, z_star: ClusterAssignment, Q_star) -> float:
    """Frobenius distance between theta^{z,Q} and theta^{z*,Q*} in O(n + k^4).

    With z == z* this is ``sqrt(sum n_r n_s (Q_rs - Q*_rs)^2)``; otherwise the
    overlap counts n_{r,r'} between the two partitions weight every
    block pair.
    """
    if z.n != z_star.n or z.k != z_star.k:
        raise ValueError("assignments must share n and k")
    Q = np.asarray(Q, dtype=float)
    Q_star = np.asarray(Q_star, dtype=float)
    _check_square(Q, z.k)
    _check_square(Q_star, z.k)
    if z == z_star:
        w = np.outer(z.sizes, z.sizes)
        return float(np.sqrt(np.sum(w * (Q - Q_star) ** 2)))
    k = z.k
    overlap = np.zeros((k, k), dtype=np.int64)
    np.add.at(overlap, (z.labels, z_star.labels), 1)
    # weights[r, r', s, s'] = n_{r,r'} n_{s,s'}
    w = np.einsum("ab,cd->abcd", overlap, overlap)
    diff = Q[:, None, :, None] - Q_star[None, :, None, :]
    return float(np.sqrt(np.sum(w * diff**2)))


def project_onto_slice(theta0, z: ClusterAssignment):
    """Pieces of ``||theta^{z,Q} - theta0||^2 = sum w (Q - m)^2 + c``.

    Returns ``(w, m, c)``: block weights ``n_r n_s``, the z-block means of
    theta0 (0 on empty blocks) and the Q-independent remainder.
    """
    theta0 = np.asarray(theta0, dtype=float)
    onehot = np.zeros((z.n, z.k))
    onehot[np.arange(z.n), z.labels] = 1.0
    w = np.outer(z.sizes, z.sizes).astype(float)
    sums = onehot.T @ theta0 @ onehot
    m = np.zeros_like(sums)
    np.divide(sums, w, out=m, where=w > 0)
    c = float(np.sum(theta0**2) - np.sum(w * m**2))
    return w, m, max(c, 0.0)

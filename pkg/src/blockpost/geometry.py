"""Ellipsoids inside the block-model parameter space.

A slice ``{theta^{z,Q} : Q}`` for fixed z is a k^2-dimensional object: the
Frobenius distance between two of its points is a weighted Euclidean
distance between their Q matrices, with weights ``n_r n_s``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import ClusterAssignment, project_onto_slice, theta_from_assignment

__all__ = [
    "WeightedEllipsoid",
    "AnnulusSpec",
    "ellipsoid_volume",
    "log_ellipsoid_volume",
    "ellipsoid_volume_mc",
    "overlap_counts",
    "embed_center",
    "decompose_distance",
    "containment_check",
    "containment_counts",
    "packing_bound",
    "greedy_packing",
    "rectangle_in_ellipsoid_check",
]


@dataclass(frozen=True)
class WeightedEllipsoid:
    """``{X : sum W_rs (X_rs - center_rs)^2 <= 1}``."""

    center: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.shape(self.center) != np.shape(self.weights):
            raise ValueError("center and weights must have the same shape")
        if np.any(np.asarray(self.weights) < 0):
            raise ValueError("weights must be nonnegative")

    def contains(self, X) -> bool:
        X = np.asarray(X, dtype=float)
        return bool(np.sum(self.weights * (X - self.center) ** 2) <= 1.0)

    def volume(self) -> float:
        return ellipsoid_volume(self.weights)


@dataclass(frozen=True)
class AnnulusSpec:
    center: np.ndarray
    inner: float
    outer: float
    shell: int = 1

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("annulus needs 0 < inner < outer")

    @classmethod
    def for_shell(cls, theta0, shell: int, eps: float) -> "AnnulusSpec":
        """Shell ``l n eps <= ||theta - theta0|| < (l + 1) n eps``."""
        n = np.shape(theta0)[0]
        return cls(np.asarray(theta0, dtype=float), shell * n * eps, (shell + 1) * n * eps, shell)


def log_ellipsoid_volume(weights) -> float:
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("ellipsoid volume needs strictly positive weights")
    m = w.size  # ambient dimension d^2
    return float(0.5 * m * np.log(np.pi) - gammaln(0.5 * m + 1.0) - 0.5 * np.sum(np.log(w)))


def ellipsoid_volume(weights) -> float:
    """Lebesgue volume of the unit weighted ellipsoid in R^{d x d}.

    Uses the standard ``pi^{m/2} / Gamma(m/2 + 1) * prod W^{-1/2}`` with
    ``m = d^2``.
    """
    return float(np.exp(log_ellipsoid_volume(weights)))


def ellipsoid_volume_mc(weights, samples: int = 10**6, seed=0, chunk: int = 2**18):
    """Hit-or-miss volume estimate over the bounding box; returns (estimate, std_error)."""
    w = np.asarray(weights, dtype=float).ravel()
    half = 1.0 / np.sqrt(w)
    box = float(np.prod(2.0 * half))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = rng.uniform(-half, half, size=(m, w.size))
        hits += int(np.count_nonzero(np.sum(w * x * x, axis=1) <= 1.0))
        done += m
    p = hits / samples
    return box * p, box * float(np.sqrt(p * (1 - p) / samples))


def overlap_counts(z: ClusterAssignment, z_star: ClusterAssignment) -> np.ndarray:
    """Contingency table ``counts[r, r'] = |z^{-1}(r) & z*^{-1}(r')|``."""
    if z.n != z_star.n or z.k != z_star.k:
        raise ValueError("assignments must share n and k")
    counts = np.zeros((z.k, z.k), dtype=np.int64)
    np.add.at(counts, (z.labels, z_star.labels), 1)
    return counts


def embed_center(Q_star, z: ClusterAssignment, z_star: ClusterAssignment) -> np.ndarray:
    """Overlap-weighted average of Q* seen through the blocks of z.

    Rows/columns of empty clusters of z are set to 0; they carry zero weight.
    """
    Q_star = np.asarray(Q_star, dtype=float)
    counts = overlap_counts(z, z_star).astype(float)
    num = counts @ Q_star @ counts.T
    w = np.outer(z.sizes, z.sizes).astype(float)
    out = np.zeros_like(num)
    np.divide(num, w, out=out, where=w > 0)
    return out


def decompose_distance(z: ClusterAssignment, Q, z_star: ClusterAssignment, Q_star):
    """Split ``||theta^{z,Q} - theta^{z*,Q*}||^2`` into ellipsoid term + residual.

    The residual does not depend on Q and is nonnegative up to rounding.
    """
    Q = np.asarray(Q, dtype=float)
    Q_star = np.asarray(Q_star, dtype=float)
    if Q.shape != (z.k, z.k) or Q_star.shape != (z.k, z.k):
        raise ValueError("connectivity matrices must be k x k")
    center = embed_center(Q_star, z, z_star)
    w = np.outer(z.sizes, z.sizes).astype(float)
    w_star = np.outer(z_star.sizes, z_star.sizes).astype(float)
    ellipsoid_term = float(np.sum(w * (Q - center) ** 2))
    residual = float(np.sum(w_star * Q_star**2) - np.sum(w * center**2))
    return ellipsoid_term, residual


def containment_counts(z: ClusterAssignment, z_star: ClusterAssignment, Q_star, t: float,
                       trials: int, seed=0):
    """Sample uniform Q and compare ball membership with ellipsoid membership.

    Returns ``(violations, inside_ball)``: the number of Q inside the ball
    ``||theta^{z,Q} - theta^{z*,Q*}|| < t`` but outside the ellipsoid, and the
    number inside the ball at all.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    rng = np.random.default_rng(seed)
    k = z.k
    Qs = rng.random((trials, k, k))
    theta_star = theta_from_assignment(z_star, Q_star)
    lab = z.labels
    theta = Qs[:, lab[:, None], lab[None, :]]
    d2 = np.sum((theta - theta_star) ** 2, axis=(1, 2))
    center = embed_center(Q_star, z, z_star)
    w = np.outer(z.sizes, z.sizes).astype(float)
    ell = np.sum(w * (Qs - center) ** 2, axis=(1, 2))
    inside = d2 < t * t
    violations = int(np.count_nonzero(inside & ~(ell < t * t)))
    return violations, int(np.count_nonzero(inside))


def containment_check(z, z_star, Q_star, t: float, trials: int, seed=0) -> int:
    """Number of sampled Q that violate ball-in-ellipsoid containment (expected 0)."""
    return containment_counts(z, z_star, Q_star, t, trials, seed)[0]


def packing_bound(shell: int, k: int, coarse: bool = False) -> float:
    """Volume bound on the size of a separated set in one annulus slice."""
    if coarse:
        return 9.0 ** (k * k)
    return ((5 * shell / 4 + 1) / (shell / 2)) ** (k * k)


def greedy_packing(theta0, z: ClusterAssignment, annulus: AnnulusSpec, attempts: int,
                   seed=0, batch: int = 1024) -> list:
    """Greedy ``inner/2``-separated set in the slice of the annulus along z.

    Proposals are uniform Q in [0,1]^{k x k}; a proposal is kept when
    theta^{z,Q} lies in the annulus and is at least ``inner/2`` from every
    point kept so far. Returns the kept Q matrices.
    """
    k = z.k
    w, m, c = project_onto_slice(theta0, z)
    inner2, outer2 = annulus.inner**2, annulus.outer**2
    sep2 = (annulus.inner / 2) ** 2

    rng = np.random.default_rng(seed)
    kept: list[np.ndarray] = []
    done = 0
    while done < attempts:
        size = min(batch, attempts - done)
        Qs = rng.random((size, k, k))
        d2 = np.sum(w * (Qs - m) ** 2, axis=(1, 2)) + c
        for Q in Qs[(d2 >= inner2) & (d2 < outer2)]:
            if all(np.sum(w * (Q - P) ** 2) >= sep2 for P in kept):
                kept.append(Q)
        done += size
    return kept


def rectangle_in_ellipsoid_check(Q0, sizes, eps: float) -> bool:
    """Check every corner of the eps-cube around Q0 against the n^2 eps^2 / 4 bound."""
    Q0 = np.asarray(Q0, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    if np.any(Q0 - eps / 2 <= 0) or np.any(Q0 + eps / 2 >= 1):
        raise ValueError("rectangle leaves the unit cube: need Q0 entries in (eps/2, 1 - eps/2)")
    n = sizes.sum()
    w = np.outer(sizes, sizes)
    bound = n * n * eps * eps / 4
    k2 = Q0.size
    for signs in itertools.product((-0.5, 0.5), repeat=k2):
        corner = Q0 + eps * np.reshape(signs, Q0.shape)
        val = np.sum(w * (corner - Q0) ** 2)
        if not (val <= bound * (1 + 1e-12) and val < n * n * eps * eps):
            return False
    return True

"""Linear Hoeffding tests of a point null against balls and annuli."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TestVerdict",
    "HOEFFDING_CONSTANT",
    "hoeffding_bound",
    "point_vs_ball_test",
    "annulus_test",
    "estimate_test_errors",
    "estimate_rejection_rate",
    "sample_in_alternative_ball",
]

# P(sum c_ij (A_ij - theta_ij) > ||c||^2 / 4) <= exp(-2 (||c||^2/4)^2 / ||c||^2)
HOEFFDING_CONSTANT = 1.0 / 8.0


def hoeffding_bound(sq_separation: float) -> float:
    return float(np.exp(-HOEFFDING_CONSTANT * sq_separation))


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False  # not a pytest class

    reject: bool
    statistic: float
    threshold: float


def _direction(theta0, theta1):
    theta0 = np.asarray(theta0, dtype=float)
    theta1 = np.asarray(theta1, dtype=float)
    if theta0.shape != theta1.shape:
        raise ValueError("shape mismatch")
    c = theta1 - theta0
    sq = float(np.sum(c * c))
    if sq == 0.0:
        raise ValueError("theta1 must differ from theta0")
    return theta0, c, sq


def point_vs_ball_test(A, theta0, theta1) -> TestVerdict:
    """Reject when ``<theta1 - theta0, A - theta0>`` exceeds ``||theta1 - theta0||^2 / 4``."""
    theta0, c, sq = _direction(theta0, theta1)
    stat = float(np.sum(c * (np.asarray(A, dtype=float) - theta0)))
    threshold = sq / 4.0
    return TestVerdict(stat > threshold, stat, threshold)


def annulus_test(A, theta0, net) -> TestVerdict:
    """Maximum of point-vs-ball tests over a net.

    The statistic is the largest ``statistic - threshold`` gap, so the verdict
    rejects iff it is positive. An empty net never rejects.
    """
    best = -np.inf
    for theta_h in net:
        v = point_vs_ball_test(A, theta0, theta_h)
        best = max(best, v.statistic - v.threshold)
    return TestVerdict(bool(best > 0.0), float(best), 0.0)


def _draw_batch(theta, m, rng):
    return (rng.random((m,) + theta.shape) < theta).astype(np.float64)


def estimate_rejection_rate(theta_true, tests, trials: int, seed=0, chunk: int = 8192):
    """MC rejection frequency of the max over ``tests`` (pairs of theta0, theta1).

    Returns ``(rate, per_test_rates, stderr)`` where the per-test rates share
    the same simulated data.
    """
    theta_true = np.asarray(theta_true, dtype=float)
    prepared = []
    for theta0, theta1 in tests:
        theta0, c, sq = _direction(theta0, theta1)
        prepared.append((c, float(np.sum(c * theta0)), sq / 4.0))
    rng = np.random.default_rng(seed)
    n2 = theta_true.size
    chunk = max(1, min(chunk, 2**22 // n2))
    any_hits = 0
    each = np.zeros(len(prepared), dtype=np.int64)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        A = _draw_batch(theta_true, m, rng).reshape(m, n2)
        rej = np.zeros(m, dtype=bool)
        for idx, (c, offset, thr) in enumerate(prepared):
            r = (A @ c.ravel() - offset) > thr
            each[idx] += int(np.count_nonzero(r))
            rej |= r
        any_hits += int(np.count_nonzero(rej))
        done += m
    rate = any_hits / trials
    return rate, each / trials, float(np.sqrt(rate * (1 - rate) / trials))


def estimate_test_errors(theta0, theta1, theta_alt=None, trials: int = 10**5, seed=0):
    """MC type-I (under theta0) and type-II (under theta_alt) errors of the point test.

    ``theta_alt`` defaults to theta1 and must lie within ``||theta1 - theta0|| / 2``
    of theta1. Returns ``(type1, type2, mc_stderr)``; the stderr is the larger
    of the two binomial standard errors.
    """
    theta0, c, sq = _direction(theta0, theta1)
    theta1 = theta0 + c
    theta_alt = theta1 if theta_alt is None else np.asarray(theta_alt, dtype=float)
    if np.sqrt(np.sum((theta_alt - theta1) ** 2)) > np.sqrt(sq) / 2 * (1 + 1e-12):
        raise ValueError("theta_alt lies outside the alternative ball")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = ss.spawn(2)
    type1, _, se1 = estimate_rejection_rate(theta0, [(theta0, theta1)], trials, seeds[0])
    reject_alt, _, se2 = estimate_rejection_rate(theta_alt, [(theta0, theta1)], trials, seeds[1])
    accepted = trials - round(reject_alt * trials)
    return type1, accepted / trials, max(se1, se2)


def sample_in_alternative_ball(theta0, theta1, rng, max_tries: int = 10_000) -> np.ndarray:
    """Uniform-radius random point of ``{theta in [0,1]^{n x n} : ||theta - theta1|| <= ||theta1 - theta0||/2}``."""
    theta0, c, sq = _direction(theta0, theta1)
    theta1 = theta0 + c
    radius = np.sqrt(sq) / 2
    for _ in range(max_tries):
        d = rng.standard_normal(theta1.shape)
        d *= rng.random() * radius / np.linalg.norm(d)
        cand = theta1 + d
        if np.all((cand >= 0) & (cand <= 1)):
            return cand
    raise RuntimeError("could not sample inside the alternative ball")

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from blockpost.model import (
    ClusterAssignment,
    TruthSpec,
    bernoulli_log_likelihood,
    block_stats,
    blocked_distance,
    direct_distance,
    log_likelihood,
    normalized_sq_error,
    project_onto_slice,
    sample_adjacency,
    sample_truth,
    theta_from_assignment,
)
from oracles import distance_loops, loglik_loops

Q2 = np.array([[0.1, 0.2], [0.3, 0.4]])


def one_based(labels, k):
    return ClusterAssignment.from_one_based(labels, k)


def test_assignment_sizes_and_validation():
    z = ClusterAssignment([0, 2, 2, 1, 2], 3)
    assert_array_equal(z.sizes, [1, 1, 3])
    assert z.n == 5
    assert_array_equal(z.one_based(), [1, 3, 3, 2, 3])
    with pytest.raises(ValueError):
        ClusterAssignment([0, 3], 3)
    with pytest.raises(ValueError):
        ClusterAssignment([-1], 2)


@pytest.mark.parametrize("labels, Q, expected", [
    ((1, 1), [[0.3]], np.full((2, 2), 0.3)),
    ((1, 2), Q2, Q2),
    ((2, 1), Q2, [[0.4, 0.3], [0.2, 0.1]]),
])
def test_theta_from_assignment_examples(labels, Q, expected):
    k = np.shape(Q)[0]
    assert_allclose(theta_from_assignment(one_based(labels, k), Q), expected)


def test_theta_dimension_mismatch():
    with pytest.raises(ValueError):
        theta_from_assignment(ClusterAssignment([0, 1], 2), [[0.5]])


@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_theta_has_at_most_k_squared_values(n, k, seed):
    rng = np.random.default_rng(seed)
    z = ClusterAssignment(rng.integers(0, k, n), k)
    theta = theta_from_assignment(z, rng.random((k, k)))
    assert len(np.unique(theta)) <= k * k


def test_sample_truth_small_cases():
    z, Q, theta = sample_truth(TruthSpec(1, 1, 0.25, seed=3))
    assert_array_equal(z.labels, [0])
    assert 0.25 < Q[0, 0] < 0.75
    z, _, _ = sample_truth(TruthSpec(4, 2, 0.1, seed=0))
    assert np.all(z.sizes >= 1)


def test_sample_truth_deterministic_and_valid():
    a = sample_truth(TruthSpec(30, 4, 0.1, seed=11))
    b = sample_truth(TruthSpec(30, 4, 0.1, seed=11))
    assert a[0] == b[0]
    assert_array_equal(a[1], b[1])
    z, Q, theta = a
    assert np.all(z.sizes >= 1)
    assert np.all((Q > 0.1) & (Q < 0.9))
    assert_array_equal(theta, theta_from_assignment(z, Q))


def test_sample_truth_needs_n_at_least_k():
    with pytest.raises(ValueError):
        sample_truth(TruthSpec(2, 3))
    with pytest.raises(ValueError):
        TruthSpec(5, 2, delta=0.0)


def test_sample_adjacency_degenerate_and_mean():
    assert np.all(sample_adjacency(np.zeros((5, 5)), 1) == 0)
    assert np.all(sample_adjacency(np.ones((5, 5)), 1) == 1)
    A = sample_adjacency(np.full((50, 50), 0.5), 2)
    # 3 sigma for a mean of 2500 fair coins is 0.03
    assert abs(A.mean() - 0.5) <= 0.03
    assert_array_equal(A, sample_adjacency(np.full((50, 50), 0.5), 2))


def test_block_means_concentrate(rng):
    # block sizes 100 and 150 give N_rs >= 10^4
    hits = 0
    trials = 100
    z = ClusterAssignment(np.repeat([0, 1], [100, 150]), 2)
    Q = np.array([[0.2, 0.7], [0.45, 0.9]])
    theta = theta_from_assignment(z, Q)
    for t in range(trials):
        stats = block_stats(sample_adjacency(theta, 1000 + t), z)
        dev = np.abs(stats.edges / stats.pairs - Q)
        hits += np.all(dev <= 4 * np.sqrt(Q * (1 - Q) / stats.pairs))
    assert hits >= 99


def test_block_stats_examples():
    z = one_based((1, 2), 2)
    stats = block_stats(np.array([[1, 0], [1, 1]]), z)
    assert_array_equal(stats.edges, [[1, 0], [1, 1]])
    assert_array_equal(stats.pairs, np.ones((2, 2)))
    z = ClusterAssignment([0, 1, 1, 0, 1], 2)
    zeros = block_stats(np.zeros((5, 5), dtype=np.uint8), z)
    ones = block_stats(np.ones((5, 5), dtype=np.uint8), z)
    assert_array_equal(zeros.edges, 0)
    assert_array_equal(zeros.pairs, np.outer(z.sizes, z.sizes))
    assert_array_equal(ones.edges, ones.pairs)
    assert ones.pairs.sum() == 25


def test_log_likelihood_examples():
    z1 = ClusterAssignment([0], 1)
    assert log_likelihood([[1]], z1, [[0.5]]) == pytest.approx(math.log(0.5), abs=1e-12)
    A = np.array([[0, 1], [0, 0]])
    val = log_likelihood(A, ClusterAssignment([0, 0], 1), [[0.25]])
    assert val == pytest.approx(-2.24934, abs=5e-6)
    assert val == pytest.approx(math.log(0.25) + 3 * math.log(0.75), abs=1e-12)
    assert log_likelihood([[1]], z1, [[0.0]]) == -math.inf
    assert log_likelihood([[0]], z1, [[1.0]]) == -math.inf
    # 0 log 0 convention: impossible value never observed
    assert log_likelihood([[0]], z1, [[0.0]]) == 0.0


def test_log_likelihood_matches_entrywise_oracle(rng):
    for _ in range(100):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 15))
        z = ClusterAssignment(rng.integers(0, k, n), k)
        Q = rng.random((k, k))
        A = sample_adjacency(theta_from_assignment(z, Q), rng.integers(2**32))
        expected = loglik_loops(A.tolist(), z.labels.tolist(), Q.tolist())
        assert abs(log_likelihood(A, z, Q) - expected) <= 1e-10
        assert abs(bernoulli_log_likelihood(A, theta_from_assignment(z, Q)) - expected) <= 1e-10


def test_normalized_sq_error_examples():
    t = np.full((3, 3), 0.4)
    assert normalized_sq_error(t, t) == 0.0
    assert normalized_sq_error(np.ones((4, 4)), np.zeros((4, 4))) == 1.0
    assert normalized_sq_error(np.full((2, 2), 0.7), np.full((2, 2), 0.5)) == pytest.approx(0.04)
    with pytest.raises(ValueError):
        normalized_sq_error(np.ones((2, 2)), np.ones((3, 3)))


def test_blocked_distance_examples():
    z = one_based((1, 2), 2)
    assert blocked_distance(z, Q2, z, Q2) == 0.0
    Q_star = Q2 - np.array([[0.1, 0], [0, 0]])
    assert blocked_distance(z, Q2, z, Q_star) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        blocked_distance(z, Q2, ClusterAssignment([0, 1, 1], 2), Q2)


def test_blocked_distance_matches_double_sum(rng):
    for _ in range(1000):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 21))
        z = ClusterAssignment(rng.integers(0, k, n), k)
        z_star = ClusterAssignment(rng.integers(0, k, n), k)
        Q, Qs = rng.random((k, k)), rng.random((k, k))
        same = distance_loops(z.labels, Q, z.labels, Qs)
        assert abs(blocked_distance(z, Q, z, Qs) - same) <= 1e-12
        other = distance_loops(z.labels, Q, z_star.labels, Qs)
        assert abs(blocked_distance(z, Q, z_star, Qs) - other) <= 1e-10
        assert abs(direct_distance(z, Q, z_star, Qs) - other) <= 1e-12


def test_project_onto_slice_reconstructs_distance(rng):
    for _ in range(50):
        k = int(rng.integers(1, 4))
        n = int(rng.integers(k, 12))
        z = ClusterAssignment(rng.integers(0, k, n), k)
        theta0 = rng.random((n, n))
        Q = rng.random((k, k))
        w, m, c = project_onto_slice(theta0, z)
        d2 = np.sum((theta_from_assignment(z, Q) - theta0) ** 2)
        assert np.sum(w * (Q - m) ** 2) + c == pytest.approx(d2, abs=1e-10)

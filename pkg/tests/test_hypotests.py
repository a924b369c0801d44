import math

import numpy as np
import pytest

from blockpost.hypotests import (
    HOEFFDING_CONSTANT,
    annulus_test,
    estimate_rejection_rate,
    estimate_test_errors,
    hoeffding_bound,
    point_vs_ball_test,
    sample_in_alternative_ball,
)


def test_point_test_examples():
    v = point_vs_ball_test([[1]], [[0.5]], [[0.9]])
    assert v.reject and v.statistic == pytest.approx(0.2) and v.threshold == pytest.approx(0.04)
    v = point_vs_ball_test([[0]], [[0.5]], [[0.9]])
    assert not v.reject and v.statistic == pytest.approx(-0.2)
    v = point_vs_ball_test(np.ones((2, 2)), np.full((2, 2), 0.5), np.full((2, 2), 0.9))
    assert v.reject and v.statistic == pytest.approx(0.8) and v.threshold == pytest.approx(0.16)


def test_point_test_verdict_matches_comparison(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        t0, t1 = rng.random((n, n)), rng.random((n, n))
        A = (rng.random((n, n)) < 0.5).astype(int)
        v = point_vs_ball_test(A, t0, t1)
        assert v.reject == (v.statistic > v.threshold)


def test_point_test_needs_distinct_points():
    with pytest.raises(ValueError):
        point_vs_ball_test([[1]], [[0.5]], [[0.5]])


def test_hoeffding_constant():
    assert HOEFFDING_CONSTANT == 0.125
    assert hoeffding_bound(8.0) == pytest.approx(math.exp(-1))


def test_error_rates_below_explicit_bound():
    theta0 = np.full((5, 5), 0.5)
    theta1 = theta0 + 0.4
    t1, t2, se = estimate_test_errors(theta0, theta1, trials=20_000, seed=4)
    bound = hoeffding_bound(4.0)
    assert t1 <= bound + 3 * se and t2 <= bound + 3 * se


def test_weak_separation_errors_are_probabilities():
    theta0 = np.full((1, 1), 0.5)
    t1, t2, _ = estimate_test_errors(theta0, theta0 + 0.1, trials=5000, seed=1)
    assert 0 <= t1 <= 1 and 0 <= t2 <= 1
    assert 0.3 < t1 + t2 <= 1.0 + 1e-12


def test_alternative_outside_ball_rejected():
    theta0 = np.full((2, 2), 0.5)
    with pytest.raises(ValueError):
        estimate_test_errors(theta0, theta0 + 0.2, theta_alt=theta0, trials=10)


def test_sample_in_alternative_ball(rng):
    theta0 = np.full((3, 3), 0.5)
    theta1 = theta0 + 0.3
    for _ in range(50):
        alt = sample_in_alternative_ball(theta0, theta1, rng)
        assert np.linalg.norm(alt - theta1) <= np.linalg.norm(theta1 - theta0) / 2
        assert alt.min() >= 0 and alt.max() <= 1


def test_annulus_singleton_and_empty(rng):
    theta0 = np.full((3, 3), 0.4)
    theta1 = rng.random((3, 3))
    for _ in range(50):
        A = (rng.random((3, 3)) < 0.5).astype(int)
        single = annulus_test(A, theta0, [theta1])
        point = point_vs_ball_test(A, theta0, theta1)
        assert single.reject == point.reject
        assert single.statistic == pytest.approx(point.statistic - point.threshold)
    empty = annulus_test(np.ones((3, 3)), theta0, [])
    assert not empty.reject and empty.statistic == -math.inf


def test_enlarging_net_never_shrinks_rejection_region(rng):
    theta0 = np.full((2, 2), 0.5)
    net = [rng.random((2, 2)) for _ in range(6)]
    # every A in {0,1}^{2x2}
    for code in range(16):
        A = np.array([(code >> b) & 1 for b in range(4)]).reshape(2, 2)
        verdicts = [annulus_test(A, theta0, net[:m]).reject for m in range(len(net) + 1)]
        assert all(b >= a for a, b in zip(verdicts, verdicts[1:]))


def test_union_bound_on_net_type_one(rng):
    theta0 = np.full((4, 4), 0.5)
    net = [np.clip(theta0 + rng.normal(0, 0.25, (4, 4)), 0, 1) for _ in range(5)]
    rate, per_point, se = estimate_rejection_rate(theta0, [(theta0, h) for h in net], 20_000, seed=9)
    assert rate <= per_point.sum() + 3 * se
    assert rate >= per_point.max()

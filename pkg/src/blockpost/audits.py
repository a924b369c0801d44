"""Randomized and exhaustive audits behind the ``*-check`` CLI subcommands.

Every audit returns a plain dict with a boolean ``passed`` entry plus the
numbers it was decided on.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from . import geometry, hypotests, inference, priors
from .model import (
    ClusterAssignment,
    TruthSpec,
    blocked_distance,
    direct_distance,
    sample_adjacency,
    sample_truth,
)
from .rates import rate_schedule

# Largest observed log(max ratio) / (n log k) must stay below this.
PRIOR_RATIO_GATE = 2.0


def prior_normalization(max_states: int = 10**4, max_n: int = 13, alpha=0.5, tol=1e-10) -> dict:
    rows = []
    for k in range(1, 11):
        for n in range(1, max_n + 1):
            if k**n > max_states:
                break
            table = priors.assignment_table(n, k, max_states)
            logp = priors.log_prior_from_sizes(priors.table_sizes(table, k), alpha)
            total = float(np.exp(logsumexp(logp)))
            rows.append({"n": n, "k": k, "states": k**n, "total": total, "error": abs(total - 1)})
    return {"rows": rows, "passed": all(r["error"] <= tol for r in rows)}


def prior_ratio_table(ns=range(4, 9), ks=(2, 3), alpha=0.5, gate=PRIOR_RATIO_GATE) -> dict:
    """Exact worst case of ``log(max_z p(z)/p(z_ref)) / (n log k)`` over valid z_ref."""
    rows = []
    for k in ks:
        for n in ns:
            table = priors.assignment_table(n, k)
            sizes = priors.table_sizes(table, k)
            logp = priors.log_prior_from_sizes(sizes, alpha)
            valid = np.all(sizes >= 1, axis=1)
            worst = float(np.max(logp.max() - logp[valid]))
            rows.append({"n": n, "k": k, "valid_refs": int(valid.sum()),
                         "max_log_ratio": worst, "c_emp": worst / (n * math.log(k))})
    return {"rows": rows, "c_emp": max(r["c_emp"] for r in rows),
            "passed": all(r["c_emp"] <= gate for r in rows)}


def _random_instance(rng, n_max, k_max):
    k = int(rng.integers(1, k_max + 1))
    n = int(rng.integers(k, n_max + 1))
    z = ClusterAssignment(rng.integers(0, k, n), k)
    z_star = ClusterAssignment(rng.integers(0, k, n), k)
    return z, rng.random((k, k)), z_star, rng.random((k, k))


def distance_identities(instances: int = 1000, seed=0) -> dict:
    rng = np.random.default_rng(seed)
    worst_block = worst_split = 0.0
    min_residual = math.inf
    for _ in range(instances):
        z, Q, z_star, Q_star = _random_instance(rng, 20, 4)
        worst_block = max(worst_block, abs(blocked_distance(z, Q, z, Q_star) - direct_distance(z, Q, z, Q_star)))
        z, Q, z_star, Q_star = _random_instance(rng, 12, 4)
        ell, res = geometry.decompose_distance(z, Q, z_star, Q_star)
        d2 = direct_distance(z, Q, z_star, Q_star) ** 2
        worst_split = max(worst_split, abs(ell + res - d2))
        min_residual = min(min_residual, res)
    return {
        "max_block_error": worst_block,
        "max_decomposition_error": worst_split,
        "min_residual": min_residual,
        "passed": worst_block <= 1e-12 and worst_split <= 1e-10 and min_residual >= -1e-12,
    }


def containment(configs: int = 10**4, trials: int = 20, seed=0) -> dict:
    rng = np.random.default_rng(seed)
    violations = inside = 0
    for _ in range(configs):
        z, _, z_star, Q_star = _random_instance(rng, 10, 3)
        t = float(rng.uniform(0.05, 1.0) * z.n)
        v, i = geometry.containment_counts(z, z_star, Q_star, t, trials, rng.integers(2**63))
        violations += v
        inside += i
    return {"configs": configs, "inside_ball": inside, "violations": violations,
            "passed": violations == 0 and inside > 0}


def volumes(samples: int = 10**6, seed=0, rel_tol: float = 0.02) -> dict:
    rows = []
    rng = np.random.default_rng(seed)
    for d in (1, 2):
        W = rng.uniform(0.5, 4.0, size=(d, d))
        exact = geometry.ellipsoid_volume(W)
        est, se = geometry.ellipsoid_volume_mc(W, samples, rng.integers(2**63))
        rows.append({"d": d, "exact": exact, "mc": est, "stderr": se, "rel_error": abs(est - exact) / exact})
    return {"rows": rows, "passed": all(r["rel_error"] <= rel_tol for r in rows)}


def packing(attempts: int = 10**4, n: int = 12, seed=0) -> dict:
    rows = []
    ss = np.random.SeedSequence(seed)
    for k in (1, 2, 3):
        _, _, theta0 = sample_truth(TruthSpec(n, k, 0.1, int(ss.generate_state(1)[0]) + k))
        eps = rate_schedule(n, k).eps
        rng = np.random.default_rng([seed, k])
        z = ClusterAssignment(rng.integers(0, k, n), k)
        for shell in (1, 2, 3, 4):
            ann = geometry.AnnulusSpec.for_shell(theta0, shell, eps)
            net = geometry.greedy_packing(theta0, z, ann, attempts, rng.integers(2**63))
            bound = geometry.packing_bound(shell, k)
            rows.append({"k": k, "shell": shell, "size": len(net), "bound": bound,
                         "coarse_bound": geometry.packing_bound(shell, k, coarse=True)})
    return {"rows": rows, "passed": all(r["size"] <= r["bound"] <= r["coarse_bound"] for r in rows)}


POWER_CONFIGS = ((5, 0.4), (10, 0.3), (10, 0.4))  # n, |theta1 - theta0|; n^2 d^2 = 4, 9, 16


def power_table(trials: int = 10**5, seed=0, alt_points: int = 0) -> dict:
    """Point-test error rates against the explicit Hoeffding bound.

    With ``alt_points > 0`` the type-II error is also estimated at that many
    random points of the alternative ball, each checked on its own.
    """
    rows = []
    ss = np.random.SeedSequence(seed)
    for (n, d), child in zip(POWER_CONFIGS, ss.spawn(len(POWER_CONFIGS))):
        theta0 = np.full((n, n), 0.5)
        theta1 = theta0 + d
        sq = n * n * d * d
        bound = hypotests.hoeffding_bound(sq)
        seeds = child.spawn(alt_points + 1)
        t1, t2, se = hypotests.estimate_test_errors(theta0, theta1, None, trials, seeds[0])
        ok = t1 <= bound + 3 * se and t2 <= bound + 3 * se
        worst_alt = math.nan
        rng = np.random.default_rng(child.generate_state(1)[0])
        for s in seeds[1:]:
            alt = hypotests.sample_in_alternative_ball(theta0, theta1, rng)
            _, t2_alt, se_alt = hypotests.estimate_test_errors(theta0, theta1, alt, trials, s)
            worst_alt = t2_alt if math.isnan(worst_alt) else max(worst_alt, t2_alt)
            ok = ok and t2_alt <= bound + 3 * se_alt
        rows.append({"sq_separation": sq, "bound": bound, "type1": t1, "type2": t2,
                     "worst_alt_type2": worst_alt, "stderr": se, "ok": ok})
    return {"rows": rows, "passed": all(r["ok"] for r in rows)}


def oracle_check(n: int = 6, k: int = 2, sweeps: int = 10**5, tv_tol: float = 0.05,
                 seed=0, alpha=0.5) -> dict:
    ss = np.random.SeedSequence(seed).generate_state(3)
    _, _, theta0 = sample_truth(TruthSpec(n, k, 0.1, int(ss[0])))
    A = sample_adjacency(theta0, int(ss[1]))
    exact = inference.exact_posterior_over_assignments(A, k, alpha)
    samples = inference.collapsed_gibbs(A, k, alpha, iters=sweeps + 1000, burnin=1000, seed=int(ss[2]))
    tv = inference.total_variation(inference.empirical_assignment_distribution(samples, k), exact.weights)
    # single-site conditionals from the kernel vs ratios of exact weights
    z = ClusterAssignment(np.arange(n) % k, k)
    worst = 0.0
    for i in range(n):
        cond = inference.site_conditional(A, z, i, alpha)
        idx = []
        for r in range(k):
            lab = z.labels.copy()
            lab[i] = r
            idx.append(inference.assignment_index(lab, k))
        w = exact.weights[idx]
        worst = max(worst, float(np.max(np.abs(cond - w / w.sum()))))
    return {"n": n, "k": k, "sweeps": sweeps, "tv": tv, "tv_tol": tv_tol,
            "max_conditional_error": worst, "passed": tv <= tv_tol and worst <= 1e-10}


def evidence(n: int = 6, k: int = 2, C: float = 2.0, replicates: int = 100, seed=0,
             mc_samples: int = 20_000, min_rate: float = 0.9) -> dict:
    rows = []
    for rep, child in enumerate(np.random.SeedSequence(seed).spawn(replicates)):
        s = child.generate_state(3)
        _, _, theta0 = sample_truth(TruthSpec(n, k, 0.1, int(s[0])))
        A = sample_adjacency(theta0, int(s[1]))
        log_dn, log_bound, ok = inference.evidence_lower_bound_check(
            A, theta0, k, 0.5, C, mc_samples=mc_samples, seed=int(s[2]))
        rows.append({"replicate": rep, "log_Dn": log_dn, "log_bound": log_bound, "satisfied": ok})
    rate = float(np.mean([r["satisfied"] for r in rows]))
    return {"rows": rows, "rate": rate, "passed": rate >= min_rate}


__all__ = [
    "prior_normalization",
    "prior_ratio_table",
    "distance_identities",
    "containment",
    "volumes",
    "packing",
    "power_table",
    "oracle_check",
    "evidence",
]

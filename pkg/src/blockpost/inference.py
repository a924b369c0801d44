"""Posterior computation: exact enumeration and collapsed Gibbs sampling.

Q is integrated out under its uniform prior (Beta-Bernoulli conjugacy) and
the mixing proportions under their Dirichlet prior, so the chain runs on the
labels alone. Q is re-drawn from its Beta conditional for each retained
sweep.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

from .model import (
    BlockSufficientStats,
    ClusterAssignment,
    bernoulli_log_likelihood,
    block_stats,
    project_onto_slice,
    theta_from_assignment,
)
from .priors import (
    DEFAULT_ALPHA,
    as_alpha,
    assignment_table,
    log_prior_from_sizes,
    prior_ball_mass,
    table_sizes,
)
from .rates import rate_schedule

__all__ = [
    "PosteriorSample",
    "ExactPosterior",
    "log_marginal_block_likelihood",
    "exact_posterior_over_assignments",
    "site_conditional",
    "collapsed_gibbs",
    "sample_Q_given_z",
    "posterior_mean_theta",
    "posterior_tail_mass",
    "sample_sq_errors",
    "assignment_index",
    "empirical_assignment_distribution",
    "total_variation",
    "evidence_lower_bound_check",
    "format_posterior_csv",
    "parse_posterior_csv",
]

EXACT_BUDGET = 10**5


@dataclass(frozen=True)
class PosteriorSample:
    z: ClusterAssignment
    Q: np.ndarray
    log_post: float
    sweep: int = 0

    def theta(self) -> np.ndarray:
        return theta_from_assignment(self.z, self.Q)


@dataclass(frozen=True)
class ExactPosterior:
    """Posterior over every z, as a lexicographic label table and normalized log-weights."""

    labels: np.ndarray
    k: int
    log_weights: np.ndarray

    @property
    def assignments(self) -> list:
        return [ClusterAssignment(row, self.k) for row in self.labels]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def _log_beta_blocks(edges, pairs):
    edges = np.asarray(edges, dtype=float)
    pairs = np.asarray(pairs, dtype=float)
    return gammaln(edges + 1) + gammaln(pairs - edges + 1) - gammaln(pairs + 2)


def log_marginal_block_likelihood(stats: BlockSufficientStats) -> float:
    """``sum_rs log B(S_rs + 1, N_rs - S_rs + 1)``: the likelihood with Q integrated out."""
    return float(np.sum(_log_beta_blocks(stats.edges, stats.pairs)))


def _batch_block_edges(A, table, k):
    m, n = table.shape
    onehot = np.zeros((m, n, k))
    np.put_along_axis(onehot, table[:, :, None], 1.0, axis=2)
    # edges[b, r, s] = sum_ij onehot[b, i, r] A[i, j] onehot[b, j, s]
    return np.einsum("bir,ij,bjs->brs", onehot, A.astype(float), onehot, optimize=True)


def exact_posterior_over_assignments(A, k: int, alpha=DEFAULT_ALPHA,
                                     budget: int = EXACT_BUDGET, chunk: int = 8192) -> ExactPosterior:
    """Enumerate all k**n labelings and weight each by prior x collapsed likelihood."""
    A = np.asarray(A)
    n = A.shape[0]
    alpha = as_alpha(alpha, k)
    table = assignment_table(n, k, budget)
    logw = np.empty(table.shape[0])
    for start in range(0, table.shape[0], chunk):
        sub = table[start:start + chunk]
        sizes = table_sizes(sub, k)
        edges = _batch_block_edges(A, sub, k)
        pairs = sizes[:, :, None] * sizes[:, None, :]
        logw[start:start + chunk] = (
            log_prior_from_sizes(sizes, alpha)
            + np.sum(_log_beta_blocks(np.rint(edges), pairs), axis=(1, 2))
        )
    return ExactPosterior(table, k, logw - logsumexp(logw))


def _log_evidence(A, k, alpha, budget=EXACT_BUDGET) -> float:
    A = np.asarray(A)
    n = A.shape[0]
    alpha = as_alpha(alpha, k)
    table = assignment_table(n, k, budget)
    sizes = table_sizes(table, k)
    edges = np.rint(_batch_block_edges(A, table, k))
    pairs = sizes[:, :, None] * sizes[:, None, :]
    logw = log_prior_from_sizes(sizes, alpha) + np.sum(_log_beta_blocks(edges, pairs), axis=(1, 2))
    return float(logsumexp(logw))


# ---------------------------------------------------------------- Gibbs kernel


@njit(cache=True)
def _lb(s, m):
    return math.lgamma(s + 1.0) + math.lgamma(m - s + 1.0) - math.lgamma(m + 2.0)


@njit(cache=True)
def _detach(A, z, S, sizes, i, e_out, e_in):
    """Remove node i from the block statistics; fills its edge counts per cluster."""
    k = sizes.size
    n = z.size
    for s in range(k):
        e_out[s] = 0
        e_in[s] = 0
    for j in range(n):
        if j != i:
            e_out[z[j]] += A[i, j]
            e_in[z[j]] += A[j, i]
    old = z[i]
    for s in range(k):
        S[old, s] -= e_out[s]
        S[s, old] -= e_in[s]
    S[old, old] -= A[i, i]
    sizes[old] -= 1


@njit(cache=True)
def _attach(A, z, S, sizes, i, r, e_out, e_in):
    k = sizes.size
    for s in range(k):
        S[r, s] += e_out[s]
        S[s, r] += e_in[s]
    S[r, r] += A[i, i]
    sizes[r] += 1
    z[i] = r


@njit(cache=True)
def _candidate_log_weights(A, S, sizes, alpha, i, e_out, e_in, out):
    """Unnormalized log full conditional of z_i over r (node i detached)."""
    k = sizes.size
    self_loop = A[i, i]
    for r in range(k):
        mr = sizes[r]
        acc = math.log(mr + alpha[r])
        for s in range(k):
            if s == r:
                continue
            ms = sizes[s]
            acc += _lb(S[r, s] + e_out[s], (mr + 1) * ms) - _lb(S[r, s], mr * ms)
            acc += _lb(S[s, r] + e_in[s], ms * (mr + 1)) - _lb(S[s, r], ms * mr)
        acc += _lb(S[r, r] + e_out[r] + e_in[r] + self_loop, (mr + 1) * (mr + 1)) - _lb(S[r, r], mr * mr)
        out[r] = acc


@njit(cache=True)
def _sweeps(A, z, S, sizes, alpha, orders, uniforms):
    """Run ``orders.shape[0]`` sweeps in place; ``uniforms`` drive the categorical draws."""
    k = sizes.size
    e_out = np.zeros(k, dtype=np.int64)
    e_in = np.zeros(k, dtype=np.int64)
    logw = np.zeros(k)
    for t in range(orders.shape[0]):
        for pos in range(orders.shape[1]):
            i = orders[t, pos]
            _detach(A, z, S, sizes, i, e_out, e_in)
            _candidate_log_weights(A, S, sizes, alpha, i, e_out, e_in, logw)
            top = logw.max()
            total = 0.0
            for r in range(k):
                logw[r] = math.exp(logw[r] - top)
                total += logw[r]
            target = uniforms[t, pos] * total
            r = 0
            cum = logw[0]
            while cum < target and r < k - 1:
                r += 1
                cum += logw[r]
            _attach(A, z, S, sizes, i, r, e_out, e_in)


def _init_state(A, z: ClusterAssignment):
    stats = block_stats(A, z)
    return (
        np.ascontiguousarray(A, dtype=np.int64),
        z.labels.copy(),
        stats.edges.astype(np.int64).copy(),
        z.sizes.astype(np.int64).copy(),
    )


def site_conditional(A, z: ClusterAssignment, i: int, alpha=DEFAULT_ALPHA) -> np.ndarray:
    """Full conditional of z_i given the other labels, from the sampler's incremental kernel."""
    A64, labels, S, sizes = _init_state(A, z)
    alpha = as_alpha(alpha, z.k)
    e_out = np.zeros(z.k, dtype=np.int64)
    e_in = np.zeros(z.k, dtype=np.int64)
    logw = np.zeros(z.k)
    _detach(A64, labels, S, sizes, i, e_out, e_in)
    _candidate_log_weights(A64, S, sizes, alpha, i, e_out, e_in, logw)
    return np.exp(logw - logsumexp(logw))


def _log_post(sizes, edges, Q, alpha) -> float:
    pairs = np.outer(sizes, sizes)
    with np.errstate(divide="ignore"):
        ll = np.sum(np.where(edges > 0, edges * np.log(Q), 0.0)) + np.sum(
            np.where(pairs - edges > 0, (pairs - edges) * np.log1p(-Q), 0.0)
        )
    return float(log_prior_from_sizes(sizes, alpha) + ll)


def collapsed_gibbs(A, k: int, alpha=DEFAULT_ALPHA, iters: int = 12_000, burnin: int = 2_000,
                    thin: int = 1, seed=0, scan: str = "systematic",
                    init: ClusterAssignment | None = None) -> list:
    """Collapsed Gibbs sampler over labels, with Q drawn per retained sweep.

    ``iters`` counts all sweeps including the ``burnin`` discarded ones; every
    ``thin``-th sweep after burn-in is retained. The chain starts from uniform
    random labels unless ``init`` is given.
    """
    if not iters > burnin >= 0:
        raise ValueError("need iters > burnin >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    if scan not in ("systematic", "random"):
        raise ValueError(f"unknown scan order {scan!r}")
    A = np.asarray(A)
    n = A.shape[0]
    alpha = as_alpha(alpha, k)
    rng = np.random.default_rng(seed)
    if init is None:
        init = ClusterAssignment(rng.integers(0, k, size=n), k)
    A64, z, S, sizes = _init_state(A, init)
    systematic = np.arange(n, dtype=np.int64)

    def run(count):
        if scan == "systematic":
            orders = np.broadcast_to(systematic, (count, n))
        else:
            orders = np.argsort(rng.random((count, n)), axis=1)
        _sweeps(A64, z, S, sizes, alpha, np.ascontiguousarray(orders), rng.random((count, n)))

    samples = []
    if burnin:
        for start in range(0, burnin, 1024):
            run(min(1024, burnin - start))
    sweep = burnin
    while sweep + thin <= iters:
        run(thin)
        sweep += thin
        pairs = np.outer(sizes, sizes)
        Q = rng.beta(S + 1.0, pairs - S + 1.0)
        samples.append(
            PosteriorSample(ClusterAssignment(z.copy(), k), Q, _log_post(sizes, S, Q, alpha), sweep)
        )
    return samples


def sample_Q_given_z(A, z: ClusterAssignment, seed=0) -> np.ndarray:
    """Independent ``Beta(S_rs + 1, N_rs - S_rs + 1)`` draws per block."""
    stats = block_stats(A, z)
    rng = np.random.default_rng(seed)
    return rng.beta(stats.edges + 1.0, stats.pairs - stats.edges + 1.0)


def _group_by_assignment(samples):
    groups: dict[bytes, list] = {}
    for s in samples:
        groups.setdefault(s.z.labels.tobytes(), []).append(s)
    return groups.values()


def posterior_mean_theta(samples) -> np.ndarray:
    """Entrywise average of theta^{z,Q} over the samples."""
    if not samples:
        raise ValueError("no samples")
    total = None
    for group in _group_by_assignment(samples):
        q_sum = np.sum([s.Q for s in group], axis=0)
        part = theta_from_assignment(group[0].z, q_sum)
        total = part if total is None else total + part
    return total / len(samples)


def sample_sq_errors(samples, theta0) -> np.ndarray:
    """``||theta^{z,Q} - theta0||^2 / n^2`` for each sample, in sample order."""
    theta0 = np.asarray(theta0, dtype=float)
    n = theta0.shape[0]
    cache = {}
    out = np.empty(len(samples))
    for idx, s in enumerate(samples):
        key = s.z.labels.tobytes()
        if key not in cache:
            cache[key] = project_onto_slice(theta0, s.z)
        w, m, c = cache[key]
        out[idx] = (np.sum(w * (s.Q - m) ** 2) + c) / n**2
    return out


def posterior_tail_mass(samples, theta0, M: float, eps_n: float) -> float:
    """Fraction of samples with normalized squared error above ``M^2 eps_n^2``."""
    if not samples:
        raise ValueError("no samples")
    if M < 0:
        raise ValueError("M must be nonnegative")
    errs = sample_sq_errors(samples, theta0)
    return float(np.mean(errs > M * M * eps_n * eps_n))


def assignment_index(labels, k: int):
    """Position of a label vector (or rows of a label array) in lexicographic order."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[-1]
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return labels @ powers


def empirical_assignment_distribution(samples, k: int) -> np.ndarray:
    n = samples[0].z.n
    idx = assignment_index(np.stack([s.z.labels for s in samples]), k)
    return np.bincount(idx, minlength=k**n) / len(samples)


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def evidence_lower_bound_check(A, theta0, k: int, alpha=DEFAULT_ALPHA, C: float = 2.0,
                               radius: float | None = None, mc_samples: int = 20_000,
                               seed=0, budget: int = EXACT_BUDGET):
    """Compare the exact evidence ratio against the prior-mass lower bound.

    ``log_Dn`` is the log of the integrated likelihood ratio against theta0;
    ``log_bound = -C n^2 eps_n^2 + log Pi(||theta - theta0|| < radius)`` with
    ``radius = n eps_n`` by default and the prior mass estimated by Monte Carlo.
    Returns ``(log_Dn, log_bound, satisfied)``.
    """
    A = np.asarray(A)
    n = A.shape[0]
    sched = rate_schedule(n, k)
    if radius is None:
        radius = n * sched.eps
    log_dn = _log_evidence(A, k, alpha, budget) - bernoulli_log_likelihood(A, theta0)
    mass, _ = prior_ball_mass(theta0, radius, alpha, k, mc_samples, seed)
    with np.errstate(divide="ignore"):
        log_bound = -C * n * n * sched.eps_sq + float(np.log(mass))
    return log_dn, log_bound, bool(log_dn >= log_bound)


# ---------------------------------------------------------------- CSV dumps


def _q_columns(k):
    if k < 10:
        return [f"Q_{r}{s}" for r in range(1, k + 1) for s in range(1, k + 1)]
    return [f"Q_{r}_{s}" for r in range(1, k + 1) for s in range(1, k + 1)]


def format_posterior_csv(samples) -> str:
    """One row per sample: ``sweep, z_1..z_n, Q_11..Q_kk, log_post`` (1-based labels)."""
    if not samples:
        raise ValueError("no samples")
    n, k = samples[0].z.n, samples[0].z.k
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep"] + [f"z_{i}" for i in range(1, n + 1)] + _q_columns(k) + ["log_post"])
    for s in samples:
        w.writerow(
            [s.sweep]
            + [int(v) for v in s.z.one_based()]
            + [repr(float(q)) for q in s.Q.ravel()]
            + [repr(float(s.log_post))]
        )
    return buf.getvalue()


def parse_posterior_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    n = sum(1 for h in header if h.startswith("z_"))
    kk = sum(1 for h in header if h.startswith("Q_"))
    k = int(round(math.sqrt(kk)))
    out = []
    for row in body:
        z = ClusterAssignment.from_one_based([int(v) for v in row[1:1 + n]], k)
        Q = np.array([float(v) for v in row[1 + n:1 + n + kk]]).reshape(k, k)
        out.append(PosteriorSample(z, Q, float(row[-1]), int(row[0])))
    return out

"""Rate-study experiments: config, per-cell runs, CSV/SVG reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .graphio import atomic_write_text
from .inference import collapsed_gibbs, posterior_mean_theta, sample_sq_errors
from .model import TruthSpec, normalized_sq_error, sample_adjacency, sample_truth
from .rates import RateSchedule, rate_schedule

__all__ = [
    "RateSchedule",
    "rate_schedule",
    "ExperimentConfig",
    "RateStudyRow",
    "cell_seed",
    "run_cell",
    "run_rate_study",
    "summarize",
    "emit_report",
    "read_report",
    "format_rows_csv",
    "parse_rows_csv",
]

RATE_COLUMNS = ["n", "k", "replicate", "mse", "mse_over_eps_sq", "tail_mass", "status"]


@dataclass
class ExperimentConfig:
    n_grid: list = field(default_factory=lambda: [32, 64, 128, 256])
    k: int = 2
    delta: float = 0.1
    M: float = 10.0
    replicates: int = 10
    iters: int = 12_000
    burnin: int = 2_000
    thin: int = 1
    alpha: float = 0.5
    master_seed: int = 0
    M_grid: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 5.0, 10.0])
    workers: int = 1

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        self.M_grid = [float(m) for m in self.M_grid]
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be nonempty and strictly ascending")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.M <= 0:
            raise ValueError("M must be positive")
        if not self.iters > self.burnin >= 0:
            raise ValueError("need iters > burnin >= 0")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class RateStudyRow:
    n: int
    k: int
    replicate: int
    mse: float
    mse_over_eps_sq: float
    tail_mass: float
    wall_time: float = 0.0
    status: str = "ok"
    tail_curve: tuple = ()  # ((M, tail mass), ...)


def cell_seed(master_seed: int, n: int, k: int, replicate: int) -> int:
    """Stable 64-bit seed: first 8 bytes of blake2b over ``"master:n:k:replicate"``."""
    key = f"{master_seed}:{n}:{k}:{replicate}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def run_cell(config: ExperimentConfig, n: int, replicate: int) -> RateStudyRow:
    start = time.perf_counter()
    k = config.k
    sched = rate_schedule(n, k)
    try:
        truth_seed, data_seed, chain_seed = np.random.SeedSequence(
            cell_seed(config.master_seed, n, k, replicate)
        ).generate_state(3)
        _, _, theta0 = sample_truth(TruthSpec(n, k, config.delta, int(truth_seed)))
        A = sample_adjacency(theta0, int(data_seed))
        samples = collapsed_gibbs(A, k, config.alpha, config.iters, config.burnin,
                                  config.thin, int(chain_seed))
        mse = normalized_sq_error(posterior_mean_theta(samples), theta0)
        errs = sample_sq_errors(samples, theta0)
        tail = float(np.mean(errs > config.M**2 * sched.eps_sq))
        curve = tuple((m, float(np.mean(errs > m * m * sched.eps_sq))) for m in config.M_grid)
        status = "ok"
    except Exception as exc:  # recorded in the report, never dropped
        mse = tail = math.nan
        curve = ()
        status = f"error: {type(exc).__name__}: {exc}"
    return RateStudyRow(n, k, replicate, mse, mse / sched.eps_sq, tail,
                        time.perf_counter() - start, status, curve)


def _run_cell_args(args):
    return run_cell(*args)


def run_rate_study(config: ExperimentConfig) -> list:
    """Run every (n, replicate) cell; rows come back ordered by (n, replicate)."""
    jobs = [(config, n, r) for n in config.n_grid for r in range(config.replicates)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_cell_args, jobs))
    else:
        rows = [run_cell(*job) for job in jobs]
    return sorted(rows, key=lambda row: (row.n, row.replicate))


def summarize(rows) -> list:
    """Per-n means over successful replicates."""
    out = []
    for n in sorted({r.n for r in rows}):
        ok = [r for r in rows if r.n == n and r.status == "ok"]
        k = ok[0].k if ok else rows[0].k
        out.append({
            "n": n,
            "eps_sq": rate_schedule(n, k).eps_sq,
            "mean_mse": float(np.mean([r.mse for r in ok])) if ok else math.nan,
            "mean_ratio": float(np.mean([r.mse_over_eps_sq for r in ok])) if ok else math.nan,
            "mean_tail_mass": float(np.mean([r.tail_mass for r in ok])) if ok else math.nan,
            "replicates": len(ok),
        })
    return out


# ---------------------------------------------------------------- reports


def _fmt(x: float) -> str:
    return repr(float(x))


def format_rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATE_COLUMNS)
    for r in rows:
        w.writerow([r.n, r.k, r.replicate, _fmt(r.mse), _fmt(r.mse_over_eps_sq),
                    _fmt(r.tail_mass), r.status])
    return buf.getvalue()


def parse_rows_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != RATE_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    return [
        RateStudyRow(int(d["n"]), int(d["k"]), int(d["replicate"]), float(d["mse"]),
                     float(d["mse_over_eps_sq"]), float(d["tail_mass"]), status=d["status"])
        for d in reader
    ]


def _timing_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "k", "replicate", "wall_time"])
    for r in rows:
        w.writerow([r.n, r.k, r.replicate, f"{r.wall_time:.6f}"])
    return buf.getvalue()


def _tail_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "k", "replicate", "M", "tail_mass"])
    for r in rows:
        for m, mass in r.tail_curve:
            w.writerow([r.n, r.k, r.replicate, _fmt(m), _fmt(mass)])
    return buf.getvalue()


def _rate_curve_svg(rows, M: float) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = [s for s in summarize(rows) if not math.isnan(s["mean_mse"])]
    ns = [s["n"] for s in summary]
    with matplotlib.rc_context({"svg.hashsalt": "blockpost", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(ns, [s["mean_mse"] for s in summary], "o-", label="mean MSE of posterior mean")
        ax.loglog(ns, [M * M * s["eps_sq"] for s in summary], "s--", label=f"M^2 eps_n^2 (M={M:g})")
        ax.loglog(ns, [s["eps_sq"] for s in summary], ":", label="eps_n^2")
        ax.set_xlabel("n")
        ax.set_ylabel("normalized squared error")
        ax.legend(fontsize=8)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def emit_report(rows, out_dir, M: float = 10.0) -> dict:
    """Write ``rate_study.csv``, ``tail_mass.csv``, ``timing.csv`` and ``rate_curve.svg``.

    ``rate_study.csv`` holds only seed-determined values; wall-clock times go
    to ``timing.csv`` so the main table is byte-reproducible.
    """
    if not rows:
        raise ValueError("no rows to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "rate_study": out / "rate_study.csv",
        "tail_mass": out / "tail_mass.csv",
        "timing": out / "timing.csv",
        "rate_curve": out / "rate_curve.svg",
    }
    atomic_write_text(paths["rate_study"], format_rows_csv(rows))
    atomic_write_text(paths["tail_mass"], _tail_csv(rows))
    atomic_write_text(paths["timing"], _timing_csv(rows))
    atomic_write_text(paths["rate_curve"], _rate_curve_svg(rows, M))
    return paths


def read_report(out_dir) -> list:
    """Inverse of :func:`emit_report` (timings and tail curves re-attached when present)."""
    out = Path(out_dir)
    rows = parse_rows_csv((out / "rate_study.csv").read_text())
    index = {(r.n, r.replicate): r for r in rows}
    timing = out / "timing.csv"
    if timing.exists():
        for d in csv.DictReader(io.StringIO(timing.read_text())):
            index[int(d["n"]), int(d["replicate"])].wall_time = float(d["wall_time"])
    tails = out / "tail_mass.csv"
    if tails.exists():
        curves: dict = {}
        for d in csv.DictReader(io.StringIO(tails.read_text())):
            curves.setdefault((int(d["n"]), int(d["replicate"])), []).append(
                (float(d["M"]), float(d["tail_mass"])))
        for key, curve in curves.items():
            index[key].tail_curve = tuple(curve)
    return rows

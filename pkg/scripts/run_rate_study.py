"""Run a rate study from a JSON config and print the per-n summary.

    python3 scripts/run_rate_study.py configs/default_rate_study.json --out results/rate
"""
import argparse
import time
from pathlib import Path

from blockpost.harness import ExperimentConfig, emit_report, run_rate_study, summarize


def main():
    p = argparse.ArgumentParser()
    p.add_argument("config")
    p.add_argument("--out", default="results/rate_study")
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args()

    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.workers is not None:
        cfg.workers = args.workers
    start = time.perf_counter()
    rows = run_rate_study(cfg)
    emit_report(rows, args.out, cfg.M)
    print(f"{'n':>5} {'eps^2':>10} {'mean mse':>11} {'mse/eps^2':>10} {'tail@M':>7}")
    for s in summarize(rows):
        print(f"{s['n']:>5} {s['eps_sq']:>10.4g} {s['mean_mse']:>11.4g} "
              f"{s['mean_ratio']:>10.4g} {s['mean_tail_mass']:>7.3f}")
    failed = [r for r in rows if r.status != "ok"]
    print(f"{len(rows)} cells, {len(failed)} failed, {time.perf_counter() - start:.0f}s -> {args.out}")


if __name__ == "__main__":
    main()

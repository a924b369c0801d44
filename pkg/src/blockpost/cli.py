"""Command-line entry point.

Exit codes: 0 success, 1 an audit failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import audits
from .graphio import atomic_write_text, read_adjacency, write_adjacency
from .harness import ExperimentConfig, emit_report, run_rate_study, summarize
from .inference import collapsed_gibbs, format_posterior_csv, posterior_mean_theta
from .model import TruthSpec, sample_adjacency, sample_truth

EXIT_OK, EXIT_AUDIT_FAILED, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _print_rows(rows):
    if not rows:
        return
    keys = list(rows[0])
    print("\t".join(keys))
    for r in rows:
        print("\t".join(f"{r[k]:.6g}" if isinstance(r[k], float) else str(r[k]) for k in keys))


def _report(result: dict) -> int:
    _print_rows(result.get("rows", []))
    for key, value in result.items():
        if key not in ("rows", "passed"):
            print(f"{key}: {value}")
    print("PASS" if result["passed"] else "FAIL")
    return EXIT_OK if result["passed"] else EXIT_AUDIT_FAILED


def cmd_simulate(args) -> int:
    z, Q, theta = sample_truth(TruthSpec(args.n, args.k, args.delta, args.seed))
    A = sample_adjacency(theta, args.seed + 1)
    out = Path(args.out)
    write_adjacency(A, out / "adjacency.txt", args.format)
    truth = {"n": args.n, "k": args.k, "delta": args.delta, "seed": args.seed,
             "z": [int(v) for v in z.one_based()], "Q": Q.tolist()}
    atomic_write_text(out / "truth.json", json.dumps(truth, indent=2) + "\n")
    print(f"wrote {out / 'adjacency.txt'} and {out / 'truth.json'}")
    return EXIT_OK


def cmd_fit(args) -> int:
    A = read_adjacency(args.adjacency)
    samples = collapsed_gibbs(A, args.k, args.alpha, args.iters, args.burnin, args.thin,
                              args.seed, scan=args.scan)
    out = Path(args.out)
    atomic_write_text(out / "posterior.csv", format_posterior_csv(samples))
    theta_hat = posterior_mean_theta(samples)
    atomic_write_text(out / "theta_hat.txt",
                      "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in theta_hat))
    print(f"{len(samples)} samples -> {out / 'posterior.csv'}, {out / 'theta_hat.txt'}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    tol = args.tv_tol if args.tv_tol is not None else (0.05 if args.k == 2 else 0.1)
    return _report(audits.oracle_check(args.n, args.k, args.sweeps, tol, args.seed))


def cmd_rate_study(args) -> int:
    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.workers is not None:
        cfg.workers = args.workers
    rows = run_rate_study(cfg)
    paths = emit_report(rows, args.out, cfg.M)
    _print_rows(summarize(rows))
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_AUDIT_FAILED


def cmd_geometry_check(args) -> int:
    results = {
        "distance identities": audits.distance_identities(min(args.trials, 1000), args.seed),
        "containment": audits.containment(args.trials, seed=args.seed),
        "volume": audits.volumes(seed=args.seed),
        "packing": audits.packing(args.attempts, seed=args.seed),
    }
    ok = True
    for name, res in results.items():
        print(f"== {name}")
        ok &= _report(res) == EXIT_OK
    return EXIT_OK if ok else EXIT_AUDIT_FAILED


def cmd_test_power(args) -> int:
    return _report(audits.power_table(args.trials, args.seed, args.alt_points))


def cmd_prior_check(args) -> int:
    print("== normalization")
    ok = _report(audits.prior_normalization(args.budget)) == EXIT_OK
    print("== prior ratio")
    ok &= _report(audits.prior_ratio_table()) == EXIT_OK
    return EXIT_OK if ok else EXIT_AUDIT_FAILED


def cmd_evidence_check(args) -> int:
    return _report(audits.evidence(args.n, args.k, args.C, args.replicates, args.seed,
                                   min_rate=args.min_rate))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="blockpost", description="Bayesian stochastic block model workbench")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="draw a truth and an adjacency matrix")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("edgelist", "dense"), default="edgelist")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="collapsed Gibbs on an adjacency file")
    s.add_argument("--adjacency", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--iters", type=int, default=12_000)
    s.add_argument("--burnin", type=int, default=2_000)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--scan", choices=("systematic", "random"), default="systematic")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("oracle-check", help="Gibbs vs exact enumeration")
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--sweeps", type=int, default=100_000)
    s.add_argument("--tv-tol", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("rate-study", help="run a contraction-rate sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_rate_study)

    s = sub.add_parser("geometry-check", help="distance, containment, volume and packing audits")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--attempts", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_geometry_check)

    s = sub.add_parser("test-power", help="Monte-Carlo error rates of the point test")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--alt-points", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_test_power)

    s = sub.add_parser("prior-check", help="prior normalization and ratio table")
    s.add_argument("--budget", type=int, default=10_000)
    s.set_defaults(func=cmd_prior_check)

    s = sub.add_parser("evidence-check", help="evidence lower-bound satisfaction rate")
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--C", type=float, default=2.0)
    s.add_argument("--replicates", type=int, default=100)
    s.add_argument("--min-rate", type=float, default=0.9)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_evidence_check)
    return p


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    return args.func(args)


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()

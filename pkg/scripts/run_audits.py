"""Run every audit at full size and print one line per audit.

    python3 scripts/run_audits.py [--quick]
"""
import argparse
import time

from blockpost import audits


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--quick", action="store_true", help="smaller budgets for a fast smoke run")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    scale = 10 if args.quick else 1
    jobs = {
        "prior normalization": lambda: audits.prior_normalization(),
        "prior ratio": lambda: audits.prior_ratio_table(),
        "distance identities": lambda: audits.distance_identities(1000, args.seed),
        "containment": lambda: audits.containment(10**4 // scale, seed=args.seed),
        "volume": lambda: audits.volumes(10**6 // scale, args.seed),
        "packing": lambda: audits.packing(10**4 // scale, seed=args.seed),
        "test power": lambda: audits.power_table(10**5 // scale, args.seed, 20 // scale),
        "oracle n=6 k=2": lambda: audits.oracle_check(6, 2, 10**5 // scale, 0.05, args.seed),
        "oracle n=5 k=3": lambda: audits.oracle_check(5, 3, 10**5 // scale, 0.1, args.seed),
        "evidence": lambda: audits.evidence(replicates=100 // scale, seed=args.seed),
    }
    ok = True
    for name, job in jobs.items():
        start = time.perf_counter()
        res = job()
        ok &= res["passed"]
        extras = {k: v for k, v in res.items() if k not in ("rows", "passed")}
        print(f"{'PASS' if res['passed'] else 'FAIL'}  {name:<22} {time.perf_counter() - start:6.1f}s  {extras}")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()

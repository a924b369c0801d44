"""Plot posterior tail mass against M from a rate-study output directory.

    python3 scripts/tail_mass_curve.py results/rate_study
"""
import argparse
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from blockpost.harness import read_report


def main():
    p = argparse.ArgumentParser()
    p.add_argument("report_dir")
    args = p.parse_args()
    rows = read_report(args.report_dir)
    curves = defaultdict(lambda: defaultdict(list))
    for r in rows:
        for m, mass in r.tail_curve:
            curves[r.n][m].append(mass)
    fig, ax = plt.subplots(figsize=(5, 4))
    for n, by_m in sorted(curves.items()):
        ms = sorted(by_m)
        ax.plot(ms, [sum(by_m[m]) / len(by_m[m]) for m in ms], "o-", label=f"n={n}")
    ax.set_xscale("log")
    ax.set_xlabel("M")
    ax.set_ylabel("mean posterior tail mass")
    ax.legend()
    out = Path(args.report_dir) / "tail_mass.svg"
    fig.savefig(out, format="svg", metadata={"Date": None})
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Scaling experiment: wall time and op counts vs. attribute count.

Runs both schemes across all security levels, writes the raw CSV and a
summary, fits the encrypt-time linear model per level, and (with
matplotlib installed) renders SVG plots.

Usage:
    python scripts/bench_scaling.py --out results/ [--trials 5]
        [--attrs 1..30] [--levels 80,112,128] [--plot]
"""

import argparse
from pathlib import Path

from abekit.bench import BenchConfig, linear_fit, plot_summary, run_bench


def parse_range(spec):
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in spec.split(","))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--attrs", default="1..30")
    ap.add_argument("--levels", default="80,112,128")
    ap.add_argument("--shape", default="and", choices=("and", "or", "random"))
    ap.add_argument("--profile", default="edison")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = BenchConfig(
        schemes=("cp", "kp"),
        levels=tuple(int(x) for x in args.levels.split(",")),
        attr_counts=parse_range(args.attrs),
        trials=args.trials,
        shape=args.shape,
        profile=args.profile,
        seed=args.seed,
    )
    records, summary = run_bench(config, csv_path=out / "bench.csv",
                                 summary_path=out / "summary.csv")
    print(f"wrote {len(records)} rows to {out / 'bench.csv'}")

    for scheme in config.schemes:
        for level in config.levels:
            pts = [(r["n_attrs"], r["mean_ms"]) for r in summary
                   if r["scheme"] == scheme and r["op"] == "encrypt"
                   and r["level"] == level]
            if len(pts) < 2:
                continue
            pts.sort()
            slope, intercept, r2 = linear_fit([p[0] for p in pts],
                                              [p[1] for p in pts])
            print(f"{scheme} encrypt @ {level} bits: "
                  f"{slope:.2f} ms/attr + {intercept:.2f} ms (R²={r2:.4f})")

    if args.plot:
        for path in plot_summary(summary, out / "plots"):
            print(f"plot: {path}")


if __name__ == "__main__":
    main()

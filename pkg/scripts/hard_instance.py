#!/usr/bin/env python3
"""Impurity growth on the conjunctions-plus-majority instance.

Preset: l=8 (w=2, m=4, terms block of 8 coordinates) with a k-bit
majority attached, budget 256, one run per builtin impurity.  Each run
writes the exact error curve, per-size Monte-Carlo estimates, and the
fraction of inputs whose root-to-leaf path reads a term coordinate
before clearing the majority cutoff.
"""

import argparse
import json
import sys

from topdowndt.cli import ExperimentConfig, run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=8, dest="ell")
    ap.add_argument("--k", type=int, default=63, help="majority width (odd)")
    ap.add_argument("--budget", type=int, default=256)
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--threshold", type=float, default=0.35)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/hard")
    args = ap.parse_args(argv)

    worst = 1
    for name in ("gini", "entropy", "kearns-mansour"):
        cfg = ExperimentConfig(
            kind="hard",
            ell=args.ell,
            k=args.k,
            impurity=name,
            budget=args.budget,
            samples=args.samples,
            threshold=args.threshold,
            seed=args.seed,
            out=f"{args.out}/{name}",
        )
        bundle = run(cfg)
        s = bundle.summary
        num, den = s["final_distance"].split("/")
        print(
            f"{name}: final size {s['final_size']}, exact distance {s['final_distance']}"
            f" ({int(num) / int(den):.4f}),"
            f" mc {s['mc_estimate']:.4f} +- {s['mc_halfwidth']:.4f},"
            f" above {args.threshold}: {s['exact_above_threshold']}"
        )
        worst = min(worst, int(num) / int(den))
    print(json.dumps({"k": args.k, "budget": args.budget, "min_final_error": worst}))
    return 0


if __name__ == "__main__":
    sys.exit(main())

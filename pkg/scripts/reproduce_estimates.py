#!/usr/bin/env python3
"""Recompute the headline analyses for every bundled dataset.

For each dataset: the non-overlapping pairs, the every-model audit, the
stepwise model choice at the default threshold, and (optionally) bootstrap
intervals.  Point estimates are deterministic; pass --nboot to add intervals.
"""

import argparse
import time

from caprecap import (
    BUILTIN_NAMES,
    bootstrap_estimate,
    builtin_dataset,
    check_all_models,
    estimate_population,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--datasets", default=",".join(BUILTIN_NAMES))
    parser.add_argument("--pthresh", type=float, default=0.02)
    parser.add_argument("--nboot", type=int, default=0)
    parser.add_argument("--seed", type=int, default=2)
    parser.add_argument("--skip-audit", action="store_true")
    args = parser.parse_args()

    for name in args.datasets.split(","):
        d = builtin_dataset(name.strip())
        nonover = sorted(d.pair_label(p) for p in d.nonoverlapping_pairs())
        print(f"== {name}: t={d.t}, m={d.m}, {len(nonover)} non-overlapping pairs")
        if nonover:
            print(f"   non-overlapping: {', '.join(nonover)}")
        if not args.skip_audit:
            started = time.perf_counter()
            audit = check_all_models(d)
            status = "all models estimable" if audit.all_ok else f"{len(audit.failures)} failing models"
            print(f"   audit: {audit.tested} LPs, {status} ({time.perf_counter() - started:.1f}s)")
        result, trail = estimate_population(d, method="stepwise", threshold=args.pthresh)
        chosen = sorted(d.pair_label(p) for p in result.spec.pairs)
        print(f"   stepwise({args.pthresh:g}): pairs {chosen or ['none']}, "
              f"estimate {result.population_estimate:.1f}")
        if args.nboot > 0:
            boot = bootstrap_estimate(d, args.pthresh, n_boot=args.nboot, seed=args.seed)
            for level, (lo, hi) in sorted(boot.intervals.items()):
                print(f"   {level:.0%} interval: ({lo:.1f}, {hi:.1f})")
        print()


if __name__ == "__main__":
    main()

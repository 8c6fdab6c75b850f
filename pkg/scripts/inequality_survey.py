#!/usr/bin/env python3
"""Sweep the seeded field family through every inequality check and print
per-inequality constant statistics at two resolutions."""

import argparse

import numpy as np

from channelflow.fields import Grid
from channelflow.inequalities import FamilySpec, sweep_family


def summarize(rows):
    by_name = {}
    for _, rep in rows:
        by_name.setdefault(rep.name, []).append(rep.empirical_constant)
    return {name: (min(cs), float(np.median(cs)), max(cs)) for name, cs in by_name.items()}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args()

    base = Grid(32, 32, 17)
    fine = Grid(64, 64, 33)
    spec = FamilySpec.for_grid(base, count=args.count, seed=args.seed)

    stats_base = summarize(sweep_family(base, spec))
    stats_fine = summarize(sweep_family(fine, spec))

    print(f"{'inequality':14s} {'min':>10s} {'median':>10s} {'max(N)':>10s} "
          f"{'max(2N)':>10s} {'drift':>9s}")
    for name in sorted(stats_base):
        lo, med, hi = stats_base[name]
        hi2 = stats_fine[name][2]
        drift = abs(hi2 - hi) / hi if hi > 0 else 0.0
        print(f"{name:14s} {lo:10.4f} {med:10.4f} {hi:10.4f} {hi2:10.4f} {drift:8.2e}")


if __name__ == "__main__":
    main()

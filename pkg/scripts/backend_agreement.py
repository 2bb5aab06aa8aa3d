#!/usr/bin/env python3
"""Cross-check the three state backends on one small instance: exact branch
enumeration with the density backend vs. the classical diagonal enumeration
(must agree to 1e-9) and vs. empirical trajectory sampling (total variation
distance reported against the sample-size tolerance).

Example:
    python3 scripts/backend_agreement.py --samples 10000 --threshold 3
"""

import argparse
import collections
import json
import sys

from qlll.instances import generate_classical_instance
from qlll.solver import SolverConfig, derive_trial_seed, run
from qlll.verifiers import enumerate_outcome_distribution


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("-n", type=int, default=3)
    parser.add_argument("-k", type=int, default=2)
    parser.add_argument("-m", type=int, default=2)
    parser.add_argument("-g", type=int, default=3)
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--threshold", type=int, default=3)
    parser.add_argument("--tv-tol", type=float, default=0.02)
    args = parser.parse_args(argv)

    inst = generate_classical_instance(args.n, args.k, args.m, args.g,
                                       args.seed)
    exact = enumerate_outcome_distribution(inst, args.threshold,
                                           backend="density")
    diagonal = enumerate_outcome_distribution(inst, args.threshold,
                                              backend="diagonal")
    diag_diff = max(abs(exact[key] - diagonal.get(key, 0.0)) for key in exact)

    counts = collections.Counter()
    for trial in range(args.samples):
        rec = run(inst, SolverConfig(seed=derive_trial_seed(1, trial),
                                     backend="trajectory",
                                     threshold_override=args.threshold))
        counts[rec.outcome_string] += 1
    tv = 0.5 * sum(abs(counts.get(key, 0) / args.samples - exact.get(key, 0.0))
                   for key in set(counts) | set(exact))

    summary = {
        "branches": len(exact),
        "diagonal_vs_density_max_diff": diag_diff,
        "trajectory_vs_density_tv": tv,
        "samples": args.samples,
        "holds": diag_diff <= 1e-9 and tv <= args.tv_tol,
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0 if summary["holds"] else 1


if __name__ == "__main__":
    sys.exit(main())

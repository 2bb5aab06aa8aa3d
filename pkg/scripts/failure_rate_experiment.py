#!/usr/bin/env python3
"""Empirical failure-rate experiment: generate a classical instance, run a
seeded trial batch, and compare the observed failure rate against the
analytic bound and the 3-sigma sampling band.

Example:
    python3 scripts/failure_rate_experiment.py -n 20 -k 3 -m 12 -g 2 \
        --trials 1000 --delta 0.25 --seed 7
"""

import argparse
import json
import sys

from qlll.instances import generate_classical_instance
from qlll.solver import SolverConfig, derive_params, derive_trial_seed, run
from qlll.verifiers import check_failure_bound


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("-n", type=int, default=20)
    parser.add_argument("-k", type=int, default=3)
    parser.add_argument("-m", type=int, default=12)
    parser.add_argument("-g", type=int, default=2)
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--delta", type=float, default=0.25)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--backend", default="diagonal",
                        choices=["diagonal", "trajectory"])
    args = parser.parse_args(argv)

    instance = generate_classical_instance(args.n, args.k, args.m, args.g,
                                           args.seed)
    derived = derive_params(instance, SolverConfig(delta=args.delta))
    records = []
    for trial in range(args.trials):
        seed = derive_trial_seed(args.seed, trial)
        records.append(run(instance, SolverConfig(
            delta=args.delta, seed=seed, backend=args.backend)))

    report = check_failure_bound(records, instance.params, args.delta,
                                 derived.threshold_T,
                                 min_trials=min(args.trials, 100))
    report["T"] = derived.threshold_T
    report["eta"] = derived.eta
    print(json.dumps(report, sort_keys=True, indent=2, default=str))
    return 0 if report["holds"] else 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run every analytic verifier in one pass: the binomial counting inequality
on an exact-integer grid, the threshold inequality sweep over all admissible
parameter combinations, and the entropy / branch-count bounds over a batch of
randomized small instances enumerated exactly.

Example:
    python3 scripts/verify_inequalities.py --trees 100 --m-max 30
"""

import argparse
import json
import sys

from qlll.instances import (
    InstanceParams,
    check_qlll_condition,
    random_instance,
)
from qlll.solver import SolverConfig
from qlll.verifiers import (
    check_binomial_inequality,
    check_entropy_claim,
    check_history_count_bound,
    check_threshold_inequality,
    enumerate_history_tree,
)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trees", type=int, default=100)
    parser.add_argument("--seed", type=int, default=1000)
    parser.add_argument("--m-max", type=int, default=30)
    parser.add_argument("--g-max", type=int, default=6)
    parser.add_argument("--t-max", type=int, default=20)
    args = parser.parse_args(argv)

    summary = {}

    binom = check_binomial_inequality(range(0, args.m_max + 1),
                                      range(2, args.g_max + 1),
                                      range(1, args.t_max + 1))
    summary["binomial"] = {"checked": binom["checked"],
                           "holds": binom["holds"]}

    sweeps = 0
    threshold_ok = True
    for k in range(3, 7):
        for g in range(2, 12):
            for r in (1, 2):
                if not check_qlll_condition(
                        InstanceParams(k, r, g, 2)).satisfied:
                    continue
                for delta in (0.1, 0.25, 0.5, 0.9):
                    report = check_threshold_inequality(k, g, r, delta,
                                                        range(2, 51))
                    threshold_ok &= report["holds"]
                    sweeps += 1
    summary["threshold"] = {"sweeps": sweeps, "holds": threshold_ok}

    entropy_ok = counts_ok = True
    worst_slack = float("inf")
    for i in range(args.trees):
        inst = random_instance(3, 2, 2, rank=1 + i % 2, seed=args.seed + i,
                               commuting=i % 2 == 0)
        tree = enumerate_history_tree(inst, SolverConfig(
            threshold_override=2, backend="density_enumerate"))
        ent = check_entropy_claim(tree)
        entropy_ok &= ent["holds"]
        worst_slack = min(worst_slack, ent["rhs"] - ent["lhs"])
        counts_ok &= check_history_count_bound(tree, inst.params)["holds"]
    summary["entropy"] = {"trees": args.trees, "holds": entropy_ok,
                          "worst_slack": worst_slack}
    summary["counts"] = {"trees": args.trees, "holds": counts_ok}

    summary["all_hold"] = all(section["holds"] for section in summary.values()
                              if isinstance(section, dict))
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0 if summary["all_hold"] else 1


if __name__ == "__main__":
    sys.exit(main())

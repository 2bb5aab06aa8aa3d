"""Numerical certification of the solver's guarantees.

Covers: the entropy inequality for adaptive projective measurements (checked
by exhaustive history-tree enumeration with the stock register materialized),
the per-branch counting and entropy bounds, the analytic failure-probability
bound, the exact binomial inequality C(m+gt, t) <= 2^m C(gt, t), and the
threshold inequality (log2 T + m)/T <= 1/eta with its three sub-bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InsufficientTrials
from .instances import Instance, InstanceParams, LOG2E
from .backends import (DensityState, DiagonalDistribution,
                       shannon_entropy, von_neumann_entropy)
from .solver import SolverConfig, derive_params

ENTROPY_SLACK = 1e-9


@dataclass
class HistoryNode:
    branch_string: tuple
    probability: float
    state: object        # DensityState or DiagonalDistribution
    failures: int
    result: str          # "Success" | "Failure"


@dataclass
class HistoryTree:
    leaves: list
    initial_entropy: float
    n: int
    stock_N: int
    threshold_T: int
    pruned_mass: float


def _walk_branches(instance, orders, threshold, root, stock_base=None):
    """Enumerate every measurement history of the FIX loop.

    The recursion is flattened into a work list of pending FIX calls; a
    violation prepends the neighborhood traversal.  With stock_base set,
    replacement swaps the measured qubits into fresh stock slots (so the
    post-branch states carry the full bookkeeping register); without it,
    replacement re-mixes the qubits in place.
    """
    projectors = instance.projectors
    leaves = []
    pruned = 0.0
    stack = [(root, tuple(range(instance.m)), 0, 0, (), 1.0)]
    while stack:
        state, worklist, stock_used, t, sbar, prob = stack.pop()
        if not worklist:
            leaves.append(HistoryNode(sbar, prob, state, t, "Success"))
            continue
        j = worklist[0]
        branches = state.measure_branches(projectors[j])
        pruned += prob * max(0.0, 1.0 - sum(o.probability for o, _ in branches))
        for outcome, post in branches:
            p2 = prob * outcome.probability
            s2 = sbar + (outcome.violated,)
            if outcome.violated:
                t2 = t + 1
                if t2 == threshold:
                    # abort immediately; the final replacement never happens
                    leaves.append(HistoryNode(s2, p2, post, t2, "Failure"))
                    continue
                support = projectors[j].support
                if stock_base is not None:
                    slots = [stock_base + stock_used + i
                             for i in range(len(support))]
                    post.swap_qubits(list(zip(support, slots)))
                    used2 = stock_used + len(support)
                else:
                    post.replace_qubits(support)
                    used2 = stock_used
                stack.append((post, tuple(orders[j]) + worklist[1:],
                              used2, t2, s2, p2))
            else:
                stack.append((post, worklist[1:], stock_used, t, s2, p2))
    return leaves, pruned


def enumerate_history_tree(instance: Instance, config: SolverConfig,
                           materialize_stock: bool = True,
                           density_cap: int | None = None) -> HistoryTree:
    """Exact branch enumeration on the density backend.

    With the stock materialized, the register holds n + N qubits (N = T*k
    maximally mixed stock qubits) so branch entropies follow the same
    bookkeeping as the failure-probability argument; keep T small via
    config.threshold_override.
    """
    derived = derive_params(instance, config)
    threshold = derived.threshold_T
    stock_n = derived.stock_size_N if materialize_stock else 0
    d = instance.n + stock_n
    kwargs = {} if density_cap is None else {"cap": density_cap}
    root = DensityState(d, **kwargs)
    if config.traversal != "ascending":
        raise ValueError("history enumeration supports ascending traversal only")
    orders = [list(nb) for nb in instance.neighborhood]
    leaves, pruned = _walk_branches(
        instance, orders, threshold, root,
        stock_base=instance.n if materialize_stock else None)
    return HistoryTree(leaves=leaves, initial_entropy=float(d), n=instance.n,
                       stock_N=stock_n, threshold_T=threshold,
                       pruned_mass=pruned)


def enumerate_outcome_distribution(instance: Instance, threshold: int,
                                   backend: str = "density") -> dict:
    """Exact outcome-string distribution {s_bar: probability} of the FIX loop.

    backend "density" works for any instance (no stock; probabilities are
    unaffected); "diagonal" runs the classical-distribution state and is
    defined for diagonal instances only.
    """
    orders = [list(nb) for nb in instance.neighborhood]
    if backend == "density":
        root = DensityState(instance.n)
    elif backend == "diagonal":
        root = DiagonalDistribution(instance.n)
    else:
        raise ValueError(f"unknown enumeration backend {backend!r}")
    leaves, _ = _walk_branches(instance, orders, threshold, root)
    dist = {}
    for leaf in leaves:
        dist[leaf.branch_string] = dist.get(leaf.branch_string, 0.0) + leaf.probability
    return dist


# ---------------------------------------------------------------------------
# claim checks on enumerated trees

def check_entropy_claim(tree: HistoryTree) -> dict:
    """Initial entropy vs. outcome entropy plus mean branch entropy:
    S(initial) <= H({p}) + sum p S(rho_branch), within 1e-9 slack."""
    probs = [leaf.probability for leaf in tree.leaves]
    outcome_entropy = shannon_entropy(probs, atol=ENTROPY_SLACK + tree.pruned_mass)
    mean_branch_entropy = sum(
        leaf.probability * von_neumann_entropy(leaf.state.rho)
        for leaf in tree.leaves)
    lhs = tree.initial_entropy
    rhs = outcome_entropy + mean_branch_entropy
    return {"claim": "entropy", "lhs": lhs, "rhs": rhs,
            "tolerance": ENTROPY_SLACK, "holds": lhs <= rhs + ENTROPY_SLACK}


def check_history_count_bound(tree: HistoryTree, params: InstanceParams) -> dict:
    """Per-leaf structural bounds: branch length <= m + g*t and branch entropy
    <= N + n - t*(k - log2 r)."""
    violations = []
    worst_length = -math.inf
    worst_entropy = -math.inf
    for leaf in tree.leaves:
        t = leaf.failures
        length_slack = len(leaf.branch_string) - (params.m + params.g * t)
        worst_length = max(worst_length, length_slack)
        if length_slack > 0:
            violations.append(("length", leaf.branch_string))
        entropy = von_neumann_entropy(leaf.state.rho)
        bound = tree.stock_N + tree.n - t * (params.k - math.log2(params.r))
        entropy_slack = entropy - bound
        worst_entropy = max(worst_entropy, entropy_slack)
        if entropy_slack > ENTROPY_SLACK:
            violations.append(("entropy", leaf.branch_string, entropy, bound))
    return {"claim": "history_counts", "leaves": len(tree.leaves),
            "worst_length_slack": worst_length,
            "worst_entropy_slack": worst_entropy,
            "tolerance": ENTROPY_SLACK,
            "violations": violations, "holds": not violations}


# ---------------------------------------------------------------------------
# exact and analytic inequality checks

def check_binomial_inequality(m_range, g_range, t_range) -> dict:
    """Exhaustive exact-integer check of C(m+gt, t) <= 2^m * C(gt, t) over the
    grid, plus the follow-up bound C(gt, t) <= (ge)^t used in the same chain.
    Violations are reported, not raised: the stated validity range is g >= 2,
    t >= 1, and behavior outside it is worth inspecting."""
    violations = []
    chain_violations = []
    checked = 0
    for m in m_range:
        for g in g_range:
            for t in t_range:
                checked += 1
                lhs = math.comb(m + g * t, t)
                rhs = (2 ** m) * math.comb(g * t, t)
                if lhs > rhs:
                    violations.append((m, g, t, lhs, rhs))
                if math.log2(math.comb(g * t, t)) > t * math.log2(g * math.e) + 1e-9:
                    chain_violations.append((m, g, t))
    return {"claim": "binomial", "checked": checked,
            "violations": violations,
            "chain_violations": chain_violations,
            "holds": not violations and not chain_violations}


def check_threshold_inequality(k, g, r, delta, m_values) -> dict:
    """For each m >= 2: with eta and T = ceil(4 m eta log2(eta+2)), the bound
    (log2 T + m)/T <= 1/eta must hold; the three sub-bounds are checked at the
    un-ceiled T (the left side is decreasing in T, so dropping the ceiling is
    the harder case)."""
    from .solver import compute_eta  # local import to avoid a cycle

    rows = []
    ok = True
    for m in m_values:
        if m < 2:
            raise ValueError(f"threshold inequality requires m >= 2, got {m}")
        eta = compute_eta(k, g, r, delta)
        threshold = math.ceil(4 * m * eta * math.log2(eta + 2))
        main_margin = 1.0 / eta - (math.log2(threshold) + m) / threshold
        t_real = 4 * m * eta * math.log2(eta + 2)
        sub1 = 2.0 - math.log2(4 * m) / m
        sub2 = 1.0 - (math.log2(eta) + math.log2(math.log2(eta + 2))) \
            / (m * math.log2(eta + 2))
        sub3 = 1.0 - 1.0 / math.log2(eta + 2)
        combined = 4.0 - (math.log2(4 * m) + math.log2(eta)
                          + math.log2(math.log2(eta + 2)) + m) \
            / (m * math.log2(eta + 2))
        row_ok = (main_margin > 0 and sub1 >= 0 and sub2 >= 0
                  and sub3 >= 0 and combined >= 0)
        ok = ok and row_ok
        rows.append({"m": m, "eta": eta, "T": threshold, "T_real": t_real,
                     "main_margin": main_margin,
                     "sub_margins": (sub1, sub2, sub3),
                     "combined_margin": combined, "holds": row_ok})
    return {"claim": "threshold", "k": k, "g": g, "r": r, "delta": delta,
            "rows": rows, "holds": ok}


def failure_probability_bound(k, g, r, m, threshold) -> float:
    """Analytic bound (log2 T + m) / (T * (k - log2(g e r))) on Pr(Failure)."""
    margin = k - math.log2(g * r) - LOG2E
    return (math.log2(threshold) + m) / (threshold * margin)


def check_failure_bound(records, params: InstanceParams, delta: float,
                        threshold: int, min_trials: int = 100) -> dict:
    """Empirical failure rate of a trial batch against the analytic bound and
    the 3-sigma band around delta."""
    trials = len(records)
    if trials < min_trials:
        raise InsufficientTrials(f"need >= {min_trials} records, got {trials}")

    def result_of(rec):
        return rec["result"] if isinstance(rec, dict) else rec.result

    def t_of(rec):
        return rec["t"] if isinstance(rec, dict) else rec.failures_t

    failures = sum(1 for rec in records if result_of(rec) == "Failure")
    empirical = failures / trials
    bound = failure_probability_bound(params.k, params.g, params.r,
                                      params.m, threshold)
    band = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)
    histogram = {}
    for rec in records:
        histogram[t_of(rec)] = histogram.get(t_of(rec), 0) + 1
    return {"claim": "failure_bound", "trials": trials,
            "empirical_failure_rate": empirical,
            "analytic_bound": bound, "delta": delta, "band": band,
            "t_histogram": dict(sorted(histogram.items())),
            "bound_below_delta": bound <= delta,
            "empirical_within_band": empirical <= band,
            "holds": bound <= delta and empirical <= band}

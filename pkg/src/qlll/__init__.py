"""Commuting quantum local-lemma solver with exact simulation backends and a
numerical certification suite for its entropy-compression guarantees."""

from .instances import (
    Diagonal,
    Explicit,
    Instance,
    InstanceParams,
    ProjectorSpec,
    Rotated,
    build_instance,
    check_qlll_condition,
    compute_neighborhood,
    generate_classical_instance,
    load_instance,
    random_instance,
    rotate_instance,
    save_instance,
    validate_instance,
)
from .backends import (
    DensityState,
    DiagonalDistribution,
    DiagonalState,
    Outcome,
    TrajectoryState,
    init_fully_mixed,
    shannon_entropy,
    von_neumann_entropy,
)
from .solver import (
    DerivedParams,
    RunRecord,
    SolverConfig,
    compute_eta,
    compute_threshold,
    derive_params,
    monotonicity_probe,
    run,
    verify_satisfaction,
)
from .verifiers import (
    HistoryNode,
    HistoryTree,
    check_binomial_inequality,
    check_entropy_claim,
    check_failure_bound,
    check_history_count_bound,
    check_threshold_inequality,
    enumerate_history_tree,
    enumerate_outcome_distribution,
)

__all__ = [name for name in dir() if not name.startswith("_")]

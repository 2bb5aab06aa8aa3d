"""Quantum state backends: trajectory (pure-state sampling), density matrix,
and diagonal-classical bits, plus entropy utilities.

All three expose projective measurement of {P, 1-P} and the replace-with-
fresh-mixed-qubits primitive with identical ensemble semantics; the density
backend additionally enumerates both measurement branches exactly.

Tensor convention: an n-qubit pure state is stored as an ndarray of shape
(2,)*n with axis q belonging to qubit q; a density matrix uses (2,)*(2n) with
row axes first.  Bit 0 of a local operator's index is its support[0] qubit
(most significant), matching the instance module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLarge, NotNormalized, ZeroProbabilityBranch
from .instances import Diagonal, ProjectorSpec

TRAJECTORY_CAP = 14
DENSITY_CAP = 8
EIG_FLOOR = 1e-12
BRANCH_PRUNE = 1e-12


# ---------------------------------------------------------------------------
# entropies

def shannon_entropy(probabilities, atol=1e-9) -> float:
    """-sum p log2 p with 0 log 0 := 0.  Input must sum to 1 within atol."""
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < -atol):
        raise NotNormalized("negative probability")
    total = float(p.sum())
    if abs(total - 1.0) > atol:
        raise NotNormalized(f"probabilities sum to {total}, not 1")
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def von_neumann_entropy(state_or_matrix) -> float:
    """Base-2 von Neumann entropy; eigenvalues below 1e-12 contribute 0."""
    rho = state_or_matrix.rho if isinstance(state_or_matrix, DensityState) \
        else np.asarray(state_or_matrix, dtype=complex)
    evals = np.linalg.eigvalsh(rho)
    evals = evals[evals > EIG_FLOOR]
    return float(-(evals * np.log2(evals)).sum()) if evals.size else 0.0


# ---------------------------------------------------------------------------
# outcome record

@dataclass
class Outcome:
    violated: int      # 1 = projected onto P (violation), 0 = onto 1-P
    probability: float  # Born probability of this outcome


def _clamp01(p: float) -> float:
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# trajectory backend

def _apply_local(tensor: np.ndarray, mat: np.ndarray, axes) -> np.ndarray:
    """Apply a k-qubit operator to the given tensor axes (in support order)."""
    k = len(axes)
    op = mat.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, range(k), axes)


class TrajectoryState:
    """Pure-state unraveling of the maximally mixed initial state.

    Initialization samples a uniform computational-basis state; replacement
    measures the discarded qubits and resamples them uniformly.  Both choices
    reproduce the density-matrix ensemble exactly (checked in the tests).
    """

    def __init__(self, n: int, rng, cap: int = TRAJECTORY_CAP):
        if n > cap:
            raise DimensionTooLarge(f"trajectory backend capped at {cap} qubits, got {n}")
        self.n = n
        self.rng = rng
        bits = rng.integers(0, 2, size=n)
        psi = np.zeros((2,) * n if n else (1,), dtype=complex)
        psi[tuple(bits)] = 1.0
        self.psi = psi

    def copy(self) -> "TrajectoryState":
        new = object.__new__(TrajectoryState)
        new.n, new.rng, new.psi = self.n, self.rng, self.psi.copy()
        return new

    def _renormalize(self):
        norm = np.linalg.norm(self.psi)
        if norm < 1e-12:
            raise ZeroProbabilityBranch("state norm collapsed to zero")
        self.psi /= norm

    def expectation(self, spec: ProjectorSpec) -> float:
        proj = _apply_local(self.psi, spec.materialize(), spec.support)
        return _clamp01(float(np.real(np.vdot(self.psi, proj))))

    def measure_projector(self, spec: ProjectorSpec) -> Outcome:
        """Born-rule measurement of {P, 1-P}; collapses the state in place."""
        mat = spec.materialize()
        projected = _apply_local(self.psi, mat, spec.support)
        p = _clamp01(float(np.real(np.vdot(self.psi, projected))))
        violated = int(self.rng.random() < p)
        if violated:
            self.psi = projected
        else:
            self.psi = self.psi - projected
        self._renormalize()
        return Outcome(violated=violated, probability=p if violated else 1.0 - p)

    def replace_qubits(self, support) -> None:
        """Measure each support qubit in the computational basis (outcome
        discarded), then overwrite it with a fresh uniform basis state."""
        for q in support:
            marginal = np.moveaxis(self.psi, q, 0)
            p1 = _clamp01(float((np.abs(marginal[1]) ** 2).sum()
                                / (np.abs(self.psi) ** 2).sum()))
            observed = int(self.rng.random() < p1)
            keep = np.zeros_like(self.psi)
            idx = [slice(None)] * self.n
            idx[q] = observed
            np.moveaxis(keep, q, 0)[observed] = marginal[observed]
            self.psi = keep
            self._renormalize()
            fresh = int(self.rng.integers(0, 2))
            if fresh != observed:
                self.psi = np.flip(self.psi, axis=q)

    def bits(self):
        """Basis-state reading, defined only when the state is a basis state."""
        flat = np.abs(self.psi.reshape(-1))
        idx = int(np.argmax(flat))
        if abs(flat[idx] - 1.0) > 1e-9:
            return None
        return tuple((idx >> (self.n - 1 - q)) & 1 for q in range(self.n))


# ---------------------------------------------------------------------------
# density backend

class DensityState:
    """Exact density operator on d labeled qubits."""

    def __init__(self, d: int, rho=None, cap: int = DENSITY_CAP):
        if d > cap:
            raise DimensionTooLarge(f"density backend capped at {cap} qubits, got {d}")
        self.d = d
        dim = 2 ** d
        if rho is None:
            rho = np.eye(dim, dtype=complex) / dim
        self.rho = np.asarray(rho, dtype=complex)

    def copy(self) -> "DensityState":
        new = object.__new__(DensityState)
        new.d, new.rho = self.d, self.rho.copy()
        return new

    def _tensor(self) -> np.ndarray:
        return self.rho.reshape((2,) * (2 * self.d))

    def _from_tensor(self, t: np.ndarray) -> None:
        self.rho = t.reshape(2 ** self.d, 2 ** self.d)

    def _conjugate(self, mat: np.ndarray, support) -> np.ndarray:
        """M rho M^dagger as a flat matrix."""
        t = self._tensor()
        t = _apply_local(t, mat, support)
        t = _apply_local(t, mat.conj(), [self.d + q for q in support])
        return t.reshape(2 ** self.d, 2 ** self.d)

    def expectation(self, spec: ProjectorSpec) -> float:
        t = _apply_local(self._tensor(), spec.materialize(), spec.support)
        return _clamp01(float(np.real(np.trace(t.reshape(2 ** self.d, 2 ** self.d)))))

    def measure_branches(self, spec: ProjectorSpec):
        """Both outcomes of measuring {P, 1-P}: list of (Outcome, DensityState).

        Branch probabilities sum to 1; branches with probability below the
        pruning threshold are dropped (normalizing one raises
        ZeroProbabilityBranch, so they are never materialized).
        """
        mat = spec.materialize()
        branches = []
        for violated, op in ((1, mat), (0, np.eye(mat.shape[0]) - mat)):
            post = self._conjugate(op, spec.support)
            p = _clamp01(float(np.real(np.trace(post))))
            if p < BRANCH_PRUNE:
                continue
            state = object.__new__(DensityState)
            state.d, state.rho = self.d, post / p
            branches.append((Outcome(violated=violated, probability=p), state))
        return branches

    def replace_qubits(self, support) -> None:
        """Partial-trace the support qubits and re-tensor them maximally mixed;
        the reduced state on every other qubit is untouched."""
        k = len(support)
        rest = [q for q in range(self.d) if q not in support]
        t = self._tensor()
        # rows/cols reordered to (support, rest)
        t = np.moveaxis(t, list(support) + rest
                        + [self.d + q for q in support] + [self.d + q for q in rest],
                        range(2 * self.d))
        block = t.reshape(2 ** k, 2 ** (self.d - k), 2 ** k, 2 ** (self.d - k))
        reduced = np.einsum("iaib->ab", block)
        fresh = np.kron(np.eye(2 ** k, dtype=complex) / 2 ** k, reduced)
        t = fresh.reshape((2,) * (2 * self.d))
        t = np.moveaxis(t, range(2 * self.d),
                        list(support) + rest
                        + [self.d + q for q in support] + [self.d + q for q in rest])
        self._from_tensor(t)

    def swap_qubits(self, pairs) -> None:
        """Exchange qubit labels; pairs is a list of (a, b)."""
        perm = list(range(self.d))
        for a, b in pairs:
            perm[a], perm[b] = perm[b], perm[a]
        t = self._tensor()
        t = np.moveaxis(t, perm + [self.d + q for q in perm], range(2 * self.d))
        self._from_tensor(t)

    def reduced(self, support) -> np.ndarray:
        """Reduced density matrix on the given qubits (in the given order)."""
        rest = [q for q in range(self.d) if q not in support]
        k = len(support)
        t = self._tensor()
        t = np.moveaxis(t, list(support) + rest
                        + [self.d + q for q in support] + [self.d + q for q in rest],
                        range(2 * self.d))
        block = t.reshape(2 ** k, 2 ** (self.d - k), 2 ** k, 2 ** (self.d - k))
        return np.einsum("iaja->ij", block)

    def entropy(self) -> float:
        return von_neumann_entropy(self.rho)


# ---------------------------------------------------------------------------
# diagonal-classical backend

class DiagonalState:
    """Classical bit-string state for diagonal instances; measurement is
    deterministic set membership, replacement resamples uniform bits.  On
    diagonal instances this is exactly the Moser-style resampling walk."""

    def __init__(self, n: int, rng):
        self.n = n
        self.rng = rng
        self.bits = np.asarray(rng.integers(0, 2, size=n), dtype=np.int8)

    def copy(self) -> "DiagonalState":
        new = object.__new__(DiagonalState)
        new.n, new.rng, new.bits = self.n, self.rng, self.bits.copy()
        return new

    @staticmethod
    def _forbidden(spec: ProjectorSpec):
        if not isinstance(spec.body, Diagonal):
            raise TypeError("diagonal backend requires diagonal projector bodies")
        return spec.body.forbidden

    def expectation(self, spec: ProjectorSpec) -> float:
        word = "".join(str(int(self.bits[q])) for q in spec.support)
        return 1.0 if word in self._forbidden(spec) else 0.0

    def measure_projector(self, spec: ProjectorSpec) -> Outcome:
        e = self.expectation(spec)
        return Outcome(violated=int(e), probability=1.0)

    def replace_qubits(self, support) -> None:
        for q in support:
            self.bits[q] = int(self.rng.integers(0, 2))


class DiagonalDistribution:
    """Exact probability distribution over classical bit-strings; the
    branch-enumeration counterpart of DiagonalState (a diagonal density
    matrix stored as its diagonal)."""

    def __init__(self, n: int, probs=None):
        self.n = n
        if probs is None:
            probs = np.full((2,) * n if n else (1,), 2.0 ** -n)
        self.probs = np.asarray(probs, dtype=float)

    def copy(self) -> "DiagonalDistribution":
        return DiagonalDistribution(self.n, self.probs.copy())

    def _mask(self, spec: ProjectorSpec) -> np.ndarray:
        mask = np.zeros((2,) * self.n, dtype=bool)
        for pattern in DiagonalState._forbidden(spec):
            idx = [slice(None)] * self.n
            for q, c in zip(spec.support, pattern):
                idx[q] = int(c)
            mask[tuple(idx)] = True
        return mask

    def expectation(self, spec: ProjectorSpec) -> float:
        return float(self.probs[self._mask(spec)].sum())

    def measure_branches(self, spec: ProjectorSpec):
        mask = self._mask(spec)
        branches = []
        for violated, sel in ((1, mask), (0, ~mask)):
            p = float(self.probs[sel].sum())
            if p < BRANCH_PRUNE:
                continue
            post = np.where(sel, self.probs, 0.0) / p
            branches.append((Outcome(violated=violated, probability=p),
                             DiagonalDistribution(self.n, post)))
        return branches

    def replace_qubits(self, support) -> None:
        marg = self.probs.sum(axis=tuple(support), keepdims=True)
        self.probs = np.broadcast_to(marg / 2 ** len(support), (2,) * self.n).copy()


def init_fully_mixed(backend: str, n: int, rng=None, seed=None):
    """Construct the named backend's realization of the fully mixed n-qubit state."""
    if rng is None:
        rng = np.random.default_rng(seed)
    if backend == "trajectory":
        return TrajectoryState(n, rng)
    if backend == "diagonal":
        return DiagonalState(n, rng)
    if backend in ("density", "density_enumerate"):
        return DensityState(n)
    raise ValueError(f"unknown backend {backend!r}")

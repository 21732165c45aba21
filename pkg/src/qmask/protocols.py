"""Protocol-level demonstrations built on the masking machinery.

Covers the classical-bit masker, commitment to a qubit with the
entanglement-based cheating unitary, and the four-party phase masker whose
pair marginals are only classically correlated.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from typing import Sequence

import numpy as np

from .masklib import Masker, apply_masker, masker_from_images
from .qcore import (
    DensityMatrix,
    DimProfile,
    PureState,
    partial_trace,
    schmidt_decompose,
    trace_distance,
)

__all__ = [
    "CommitmentTranscript",
    "LocalUnitary",
    "classical_bit_masker",
    "commit",
    "cheat_unitary",
    "apply_local_unitary",
    "multiparty_phase_masker",
    "is_classical_classical",
]


@dataclass(frozen=True)
class CommitmentTranscript:
    """One commitment round: what was committed, the joint state, what Bob holds."""

    committed_state: PureState
    joint: PureState
    sent_marginal: DensityMatrix
    unveiled_state: PureState

    def to_dict(self) -> dict:
        return {
            "committed_state": self.committed_state.to_dict(),
            "joint": self.joint.to_dict(),
            "sent_marginal": self.sent_marginal.to_dict(),
            "unveiled_state": self.unveiled_state.to_dict(),
        }


@dataclass(frozen=True)
class LocalUnitary:
    """Unitary acting on the committer's subsystem only."""

    mat: np.ndarray
    atol: InitVar[float] = 1e-10

    def __post_init__(self, atol):
        mat = np.array(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("local unitary must be a square matrix")
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if err > atol:
            raise ValueError(f"matrix is not unitary: max |U^dag U - I| = {err!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)


def classical_bit_masker() -> Masker:
    """Masker hiding one classical bit in the two phase-flipped Bell states."""
    rt2 = 1.0 / np.sqrt(2.0)
    plus = PureState(np.array([rt2, 0, 0, rt2]), DimProfile((2, 2)))
    minus = PureState(np.array([rt2, 0, 0, -rt2]), DimProfile((2, 2)))
    return masker_from_images([plus, minus])


def commit(psi: PureState, masker: Masker) -> CommitmentTranscript:
    """Commit to ``psi``: encode it, keep subsystem A, send B's marginal to Bob."""
    joint = apply_masker(masker, psi)
    return CommitmentTranscript(
        committed_state=psi,
        joint=joint,
        sent_marginal=partial_trace(joint, 1),
        unveiled_state=psi,
    )


def apply_local_unitary(u: LocalUnitary, psi: PureState) -> PureState:
    """Apply ``u (x) I`` to a bipartite state."""
    if len(psi.dims.factors) != 2 or psi.dims.factors[0] != u.mat.shape[0]:
        raise ValueError("state profile does not match the local unitary")
    m = psi.amps.reshape(psi.dims.factors)
    return PureState((u.mat @ m).reshape(-1), psi.dims)


def _complete_to_unitary(columns: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full unitary, deterministically."""
    d, r = columns.shape
    if r == d:
        return columns
    full = np.empty((d, d), dtype=complex)
    full[:, :r] = columns
    count = r
    for k in range(d):
        if count == d:
            break
        cand = np.zeros(d, dtype=complex)
        cand[k] = 1.0
        cand -= full[:, :count] @ (full[:, :count].conj().T @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-7:
            full[:, count] = cand / norm
            count += 1
    if count != d:
        raise RuntimeError("failed to complete the unitary")
    return full


def cheat_unitary(psi0: PureState, psi1: PureState, tol: float = 1e-8) -> LocalUnitary:
    """Local unitary on A mapping ``psi1`` onto ``psi0`` when their B marginals agree.

    Built from the two Schmidt decompositions: the B-side bases are aligned
    (block-wise over degenerate spectrum blocks, via the block overlap
    unitary) and the A-side bases are then matched one to one.  Raises
    ``ValueError`` when the B marginals differ (no such unitary exists) and
    ``RuntimeError`` with diagnostics if the alignment fails to reach the
    required fidelity.
    """
    if psi0.dims.factors != psi1.dims.factors or len(psi0.dims.factors) != 2:
        raise ValueError("states must share one bipartite dimension profile")
    gap = trace_distance(partial_trace(psi0, 1), partial_trace(psi1, 1))
    if gap > tol:
        raise ValueError(f"B marginals differ by trace distance {gap!r}; cheating is impossible")

    sd0 = schmidt_decompose(psi0, 0)
    sd1 = schmidt_decompose(psi1, 0)
    coeffs = sd0.coeffs
    rank = int(np.sum(coeffs > 1e-9))
    rank = max(rank, 1)

    # block-diagonal B-basis overlap within degenerate groups of the spectrum
    o = sd0.basis_b[:, :rank].conj().T @ sd1.basis_b[:, :rank]
    start = 0
    for k in range(1, rank + 1):
        if k == rank or coeffs[k - 1] - coeffs[k] > 1e-8:
            o[start:k, :start] = 0.0
            o[start:k, k:] = 0.0
            start = k

    aligned_a1 = sd1.basis_a[:, :rank] @ o.T
    u_full = _complete_to_unitary(sd0.basis_a[:, :rank]) @ _complete_to_unitary(aligned_a1).conj().T
    w, _, vh = np.linalg.svd(u_full)
    u_full = w @ vh  # nearest unitary, absorbs alignment roundoff

    mapped = (u_full @ psi1.amps.reshape(psi1.dims.factors)).reshape(-1)
    fidelity = abs(np.vdot(psi0.amps, mapped))
    if fidelity < 1.0 - tol:
        raise RuntimeError(
            "degenerate-spectrum basis alignment failed: "
            f"fidelity {fidelity!r}, spectrum {coeffs[:rank]!r}"
        )
    return LocalUnitary(u_full)


def multiparty_phase_masker(d: int, phases: Sequence[float]) -> PureState:
    """Four-party phase-encoded state with amplitudes ``exp(1j*phase_k)/sqrt(d)`` on |kkkk>.

    Every single-party marginal is maximally mixed and every pair marginal is
    classically correlated, while the (A, E_A) : (B, E_B) cut stays entangled.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (d,):
        raise ValueError(f"need exactly {d} phases, got {phases.shape}")
    amps = np.zeros((d, d, d, d), dtype=complex)
    for k in range(d):
        amps[k, k, k, k] = np.exp(1j * phases[k]) / np.sqrt(d)
    return PureState(amps.reshape(-1), DimProfile((d, d, d, d)))


def is_classical_classical(rho: DensityMatrix, cut: Sequence[int] = (0,), tol: float = 1e-10) -> bool:
    """Structural classical-correlation test across ``cut``.

    True iff the state is diagonal, within ``tol``, in the product of the
    eigenbases of its two marginals.  This is sufficient for the diagonal
    constructions produced here; it is not a general quantum-correlation
    measure.
    """
    left = rho.dims.validate_keep(cut)
    right = rho.dims.complement(left)
    perm = left + right
    n = len(rho.dims.factors)
    factors = rho.dims.factors
    mat = (
        rho.mat.reshape(factors + factors)
        .transpose(perm + tuple(n + p for p in perm))
        .reshape(rho.dims.total, rho.dims.total)
    )
    _, v_l = np.linalg.eigh(partial_trace(rho, left).mat)
    _, v_r = np.linalg.eigh(partial_trace(rho, right).mat)
    basis = np.kron(v_l, v_r)
    t = basis.conj().T @ mat @ basis
    off = t - np.diag(np.diag(t))
    return bool(np.max(np.abs(off)) <= tol)

"""Masker construction and masking-condition verification.

A masker is an isometry from the input space ``H_A`` into the composite space
``H_A (x) H_B`` (the ancilla-fixed slice of a joint unitary).  A family of
input states counts as masked when every image has the same two marginals, so
neither subsystem alone carries information about which state was encoded,
and the images are entangled (ruling out trivial swap-style encodings).

Verification runs in two modes:

* ``set``:  only the listed states' image marginals are compared.
* ``span``: additionally requires that an orthonormal basis of the listed
  states' span exists in which all pairwise image cross-marginals vanish.
  That is exactly the structure that extends masking from the listed states
  to every fixed-amplitude phase family ("disk") through them, and its
  failure on a spanning set is the numerical signature that no such family
  exists.  The basis is searched by Jacobi joint off-diagonalization, so the
  check does not depend on which spanning basis the inputs happen to suggest.
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from . import _kernels
from .qcore import (
    DensityMatrix,
    DimProfile,
    PureState,
    entanglement_entropy,
    overlap,
    partial_trace,
    trace_distance,
)

__all__ = [
    "Masker",
    "MaskingReport",
    "WalgateDecomposition",
    "diagonal_masker",
    "masker_from_images",
    "apply_masker",
    "hyperdisk_state",
    "masking_defect",
    "is_masked",
    "walgate_decompose",
    "orthonormal_span",
    "load_masker",
    "save_masker",
]


@dataclass(frozen=True)
class Masker:
    """Isometry from H_A into H_A (x) H_B, stored as a (d_a*d_b, d_a) matrix.

    Column ``k`` is the image of basis state ``|k>`` with the ancilla fixed.
    """

    iso: np.ndarray
    dims: tuple[int, int]
    atol: InitVar[float] = 1e-10

    def __post_init__(self, atol):
        iso = np.array(self.iso, dtype=complex)
        d_a, d_b = (int(d) for d in self.dims)
        if d_a < 1 or d_b < 1:
            raise ValueError(f"invalid masker dims {self.dims}")
        if iso.shape != (d_a * d_b, d_a):
            raise ValueError(f"isometry shape {iso.shape} does not match dims {(d_a, d_b)}")
        gram = iso.conj().T @ iso
        err = np.max(np.abs(gram - np.eye(d_a)))
        if err > atol:
            raise ValueError(f"columns are not orthonormal: max |V^dag V - I| = {err!r}")
        iso.setflags(write=False)
        object.__setattr__(self, "iso", iso)
        object.__setattr__(self, "dims", (d_a, d_b))

    @property
    def d_a(self) -> int:
        return self.dims[0]

    @property
    def d_b(self) -> int:
        return self.dims[1]

    def image(self, k: int) -> PureState:
        """Image of basis state |k>."""
        return PureState(self.iso[:, k], DimProfile(self.dims), atol=1e-9)

    def to_dict(self) -> dict:
        return {
            "dA": self.d_a,
            "dB": self.d_b,
            "iso": [[[float(v.real), float(v.imag)] for v in row] for row in self.iso],
        }

    @classmethod
    def from_dict(cls, data: dict, atol: float = 1e-10) -> "Masker":
        iso = np.array([[complex(re, im) for re, im in row] for row in data["iso"]], dtype=complex)
        return cls(iso, (int(data["dA"]), int(data["dB"])), atol)


@dataclass(frozen=True)
class MaskingReport:
    """Outcome of a masking check: deviations, cross norms, entropies, verdict.

    ``defect`` is the maximum over all per-state marginal deviations (trace
    distance to the first image's marginals) and, in span mode, all pairwise
    cross-marginal operator norms over the optimized span basis.  ``verdict``
    is true when the defect is below ``tolerance`` and every image carries
    more than ``entropy_floor`` bits of entanglement.
    """

    mode: str
    defect: float
    verdict: bool
    tolerance: float
    entropy_floor: float
    reference_marginal_a: DensityMatrix
    reference_marginal_b: DensityMatrix
    per_state_deviation: tuple[tuple[int, float, float], ...]
    cross_norms: tuple[tuple[int, int, float, float], ...]
    entropies: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "defect": self.defect,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "entropy_floor": self.entropy_floor,
            "reference_marginal_A": self.reference_marginal_a.to_dict(),
            "reference_marginal_B": self.reference_marginal_b.to_dict(),
            "per_state_deviation": [list(row) for row in self.per_state_deviation],
            "cross_norms": [list(row) for row in self.cross_norms],
            "entropies": list(self.entropies),
        }


@dataclass(frozen=True)
class WalgateDecomposition:
    """Two orthogonal bipartite states written over one orthonormal ancilla-qubit basis.

    ``psi0 = mu (x) basis_b[:,0] + nu (x) basis_b[:,1]`` and
    ``psi1 = mu_perp (x) basis_b[:,0] + nu_perp (x) basis_b[:,1]`` with
    ``<mu|mu_perp> = <nu|nu_perp> = 0``.  The component vectors are generally
    unnormalized and not mutually orthogonal.
    """

    basis_b: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    mu_perp: np.ndarray
    nu_perp: np.ndarray
    residual: float


# ---------------------------------------------------------------------------
# masker constructors
# ---------------------------------------------------------------------------


def diagonal_masker(d: int) -> Masker:
    """The copy-basis masker |k> -> |kk> with a d-dimensional ancilla."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    iso = np.zeros((d * d, d), dtype=complex)
    for k in range(d):
        iso[k * d + k, k] = 1.0
    return Masker(iso, (d, d))


def masker_from_images(images: Sequence[PureState], atol: float = 1e-10) -> Masker:
    """Masker whose column k is the k-th image state.

    The images must be pairwise orthonormal bipartite states on a common
    (d_a, d_b) profile with d_a equal to the number of images.
    """
    if not images:
        raise ValueError("need at least one image state")
    d_a = len(images)
    profile = images[0].dims.factors
    if len(profile) != 2 or profile[0] != d_a:
        raise ValueError(f"images must live on a ({d_a}, d_b) profile, got {profile}")
    for im in images[1:]:
        if im.dims.factors != profile:
            raise ValueError("inconsistent image dims")
    iso = np.stack([im.amps for im in images], axis=1)
    gram = iso.conj().T @ iso
    if np.max(np.abs(gram - np.eye(d_a))) > atol:
        raise ValueError("images are not orthonormal")
    return Masker(iso, profile, atol)


def apply_masker(masker: Masker, psi: PureState) -> PureState:
    """Image of ``psi`` under the masker, as a state on the (d_a, d_b) profile."""
    if psi.dims.total != masker.d_a:
        raise ValueError(f"state dimension {psi.dims.total} does not match masker d_a={masker.d_a}")
    out = masker.iso @ psi.amps
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"masker failed to preserve the norm: {norm!r}")
    return PureState(out / norm, DimProfile(masker.dims))


def hyperdisk_state(r: Sequence[float], phases: Sequence[float], atol: float = 1e-10) -> PureState:
    """State with amplitudes ``r_k * exp(1j*phase_k)`` in the computational basis.

    Fixing ``r`` and sweeping the phases traces out the disk family masked by
    the diagonal masker built on that amplitude profile.
    """
    r = np.asarray(r, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if r.shape != phases.shape or r.ndim != 1:
        raise ValueError("r and phases must be 1-d with equal length")
    if np.any(r < -atol):
        raise ValueError("amplitudes must be nonnegative")
    if abs(np.sum(r * r) - 1.0) > atol:
        raise ValueError(f"amplitudes are not normalized: sum r^2 = {np.sum(r * r)!r}")
    return PureState(r * np.exp(1j * phases), DimProfile((r.size,)))


# ---------------------------------------------------------------------------
# masking verification
# ---------------------------------------------------------------------------


def orthonormal_span(columns: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span via pivoted modified Gram-Schmidt.

    Pivots on the largest residual norm (lowest index on ties) and drops
    directions whose residual norm falls below ``tol``.
    """
    work = np.array(columns, dtype=complex)
    if work.ndim != 2:
        raise ValueError("columns must be a 2-d array")
    remaining = list(range(work.shape[1]))
    basis = []
    while remaining:
        norms = [np.linalg.norm(work[:, j]) for j in remaining]
        best = int(np.argmax(norms))
        if norms[best] < tol:
            break
        j = remaining.pop(best)
        q = work[:, j] / norms[best]
        basis.append(q)
        for k in remaining:
            work[:, k] -= q * np.vdot(q, work[:, k])
    if not basis:
        raise ValueError("input columns span nothing above the tolerance")
    return np.stack(basis, axis=1)


def _marginal_pair(image: PureState) -> tuple[DensityMatrix, DensityMatrix]:
    return partial_trace(image, 0), partial_trace(image, 1)


def masking_defect(
    masker: Masker,
    states: Sequence[PureState],
    mode: str = "span",
    tol: float = 1e-10,
    entropy_floor: float = 1e-6,
) -> MaskingReport:
    """Quantify how far the masker is from masking the given states.

    In both modes the first image's marginals serve as the reference and each
    listed state contributes its image-marginal trace distances on both sides.
    Span mode additionally orthonormalizes the inputs, rotates that basis to
    minimize all pairwise image cross-marginals jointly, and folds the
    residual cross-marginal operator norms into the defect.
    """
    if mode not in ("set", "span"):
        raise ValueError(f"mode must be 'set' or 'span', got {mode!r}")
    if not states:
        raise ValueError("need at least one state")
    for s in states:
        if s.dims.total != masker.d_a:
            raise ValueError("state dimension does not match the masker")

    images = [apply_masker(masker, s) for s in states]
    ref_a, ref_b = _marginal_pair(images[0])
    deviations = []
    for i, image in enumerate(images):
        rho_a, rho_b = _marginal_pair(image)
        deviations.append((i, trace_distance(rho_a, ref_a), trace_distance(rho_b, ref_b)))
    entropies = tuple(entanglement_entropy(image, 0) for image in images)

    cross_norms: list[tuple[int, int, float, float]] = []
    if mode == "span":
        listed = np.stack([s.amps for s in states], axis=1)
        span = orthonormal_span(listed)
        if span.shape[1] >= 2:
            objective = _kernels.SpanObjective(masker.d_a, masker.d_b, listed, span)
            rotation, _ = _kernels.jacobi_minimize(objective.cross_slices(masker.iso))
            basis = span @ np.asarray(rotation)
            mats = (masker.iso @ basis).T.reshape(-1, masker.d_a, masker.d_b)
            for i in range(mats.shape[0]):
                for j in range(i + 1, mats.shape[0]):
                    norm_a = float(np.linalg.norm(mats[i] @ mats[j].conj().T, 2))
                    norm_b = float(np.linalg.norm(mats[i].T @ mats[j].conj(), 2))
                    cross_norms.append((i, j, norm_a, norm_b))

    defect = max(
        max(max(da, db) for _, da, db in deviations),
        max((max(na, nb) for _, _, na, nb in cross_norms), default=0.0),
    )
    verdict = bool(defect < tol and min(entropies) > entropy_floor)
    return MaskingReport(
        mode=mode,
        defect=float(defect),
        verdict=verdict,
        tolerance=tol,
        entropy_floor=entropy_floor,
        reference_marginal_a=ref_a,
        reference_marginal_b=ref_b,
        per_state_deviation=tuple(deviations),
        cross_norms=tuple(cross_norms),
        entropies=entropies,
    )


def is_masked(
    masker: Masker,
    states: Sequence[PureState],
    tol: float = 1e-10,
    entropy_floor: float = 1e-6,
) -> tuple[bool, MaskingReport]:
    """Span-mode masking check; true iff the defect and entropy criteria pass."""
    report = masking_defect(masker, states, mode="span", tol=tol, entropy_floor=entropy_floor)
    return report.verdict, report


# ---------------------------------------------------------------------------
# two-orthogonal-state decomposition over an ancilla qubit
# ---------------------------------------------------------------------------


def _walgate_residual(angles: np.ndarray, m0: np.ndarray, m1: np.ndarray) -> float:
    theta, alpha, gamma = angles
    beta0 = np.array([np.cos(theta), np.exp(1j * alpha) * np.sin(theta)])
    beta1 = np.exp(1j * gamma) * np.array([-np.exp(-1j * alpha) * np.sin(theta), np.cos(theta)])
    mu = m0 @ beta0.conj()
    nu = m0 @ beta1.conj()
    mu_perp = m1 @ beta0.conj()
    nu_perp = m1 @ beta1.conj()
    return float(abs(np.vdot(mu, mu_perp)) ** 2 + abs(np.vdot(nu, nu_perp)) ** 2)


def walgate_decompose(
    psi0: PureState,
    psi1: PureState,
    restarts: int = 20,
    seed: int = 0,
    target: float = 1e-12,
) -> WalgateDecomposition:
    """Write two orthogonal states over one ancilla-qubit basis with orthogonal partners.

    Searches the ancilla-qubit basis (two angles plus a relative phase) by
    multi-start local minimization of the pairwise-overlap residual
    ``|<mu|mu_perp>|^2 + |<nu|nu_perp>|^2``; a zero always exists for
    orthogonal inputs, so a residual above ``target`` after all restarts is
    reported as an error.
    """
    if psi0.dims.factors != psi1.dims.factors:
        raise ValueError("mismatched dims")
    if len(psi0.dims.factors) != 2 or psi0.dims.factors[1] != 2:
        raise ValueError("states must be bipartite with a qubit second factor")
    ov = overlap(psi0, psi1)
    if abs(ov) > 1e-10:
        raise ValueError(f"input states are not orthogonal: |<psi0|psi1>| = {abs(ov)!r}")

    d_a = psi0.dims.factors[0]
    m0 = psi0.amps.reshape(d_a, 2)
    m1 = psi1.amps.reshape(d_a, 2)
    rng = np.random.default_rng(seed)
    best = None
    for attempt in range(restarts):
        if attempt == 0:
            start = np.zeros(3)
        else:
            start = rng.uniform([-np.pi / 2, -np.pi, -np.pi], [np.pi / 2, np.pi, np.pi])
        res = scipy.optimize.minimize(
            _walgate_residual,
            start,
            args=(m0, m1),
            method="Nelder-Mead",
            options={"maxiter": 2000, "fatol": 1e-18, "xatol": 1e-12},
        )
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < target * 1e-1:
            break
    if best is None or best.fun >= target:
        raise RuntimeError(
            f"ancilla-basis search failed: best residual {best.fun if best else None!r} "
            f"after {restarts} restarts"
        )
    theta, alpha, gamma = best.x
    beta0 = np.array([np.cos(theta), np.exp(1j * alpha) * np.sin(theta)])
    beta1 = np.exp(1j * gamma) * np.array([-np.exp(-1j * alpha) * np.sin(theta), np.cos(theta)])
    return WalgateDecomposition(
        basis_b=np.stack([beta0, beta1], axis=1),
        mu=m0 @ beta0.conj(),
        nu=m0 @ beta1.conj(),
        mu_perp=m1 @ beta0.conj(),
        nu_perp=m1 @ beta1.conj(),
        residual=float(best.fun),
    )


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def save_masker(masker: Masker, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(masker.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_masker(path, atol: float = 1e-10) -> Masker:
    with open(path, encoding="utf-8") as fh:
        return Masker.from_dict(json.load(fh), atol)

"""Dense complex linear algebra for multipartite pure states and density matrices.

Conventions used throughout the package:

* A composite Hilbert space is described by a :class:`DimProfile`, an ordered
  list of local dimensions ``(d_1, ..., d_n)``.
* Amplitude vectors are stored flat in row-major (C) order, so the index of
  the basis state ``|i_1 ... i_n>`` is ``i_1*d_2*...*d_n + ... + i_n``; the
  last factor's index varies fastest.
* All values are immutable after construction and every operation is a pure
  function, so everything here is safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DimProfile",
    "PureState",
    "DensityMatrix",
    "SchmidtDecomposition",
    "tensor",
    "partial_trace",
    "cross_marginal",
    "schmidt_decompose",
    "trace_distance",
    "entanglement_entropy",
    "random_pure_state",
    "overlap",
    "load_state",
    "save_state",
    "load_density_matrix",
    "save_density_matrix",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimProfile:
    """Ordered local dimensions of a composite Hilbert space."""

    factors: tuple[int, ...]

    def __post_init__(self):
        factors = tuple(int(d) for d in self.factors)
        if not factors:
            raise ValueError("DimProfile needs at least one factor")
        if any(d < 1 for d in factors):
            raise ValueError(f"factors must all be >= 1, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def total(self) -> int:
        return int(np.prod(self.factors))

    def __len__(self) -> int:
        return len(self.factors)

    def validate_keep(self, keep: Sequence[int]) -> tuple[int, ...]:
        """Normalize a factor-index subset, requiring a nonempty proper subset."""
        kept = tuple(sorted({int(k) for k in keep}))
        if any(k < 0 or k >= len(self.factors) for k in kept):
            raise ValueError(f"factor indices {kept} out of range for {len(self.factors)} factors")
        if not kept or len(kept) == len(self.factors):
            raise ValueError("keep must be a nonempty proper subset of the factors")
        return kept

    def complement(self, keep: Sequence[int]) -> tuple[int, ...]:
        kept = set(keep)
        return tuple(i for i in range(len(self.factors)) if i not in kept)

    def subprofile(self, indices: Sequence[int]) -> "DimProfile":
        return DimProfile(tuple(self.factors[i] for i in indices))


def _as_profile(dims: DimProfile | Sequence[int]) -> DimProfile:
    if isinstance(dims, DimProfile):
        return dims
    return DimProfile(tuple(dims))


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over a :class:`DimProfile`."""

    amps: np.ndarray
    dims: DimProfile
    atol: InitVar[float] = 1e-12

    def __post_init__(self, atol):
        amps = np.array(self.amps, dtype=complex)
        dims = _as_profile(self.dims)
        if amps.ndim != 1 or amps.size != dims.total:
            raise ValueError(f"amplitude vector of length {amps.size} does not match dims {dims.factors}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > atol:
            raise ValueError(f"state is not normalized: ||amps|| = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_amplitudes(cls, amps: Iterable[complex], dims: Sequence[int] | None = None, atol: float = 1e-12) -> "PureState":
        vec = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps, dtype=complex)
        if dims is None:
            dims = (vec.size,)
        return cls(vec, DimProfile(tuple(dims)), atol)

    def projector(self) -> "DensityMatrix":
        """Rank-one density matrix |psi><psi|."""
        return DensityMatrix(np.outer(self.amps, self.amps.conj()), self.dims)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims.factors),
            "amps": [[float(a.real), float(a.imag)] for a in self.amps],
        }

    @classmethod
    def from_dict(cls, data: dict, atol: float = 1e-12) -> "PureState":
        amps = np.array([complex(re, im) for re, im in data["amps"]], dtype=complex)
        return cls(amps, DimProfile(tuple(data["dims"])), atol)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite complex matrix."""

    mat: np.ndarray
    dims: DimProfile
    atol: InitVar[float] = 1e-12
    eig_floor: InitVar[float] = -1e-10

    def __post_init__(self, atol, eig_floor):
        mat = np.array(self.mat, dtype=complex)
        dims = _as_profile(self.dims)
        d = dims.total
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims.factors}")
        herm_err = np.max(np.abs(mat - mat.conj().T)) if d else 0.0
        if herm_err > atol:
            raise ValueError(f"matrix is not Hermitian: max |M - M^dag| = {herm_err!r}")
        tr = np.trace(mat)
        if abs(tr - 1.0) > atol:
            raise ValueError(f"matrix does not have unit trace: tr = {tr!r}")
        lo = float(np.min(np.linalg.eigvalsh(mat)))
        if lo < eig_floor:
            raise ValueError(f"matrix has a negative eigenvalue: {lo!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims.factors),
            "mat": [[[float(v.real), float(v.imag)] for v in row] for row in self.mat],
        }

    @classmethod
    def from_dict(cls, data: dict, atol: float = 1e-12) -> "DensityMatrix":
        mat = np.array([[complex(re, im) for re, im in row] for row in data["mat"]], dtype=complex)
        return cls(mat, DimProfile(tuple(data["dims"])), atol)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Schmidt coefficients and paired orthonormal local bases of a bipartite cut.

    ``coeffs`` are nonnegative and sorted nonincreasing; column ``k`` of
    ``basis_a``/``basis_b`` is the k-th Schmidt vector on each side.  The state
    reconstructs as ``sum_k coeffs[k] * basis_a[:, k] (x) basis_b[:, k]``.
    """

    coeffs: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray
    dims_a: DimProfile
    dims_b: DimProfile

    def reconstruct(self) -> np.ndarray:
        """Flat amplitude vector on (side A, side B), side-A index slow."""
        terms = self.basis_a[:, None, :] * self.basis_b[None, :, :]
        return (terms * self.coeffs[None, None, :]).sum(axis=2).reshape(-1)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def tensor(u: PureState, v: PureState) -> PureState:
    """Tensor product; the factor list of ``v`` is appended to that of ``u``."""
    return PureState(np.kron(u.amps, v.amps), DimProfile(u.dims.factors + v.dims.factors))


def _split_matrix(amps: np.ndarray, factors: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Reshape a flat amplitude vector into a (kept, traced) coefficient matrix."""
    rest = tuple(i for i in range(len(factors)) if i not in keep)
    tensor_view = amps.reshape(factors)
    d_keep = int(np.prod([factors[i] for i in keep]))
    return tensor_view.transpose(keep + rest).reshape(d_keep, -1)


def partial_trace(state: PureState | DensityMatrix, keep: int | Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the kept factors, tracing out the rest.

    ``keep`` is a factor index or set of factor indices; the kept factors stay
    in their original order.
    """
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    kept = state.dims.validate_keep(keep)
    out_dims = state.dims.subprofile(kept)
    if isinstance(state, PureState):
        m = _split_matrix(state.amps, state.dims.factors, kept)
        return DensityMatrix(m @ m.conj().T, out_dims, atol=1e-10)
    factors = state.dims.factors
    n = len(factors)
    t = state.mat.reshape(factors + factors)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ValueError("too many factors for the einsum-based partial trace")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in kept:
            col[i] = row[i]
    out = "".join(row[i] for i in kept) + "".join(letters[n + i] for i in kept)
    reduced = np.einsum("".join(row + col) + "->" + out, t)
    d = out_dims.total
    return DensityMatrix(reduced.reshape(d, d), out_dims, atol=1e-10)


def cross_marginal(psi0: PureState, psi1: PureState, traced: str) -> np.ndarray:
    """Partial trace of the off-diagonal operator |psi0><psi1| on a bipartite state.

    ``traced`` is ``"A"`` (trace out the first factor) or ``"B"`` (the second).
    The result is a generally non-Hermitian matrix on the kept factor and
    satisfies ``cross_marginal(a, b, t) == cross_marginal(b, a, t)^dag``.
    """
    if psi0.dims.factors != psi1.dims.factors:
        raise ValueError(f"mismatched dims: {psi0.dims.factors} vs {psi1.dims.factors}")
    if len(psi0.dims.factors) != 2:
        raise ValueError("cross_marginal needs a bipartite dimension profile")
    side = traced.upper()
    if side not in ("A", "B"):
        raise ValueError(f"traced must be 'A' or 'B', got {traced!r}")
    keep = (1,) if side == "A" else (0,)
    m0 = _split_matrix(psi0.amps, psi0.dims.factors, keep)
    m1 = _split_matrix(psi1.amps, psi1.dims.factors, keep)
    return m0 @ m1.conj().T


def schmidt_decompose(psi: PureState, cut: int | Sequence[int]) -> SchmidtDecomposition:
    """Schmidt decomposition of ``psi`` across ``cut`` (factor indices of side A).

    Coefficients come out sorted nonincreasing.  Each side-A basis vector has
    its first component of magnitude above 1e-12 rotated to be real positive,
    with the compensating phase pushed onto the side-B partner so the
    reconstruction is untouched.
    """
    if isinstance(cut, (int, np.integer)):
        cut = (int(cut),)
    kept = psi.dims.validate_keep(cut)
    rest = psi.dims.complement(kept)
    m = _split_matrix(psi.amps, psi.dims.factors, kept)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    basis_a = u.copy()
    basis_b = vh.T.copy()
    for k in range(s.size):
        col = basis_a[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            phase = col[nz[0]] / abs(col[nz[0]])
            basis_a[:, k] = col / phase
            basis_b[:, k] = basis_b[:, k] * phase
    return SchmidtDecomposition(
        coeffs=s,
        basis_a=basis_a,
        basis_b=basis_b,
        dims_a=psi.dims.subprofile(kept),
        dims_b=psi.dims.subprofile(rest),
    )


def trace_distance(rho: DensityMatrix | np.ndarray, sigma: DensityMatrix | np.ndarray) -> float:
    """Trace distance ``0.5 * sum |eig(rho - sigma)|``; lies in [0, 1]."""
    a = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    b = sigma.mat if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def entanglement_entropy(psi: PureState, cut: int | Sequence[int]) -> float:
    """Entropy (bits) of the squared Schmidt coefficients across ``cut``."""
    s = schmidt_decompose(psi, cut).coeffs
    p = s * s
    p = p[p > 1e-300]
    return max(float(-(p * np.log2(p)).sum()), 0.0)


def random_pure_state(dim: int, seed: int) -> PureState:
    """Haar-distributed pure state: complex Gaussian amplitudes, normalized."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v / np.linalg.norm(v), DimProfile((dim,)))


def overlap(u: PureState, v: PureState) -> complex:
    """Inner product <u|v>."""
    if u.dims.total != v.dims.total:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(u.amps, v.amps))


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def save_state(psi: PureState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(psi.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_state(path, atol: float = 1e-12) -> PureState:
    with open(path, encoding="utf-8") as fh:
        return PureState.from_dict(json.load(fh), atol)


def save_density_matrix(rho: DensityMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rho.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_density_matrix(path, atol: float = 1e-12) -> DensityMatrix:
    with open(path, encoding="utf-8") as fh:
        return DensityMatrix.from_dict(json.load(fh), atol)

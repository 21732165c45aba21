"""Pure-NumPy kernel backend.

Reference implementation of the hot kernels; the Cython module ``_core``
mirrors these semantics exactly.  See the package docstring of
``qmask._kernels`` for how the backend is selected.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def antihermitian_from_params(params: np.ndarray, dim: int) -> np.ndarray:
    """Assemble an anti-Hermitian generator from ``dim**2`` real coefficients.

    Layout: the first ``dim`` entries are the imaginary diagonal, followed by
    (re, im) pairs for each upper-triangle position in row-major order, with
    ``G[i, j] = re + 1j*im`` and ``G[j, i] = -re + 1j*im``.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (dim * dim,):
        raise ValueError(f"expected {dim * dim} parameters, got {params.shape}")
    g = np.zeros((dim, dim), dtype=complex)
    g[np.diag_indices(dim)] = 1j * params[:dim]
    iu, ju = np.triu_indices(dim, k=1)
    re = params[dim::2]
    im = params[dim + 1 :: 2]
    g[iu, ju] = re + 1j * im
    g[ju, iu] = -re + 1j * im
    return g


def unitary_from_params(params: np.ndarray, dim: int) -> np.ndarray:
    """Exponential of the anti-Hermitian generator encoded by ``params``."""
    g = antihermitian_from_params(params, dim)
    w, v = np.linalg.eigh(-1j * g)
    return (v * np.exp(1j * w)) @ v.conj().T


def jacobi_minimize(slices: np.ndarray, max_sweeps: int = 100, tol: float = 1e-14):
    """Minimize total squared off-diagonal magnitude of a family of matrices.

    Finds a unitary ``V`` approximately minimizing
    ``sum_s sum_{i != j} |(V^dag N_s V)[i, j]|**2`` by Jacobi-style plane
    rotations, each pair rotation solved in closed form via a 3x3 symmetric
    eigenproblem.  Returns ``(V, off)`` with ``off`` the residual off-diagonal
    energy.  Exact for a single pair (m == 2); for commuting families the
    residual reaches machine level.
    """
    n = np.array(slices, dtype=complex, copy=True)
    if n.ndim != 3 or n.shape[1] != n.shape[2]:
        raise ValueError("slices must have shape (n_slices, m, m)")
    m = n.shape[1]
    v = np.eye(m, dtype=complex)
    if m >= 2 and n.shape[0] > 0:
        for _ in range(max_sweeps):
            biggest = 0.0
            for p in range(m - 1):
                for q in range(p + 1, m):
                    gx = n[:, p, p] - n[:, q, q]
                    gy = n[:, p, q] + n[:, q, p]
                    gz = 1j * (n[:, p, q] - n[:, q, p])
                    g = np.stack([gx, gy, gz], axis=1)
                    g3 = np.real(g.T @ g.conj())
                    evals, evecs = np.linalg.eigh(g3)
                    if evals[-1] <= 1e-30:
                        continue
                    x, y, z = evecs[:, -1]
                    # sign convention: rotation closest to the identity
                    if x < 0 or (x == 0 and (y < 0 or (y == 0 and z < 0))):
                        x, y, z = -x, -y, -z
                    c = np.sqrt((1.0 + x) / 2.0)
                    s = (y + 1j * z) / (2.0 * c)
                    a_s = abs(s)
                    if a_s <= tol:
                        continue
                    biggest = max(biggest, a_s)
                    colp = n[:, :, p].copy()
                    colq = n[:, :, q].copy()
                    n[:, :, p] = c * colp + s * colq
                    n[:, :, q] = -np.conj(s) * colp + c * colq
                    rowp = n[:, p, :].copy()
                    rowq = n[:, q, :].copy()
                    n[:, p, :] = c * rowp + np.conj(s) * rowq
                    n[:, q, :] = -s * rowp + c * rowq
                    vp = v[:, p].copy()
                    vq = v[:, q].copy()
                    v[:, p] = c * vp + s * vq
                    v[:, q] = -np.conj(s) * vp + c * vq
            if biggest <= tol:
                break
    total = float(np.sum(np.abs(n) ** 2))
    diag = float(np.sum(np.abs(n[:, np.arange(m), np.arange(m)]) ** 2))
    return v, max(total - diag, 0.0)


class SpanObjective:
    """Smooth masking-defect surrogate for a fixed state set and masker shape.

    Evaluates, for the isometry encoded by a parameter vector, the sum of
    squared Frobenius deviations of every listed image's two marginals from
    the first image's marginals, plus (when a span basis is given) the
    minimized total squared Frobenius norm of pairwise cross-marginals over
    orthonormal bases of the span.
    """

    def __init__(
        self,
        d_a: int,
        d_b: int,
        listed: np.ndarray,
        span: np.ndarray | None = None,
        jacobi_sweeps: int = 100,
        jacobi_tol: float = 1e-14,
    ):
        self.d_a = int(d_a)
        self.d_b = int(d_b)
        self.dim = self.d_a * self.d_b
        self.listed = np.array(listed, dtype=complex)
        if self.listed.ndim != 2 or self.listed.shape[0] != self.d_a:
            raise ValueError("listed must be a (d_a, n_states) column matrix")
        self.span = None if span is None else np.array(span, dtype=complex)
        if self.span is not None and (self.span.ndim != 2 or self.span.shape[0] != self.d_a):
            raise ValueError("span must be a (d_a, m) column matrix")
        if self.span is not None and self.span.shape[1] < 2:
            self.span = None
        self.jacobi_sweeps = jacobi_sweeps
        self.jacobi_tol = jacobi_tol

    @property
    def n_params(self) -> int:
        return self.dim * self.dim

    def isometry(self, params: np.ndarray) -> np.ndarray:
        """Masker matrix: the ancilla-|0> columns of the encoded unitary."""
        u = unitary_from_params(params, self.dim)
        return np.ascontiguousarray(u[:, :: self.d_b])

    def cross_slices(self, iso: np.ndarray) -> np.ndarray:
        """Conjugated cross-marginal slice family over the span basis.

        Entry ``[k, l]`` of slice ``(p, q)`` is the conjugate of component
        ``(p, q)`` of the cross-marginal between span-basis images ``k`` and
        ``l``; a unitary ``W`` from :func:`jacobi_minimize` then rotates the
        span basis as ``span @ W``.
        """
        mb = (iso @ self.span).T.reshape(-1, self.d_a, self.d_b)
        xa = np.einsum("kab,lcb->klac", mb, mb.conj())
        xb = np.einsum("kib,lic->klbc", mb, mb.conj())
        m = mb.shape[0]
        return np.concatenate(
            [
                xa.transpose(2, 3, 0, 1).reshape(-1, m, m),
                xb.transpose(2, 3, 0, 1).reshape(-1, m, m),
            ]
        ).conj()

    def value(self, params: np.ndarray) -> float:
        iso = self.isometry(params)
        ms = (iso @ self.listed).T.reshape(-1, self.d_a, self.d_b)
        ra = np.einsum("nab,ncb->nac", ms, ms.conj())
        rb = np.einsum("nib,nic->nbc", ms, ms.conj())
        val = float(np.sum(np.abs(ra[1:] - ra[0]) ** 2)) + float(np.sum(np.abs(rb[1:] - rb[0]) ** 2))
        if self.span is not None:
            _, off = jacobi_minimize(self.cross_slices(iso), self.jacobi_sweeps, self.jacobi_tol)
            val += off
        return val

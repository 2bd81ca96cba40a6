"""Dense complex linear algebra used throughout the package.

Everything here works on plain numpy arrays. Hermitian inputs are
symmetrized as ``(H + H^dagger) / 2`` on entry, so downstream code can rely on
exact Hermiticity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, SingularInput

__all__ = [
    "EigenSystem",
    "SchmidtForm",
    "as_hermitian",
    "hermitian_eig",
    "real_imag_split",
    "unitary_od_decompose",
    "polar_decompose",
    "schmidt",
    "inertia",
    "max_abs",
    "is_unitary",
    "random_unitary",
]

# Relative tolerance for accepting a matrix as Hermitian before symmetrizing.
HERMITIAN_RTOL = 1e-8


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _as_finite_matrix(a, name="matrix") -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr.astype(complex)


def as_hermitian(h, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate ``h`` as Hermitian and return ``(h + h^dagger)/2``.

    Raises InvalidInput if ``h`` is not square, has non-finite entries, or
    deviates from Hermiticity by more than ``rtol * max|h|``.
    """
    arr = _as_finite_matrix(h, "Hermitian operator")
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInput(f"Hermitian operator must be square, got {arr.shape}")
    scale = max(max_abs(arr), 1.0)
    if max_abs(arr - arr.conj().T) > rtol * scale:
        raise InvalidInput("operator is not Hermitian")
    return (arr + arr.conj().T) / 2


class EigenSystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def _phase_fix(vectors: np.ndarray) -> np.ndarray:
    # Make the first entry of non-negligible magnitude real positive in every column.
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-8 * np.abs(col).max()))
        if col[idx] != 0:
            out[:, k] = col * (abs(col[idx]) / col[idx])
    return out


def hermitian_eig(h, cluster_tol: float = 1e-10) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with reproducible ordering.

    Eigenvalues come out ascending. Within a cluster of eigenvalues equal up
    to ``cluster_tol * max|h|``, eigenvectors are ordered lexicographically by
    the real parts of their entries, after each vector's phase has been fixed
    so that its leading entry is real positive.
    """
    herm = as_hermitian(h)
    values, vectors = np.linalg.eigh(herm)
    vectors = _phase_fix(vectors)
    tol = cluster_tol * max(max_abs(herm), 1e-300)
    order = list(range(len(values)))
    start = 0
    while start < len(values):
        stop = start + 1
        while stop < len(values) and values[stop] - values[start] <= tol:
            stop += 1
        if stop - start > 1:
            block = list(range(start, stop))
            # np.lexsort sorts by the last key first, so reverse the entry order.
            keys = [np.round(vectors[i, block].real, 12) for i in reversed(range(vectors.shape[0]))]
            perm = np.lexsort(keys)
            order[start:stop] = [block[p] for p in perm]
        start = stop
    return EigenSystem(values[order], vectors[:, order])


def real_imag_split(h) -> tuple[np.ndarray, np.ndarray]:
    """Split Hermitian ``h`` as ``h = plus + 1j * minus``.

    ``plus`` is real symmetric and ``minus`` real skew-symmetric with a zero
    diagonal.
    """
    herm = as_hermitian(h)
    plus = herm.real.copy()
    minus = herm.imag.copy()
    np.fill_diagonal(minus, 0.0)
    return plus, minus


def is_unitary(u, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return max_abs(u.conj().T @ u - np.eye(u.shape[0])) <= atol


def _simultaneous_orthogonal_diag(x: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    """Real orthogonal Q diagonalizing commuting real symmetric x and y."""
    wx, qx = np.linalg.eigh(x)
    q = qx.copy()
    start = 0
    while start < len(wx):
        stop = start + 1
        while stop < len(wx) and wx[stop] - wx[start] <= tol:
            stop += 1
        if stop - start > 1:
            block = qx[:, start:stop]
            _, qy = np.linalg.eigh(block.T @ y @ block)
            q[:, start:stop] = block @ qy
        start = stop
    return q


def unitary_od_decompose(u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor a unitary as ``u = v1 @ d @ v2``.

    ``v1`` and ``v2`` are real orthogonal and ``d`` is a diagonal unitary.
    The factorization goes through the complex symmetric unitary
    ``u^T u = v2^T d^2 v2``. Its real and imaginary parts commute, so one real
    orthogonal basis diagonalizes both. The square root on the diagonal takes
    the principal branch.
    """
    arr = _as_finite_matrix(u, "unitary")
    if not is_unitary(arr, atol=1e-10):
        raise InvalidInput("input is not unitary to 1e-10")
    n = arr.shape[0]
    m = arr.T @ arr
    m = (m + m.T) / 2
    q = _simultaneous_orthogonal_diag(m.real, m.imag, tol=1e-8)
    lam = np.diag(q.T @ m @ q)
    lam = lam / np.abs(lam)
    # A signed zero imaginary part would send sqrt(-1) to -i instead of i.
    lam = np.where(lam.imag == 0, lam.real + 0j, lam)
    dvals = np.sqrt(lam)
    v2 = q.T
    v1c = arr @ q @ np.diag(dvals.conj())
    v1 = v1c.real
    if max_abs(v1c.imag) > 1e-8:
        # Near-degenerate spectrum of u^T u mixed the eigenbasis; one more
        # polar step on the real part restores orthogonality.
        w, _, vh = np.linalg.svd(v1)
        v1 = w @ vh
    d = np.diag(dvals)
    if max_abs(v1 @ d @ v2 - arr) > 1e-9 * max(1.0, n / 4):
        raise InvalidInput("orthogonal-diagonal factorization did not converge")
    return v1, d, v2


def polar_decompose(a) -> tuple[np.ndarray, np.ndarray]:
    """Polar factorization ``a = u @ abs_a`` with ``abs_a = sqrt(a^dagger a)``."""
    arr = _as_finite_matrix(a, "matrix")
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInput("polar decomposition needs a square matrix")
    w, s, vh = np.linalg.svd(arr)
    if s.min() <= 1e-12:
        raise SingularInput(f"smallest singular value {s.min():.3e} <= 1e-12")
    u = w @ vh
    abs_a = vh.conj().T @ np.diag(s) @ vh
    return u, (abs_a + abs_a.conj().T) / 2


@dataclass(frozen=True)
class SchmidtForm:
    """``v = sum_j coefficients[j] * left[:, j] (x) right[:, j]``."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dims: tuple[int, int]

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def vector(self) -> np.ndarray:
        m, n = self.dims
        out = np.zeros(m * n, dtype=complex)
        for c, a, b in zip(self.coefficients, self.left.T, self.right.T):
            out += c * np.kron(a, b)
        return out


def schmidt(v, dims, tol: float = 1e-12) -> SchmidtForm:
    """Schmidt decomposition of a bipartite vector.

    Coefficients below ``tol`` times the largest one are dropped. Equal
    coefficients keep the order produced by the SVD.
    """
    vec = np.asarray(v, dtype=complex).ravel()
    m, n = (int(x) for x in dims)
    if vec.size != m * n:
        raise InvalidInput(f"vector length {vec.size} does not match dims {m}x{n}")
    if not np.all(np.isfinite(vec)):
        raise InvalidInput("vector has non-finite entries")
    if np.linalg.norm(vec) == 0:
        raise InvalidInput("zero vector has no Schmidt decomposition")
    w, s, vh = np.linalg.svd(vec.reshape(m, n), full_matrices=False)
    keep = s > tol * s[0]
    return SchmidtForm(s[keep], w[:, keep], vh[keep, :].T, (m, n))


def inertia(h, tol: float | None = None) -> tuple[int, int, int]:
    """Counts of (negative, zero, positive) eigenvalues of Hermitian ``h``."""
    herm = as_hermitian(h)
    if tol is None:
        tol = 1e-10 * max_abs(herm)
    w = np.linalg.eigvalsh(herm)
    n_neg = int(np.sum(w < -tol))
    n_pos = int(np.sum(w > tol))
    return n_neg, len(w) - n_neg - n_pos, n_pos


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph

"""Bipartite operators, density matrices and the partial operations on them.

Index convention: row-major with subsystem A as the slow index, so the basis
vector ``|i, j>`` sits at position ``i * n + j`` for local dims ``(m, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import InvalidInput
from .linalg import as_hermitian, max_abs

__all__ = [
    "BipartiteOperator",
    "DensityMatrix",
    "PPTVerdict",
    "partial_transpose",
    "partial_trace",
    "is_ppt",
    "apply_local",
    "swap_sides",
    "conjugate",
    "real_part",
    "kron_vectors",
    "product_projector",
]

PSD_TOL = 1e-10


def _check_dims(dims, size: int) -> tuple[int, int]:
    try:
        m, n = (int(x) for x in dims)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"dims must be a pair of integers, got {dims!r}") from exc
    if m < 1 or n < 1:
        raise InvalidInput(f"local dimensions must be >= 1, got {(m, n)}")
    if m * n != size:
        raise InvalidInput(f"dims {(m, n)} do not match operator size {size}")
    return m, n


@dataclass(frozen=True, eq=False)
class BipartiteOperator:
    """Hermitian operator on C^m (x) C^n.

    ``mat`` is symmetrized on construction and stored read-only.
    """

    mat: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        mat = as_hermitian(self.mat)
        dims = _check_dims(self.dims, mat.shape[0])
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def is_real(self) -> bool:
        return max_abs(self.mat.imag) == 0.0

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def min_eig(self) -> float:
        return float(self.eigvalsh()[0])

    def is_psd(self, tol: float | None = None) -> bool:
        if tol is None:
            tol = PSD_TOL * max(max_abs(self.mat), 1e-300)
        return self.min_eig() >= -tol

    def tensor(self) -> np.ndarray:
        """View as a rank-4 tensor ``T[i, j, k, l] = <i j| M |k l>``."""
        m, n = self.dims
        return self.mat.reshape(m, n, m, n)

    def expectation(self, vec) -> float:
        v = np.asarray(vec, dtype=complex).ravel()
        return float(np.vdot(v, self.mat @ v).real)

    def inner(self, other) -> float:
        """Hilbert-Schmidt inner product ``tr(self @ other)``."""
        other_mat = other.mat if isinstance(other, BipartiteOperator) else np.asarray(other)
        return float(np.sum(self.mat.T * other_mat).real)

    def with_matrix(self, mat) -> "BipartiteOperator":
        return BipartiteOperator(mat, self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix(BipartiteOperator):
    """Unit-trace positive semidefinite bipartite operator.

    Non-normalized input is divided by its trace and the trace is kept in
    ``norm_factor``.
    """

    norm_factor: float = field(default=1.0)

    def __post_init__(self):
        super().__post_init__()
        tr = float(np.trace(self.mat).real)
        if not tr > 0:
            raise InvalidInput(f"state must have positive trace, got {tr}")
        if abs(tr - 1.0) > 1e-12:
            mat = self.mat / tr
            mat.setflags(write=False)
            object.__setattr__(self, "mat", mat)
            object.__setattr__(self, "norm_factor", float(self.norm_factor) * tr)
        if self.min_eig() < -PSD_TOL:
            raise InvalidInput(f"state is not PSD: min eigenvalue {self.min_eig():.3e}")

    @classmethod
    def from_operator(cls, op: BipartiteOperator) -> "DensityMatrix":
        return cls(op.mat, op.dims)

    @cached_property
    def ppt(self) -> "PPTVerdict":
        return is_ppt(self)


class PPTVerdict(NamedTuple):
    ppt: bool
    min_eigenvalue: float
    eigenvector: np.ndarray | None

    def __bool__(self) -> bool:
        return self.ppt


def _coerce(op, dims=None) -> BipartiteOperator:
    if isinstance(op, BipartiteOperator):
        return op
    if dims is None:
        raise InvalidInput("dims are required for a bare matrix")
    return BipartiteOperator(op, dims)


def _pt_matrix(mat: np.ndarray, dims) -> np.ndarray:
    m, n = dims
    return mat.reshape(m, n, m, n).transpose(2, 1, 0, 3).reshape(m * n, m * n)


def partial_transpose(op, dims=None) -> BipartiteOperator:
    """Transpose on subsystem A: block (i, j) of the result is block (j, i)."""
    op = _coerce(op, dims)
    return BipartiteOperator(_pt_matrix(op.mat, op.dims), op.dims)


def is_ppt(rho: BipartiteOperator, tol: float = 1e-9) -> PPTVerdict:
    """PPT test. An NPT verdict carries the most negative eigenpair of the partial transpose."""
    pt = _pt_matrix(rho.mat, rho.dims)
    w, v = np.linalg.eigh((pt + pt.conj().T) / 2)
    if w[0] >= -tol:
        return PPTVerdict(True, float(w[0]), None)
    return PPTVerdict(False, float(w[0]), v[:, 0])


def apply_local(op, a, b, dims=None) -> BipartiteOperator:
    """Return ``(a (x) b) M (a (x) b)^dagger``; ``a`` is m'xm, ``b`` is n'xn."""
    op = _coerce(op, dims)
    m, n = op.dims
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != m or b.shape[1] != n:
        raise InvalidInput(
            f"local operators {a.shape}, {b.shape} do not act on dims {(m, n)}"
        )
    x = np.kron(a, b)
    return BipartiteOperator(x @ op.mat @ x.conj().T, (a.shape[0], b.shape[0]))


def partial_trace(op, side: str = "B", dims=None) -> np.ndarray:
    """Trace out subsystem ``side`` ("A" or "B"), returning the reduced operator."""
    op = _coerce(op, dims)
    t = op.tensor()
    if side.upper() == "B":
        red = np.einsum("ijkj->ik", t)
    elif side.upper() == "A":
        red = np.einsum("ijil->jl", t)
    else:
        raise InvalidInput(f"side must be 'A' or 'B', got {side!r}")
    return (red + red.conj().T) / 2


def swap_sides(op, dims=None) -> BipartiteOperator:
    """Exchange the subsystems: ``<ij|M'|kl> = <ji|M|lk>``."""
    op = _coerce(op, dims)
    m, n = op.dims
    mat = op.tensor().transpose(1, 0, 3, 2).reshape(m * n, m * n)
    return BipartiteOperator(mat, (n, m))


def conjugate(op: BipartiteOperator) -> BipartiteOperator:
    return BipartiteOperator(op.mat.conj(), op.dims)


def real_part(op: BipartiteOperator) -> BipartiteOperator:
    """``(M + M^*)/2`` as a bipartite operator (a state if ``op`` is one)."""
    mat = op.mat.real
    if isinstance(op, DensityMatrix):
        return DensityMatrix(mat, op.dims)
    return BipartiteOperator(mat, op.dims)


def kron_vectors(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def product_projector(a, b) -> np.ndarray:
    v = kron_vectors(a, b)
    return np.outer(v, v.conj())

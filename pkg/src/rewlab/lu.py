"""Local unitaries ``U (x) V`` and their smooth parameterization."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .bipartite import BipartiteOperator, DensityMatrix, apply_local
from .errors import InvalidInput
from .linalg import is_unitary, max_abs, unitary_od_decompose

__all__ = ["LocalUnitary", "lu_parameterize", "lu_parameter_count", "phase_slice"]


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """A product unitary ``U (x) V``.

    ``factored`` gives each factor as orthogonal @ diagonal @ orthogonal.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("u", "v"):
            mat = np.array(getattr(self, name), dtype=complex)
            if not is_unitary(mat, atol=1e-9):
                raise InvalidInput(f"{name} is not unitary")
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    @classmethod
    def identity(cls, dims) -> "LocalUnitary":
        m, n = dims
        return cls(np.eye(m), np.eye(n))

    @property
    def dims(self) -> tuple[int, int]:
        return self.u.shape[0], self.v.shape[0]

    def kron(self) -> np.ndarray:
        return np.kron(self.u, self.v)

    @cached_property
    def factored(self):
        return unitary_od_decompose(self.u), unitary_od_decompose(self.v)

    def apply(self, op: BipartiteOperator) -> BipartiteOperator:
        """``(U (x) V) M (U (x) V)^dagger``, keeping the state type of ``op``."""
        out = apply_local(op, self.u, self.v)
        if isinstance(op, DensityMatrix):
            return DensityMatrix(out.mat, out.dims)
        return out

    def pull_back(self, op: BipartiteOperator) -> BipartiteOperator:
        """``(U (x) V)^dagger M (U (x) V)``."""
        return apply_local(op, self.u.conj().T, self.v.conj().T)

    def inverse(self) -> "LocalUnitary":
        return LocalUnitary(self.u.conj().T, self.v.conj().T)

    def is_diagonal(self, atol: float = 1e-12) -> bool:
        return all(
            max_abs(x - np.diag(np.diag(x))) <= atol for x in (self.u, self.v)
        )


def lu_parameter_count(dims) -> int:
    m, n = dims
    return m * (m - 1) // 2 + m + n * (n - 1) // 2 + n


def _side(x: np.ndarray, d: int) -> np.ndarray:
    k = d * (d - 1) // 2
    gen = np.zeros((d, d))
    gen[np.triu_indices(d, 1)] = x[:k]
    gen = gen - gen.T
    return expm(gen) @ np.diag(np.exp(1j * x[k:k + d]))


def lu_parameterize(x, dims) -> LocalUnitary:
    """Map a real vector to ``(U, V)`` with ``U = expm(S_A) diag(e^{i phi_A})``.

    Layout of ``x``: the ``m(m-1)/2`` upper-triangle entries of the skew
    generator ``S_A``, then ``m`` phases, then the same for B.
    """
    m, n = (int(d) for d in dims)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != lu_parameter_count((m, n)):
        raise InvalidInput(
            f"parameter vector has length {x.size}, expected {lu_parameter_count((m, n))}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidInput("parameter vector has non-finite entries")
    ka = m * (m - 1) // 2 + m
    return LocalUnitary(_side(x[:ka], m), _side(x[ka:], n))


def phase_slice(dims) -> np.ndarray:
    """Indices of the phase coordinates inside a parameter vector."""
    m, n = dims
    ka = m * (m - 1) // 2
    kb = m * (m - 1) // 2 + m + n * (n - 1) // 2
    return np.concatenate([np.arange(ka, ka + m), np.arange(kb, kb + n)])

"""See-saw optimization of product-state expectations.

``max_product_expectation`` maximizes ``<a,b|M|a,b>`` over unit product
vectors by alternating top-eigenvector steps: fix ``a`` and take the top
eigenvector of the contracted operator on B, then fix ``b`` and do the same on
A. All restarts run as one batch of small eigenproblems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bipartite import BipartiteOperator
from .errors import InvalidInput
from .linalg import as_hermitian, max_abs

__all__ = [
    "ProductOptimum",
    "max_product_expectation",
    "min_product_expectation",
    "product_expectation",
]


@dataclass(frozen=True)
class ProductOptimum:
    value: float
    a: np.ndarray
    b: np.ndarray
    restarts: int
    seed: int | None
    iterations: int
    # Best value over all restarts after each sweep; nondecreasing.
    history: tuple[float, ...] = ()

    @property
    def vector(self) -> np.ndarray:
        return np.kron(self.a, self.b)


def _unpack(m, dims):
    if isinstance(m, BipartiteOperator):
        return m.mat, m.dims
    if dims is None:
        raise InvalidInput("dims are required for a bare matrix")
    mat = as_hermitian(m)
    mm, nn = (int(x) for x in dims)
    if mm * nn != mat.shape[0]:
        raise InvalidInput(f"dims {(mm, nn)} do not match operator size {mat.shape[0]}")
    return mat, (mm, nn)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v) > 1e-8 * np.abs(v).max()))
    return v * (abs(v[idx]) / v[idx])


def product_expectation(m, a, b, dims=None) -> float:
    mat, _ = _unpack(m, dims)
    v = np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    return float(np.vdot(v, mat @ v).real)


def max_product_expectation(
    m,
    dims=None,
    restarts: int = 16,
    seed: int | None = 0,
    max_iter: int = 200,
    tol: float = 1e-13,
    init=None,
    rng: np.random.Generator | None = None,
) -> ProductOptimum:
    """Best ``<a,b|M|a,b>`` found from ``restarts`` seeded random starts.

    ``init`` optionally supplies starting vectors on A (rows); they replace
    the first random starts. Iteration stops once no restart improves by more
    than ``tol * max|M|`` in a sweep. Ties between restarts go to the lowest
    restart index, so the result is deterministic for a fixed seed.
    """
    if restarts < 1:
        raise InvalidInput("restarts must be >= 1")
    mat, (mm, nn) = _unpack(m, dims)
    if rng is None:
        rng = np.random.default_rng(seed)
    t = mat.reshape(mm, nn, mm, nn)
    # tb[(i,k),(j,l)] = M[ij,kl]; contracting with conj(a_i) a_k gives the B operator.
    tb = t.transpose(0, 2, 1, 3).reshape(mm * mm, nn * nn)
    ta = t.transpose(1, 3, 0, 2).reshape(nn * nn, mm * mm)

    a = rng.normal(size=(restarts, mm)) + 1j * rng.normal(size=(restarts, mm))
    if init is not None:
        starts = np.atleast_2d(np.asarray(init, dtype=complex))
        if starts.shape[1] != mm:
            raise InvalidInput("init vectors have the wrong dimension")
        k = min(len(starts), restarts)
        a[:k] = starts[:k]
    a /= np.linalg.norm(a, axis=1, keepdims=True)

    scale = max(max_abs(mat), 1e-300)
    prev = np.full(restarts, -np.inf)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        aa = (a.conj()[:, :, None] * a[:, None, :]).reshape(restarts, mm * mm)
        _, vecs = np.linalg.eigh((aa @ tb).reshape(restarts, nn, nn))
        b = vecs[:, :, -1]
        bb = (b.conj()[:, :, None] * b[:, None, :]).reshape(restarts, nn * nn)
        vals, vecs = np.linalg.eigh((bb @ ta).reshape(restarts, mm, mm))
        a = vecs[:, :, -1]
        cur = vals[:, -1]
        history.append(float(cur.max()))
        if np.all(cur - prev <= tol * scale):
            break
        prev = cur

    best = cur.max()
    r = int(np.flatnonzero(cur >= best - 1e-12 * scale)[0])
    a_best = _fix_phase(a[r])
    b_best = _fix_phase(b[r])
    value = product_expectation(mat, a_best, b_best, (mm, nn))
    # Eigen-solver rounding can make consecutive sweeps differ in the last bits.
    history = tuple(np.maximum.accumulate(history))
    return ProductOptimum(value, a_best, b_best, restarts, seed, it, history)


def min_product_expectation(m, dims=None, **kwargs) -> ProductOptimum:
    """Smallest ``<a,b|M|a,b>`` found; the returned value is the minimum itself."""
    mat, dims = _unpack(m, dims)
    res = max_product_expectation(-mat, dims, **kwargs)
    return ProductOptimum(
        -res.value, res.a, res.b, res.restarts, res.seed, res.iterations,
        tuple(-h for h in res.history),
    )

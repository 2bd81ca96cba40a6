"""Concrete state and witness families, plus structural facts about real parts."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bipartite import (
    BipartiteOperator,
    DensityMatrix,
    _pt_matrix,
    apply_local,
    is_ppt,
    partial_trace,
)
from .errors import DegenerateParameters, InvalidInput, NotAProjector, NotApplicable
from .linalg import max_abs
from .lu import LocalUnitary
from .witness import Provenance, Witness

__all__ = [
    "bell_phase_vector",
    "bell_phase_state",
    "witness_theta",
    "h_counterexample",
    "UpbFamily",
    "upb_family",
    "upb_state",
    "dephase_upb",
    "Rank4Params",
    "rank4_state",
    "quqart_pair",
    "quqart_unnormalized",
    "SupportReduction",
    "support_reduce",
    "ZeroPatternReport",
    "diagonal_realpart_pattern",
    "maximally_mixed",
]


def _ket(i: int, j: int, m: int, n: int) -> np.ndarray:
    v = np.zeros(m * n)
    v[i * n + j] = 1.0
    return v


def maximally_mixed(dims) -> DensityMatrix:
    m, n = dims
    return DensityMatrix(np.eye(m * n) / (m * n), (m, n))


def bell_phase_vector(theta: float) -> np.ndarray:
    """``(|00> + e^{i theta}|11>)/sqrt(2)``."""
    v = np.zeros(4, dtype=complex)
    v[0] = 1.0
    v[3] = np.exp(1j * theta)
    return v / np.sqrt(2)


def bell_phase_state(theta: float) -> DensityMatrix:
    v = bell_phase_vector(theta)
    return DensityMatrix(np.outer(v, v.conj()), (2, 2))


def witness_theta(theta: float, restarts: int = 64, seed: int = 0) -> Witness:
    """``W(theta) = |psi(theta)><psi(theta)|^Gamma``."""
    rho = bell_phase_state(theta)
    op = BipartiteOperator(_pt_matrix(rho.mat, (2, 2)), (2, 2))
    return Witness.certify(op, Provenance.PT_OF_PURE, restarts=restarts, seed=seed,
                           info={"theta": float(theta)})


def h_counterexample() -> BipartiteOperator:
    """Hermitian 4x4 operator whose real part is a witness while it is not one."""
    h = 0.5 * np.array(
        [
            [1, 1j, 2j, 3j],
            [-1j, 0, 1, 4j],
            [-2j, 1, 0, 5j],
            [-3j, -4j, -5j, 1],
        ]
    )
    return BipartiteOperator(h, (2, 2))


@dataclass(frozen=True, eq=False)
class UpbFamily:
    """Five two-qutrit product vectors ``|alpha_k> (x) |beta_k>``."""

    gamma_a: float
    theta_a: float
    phi_a: float
    gamma_b: float
    theta_b: float
    phi_b: float
    alphas: np.ndarray  # shape (5, 3)
    betas: np.ndarray  # shape (5, 3)
    n_a: float
    n_b: float

    @property
    def angles(self) -> tuple[float, ...]:
        return (self.gamma_a, self.theta_a, self.phi_a, self.gamma_b, self.theta_b, self.phi_b)

    def product_vectors(self) -> np.ndarray:
        return np.array([np.kron(a, b) for a, b in zip(self.alphas, self.betas)])

    def projector(self) -> np.ndarray:
        vs = self.product_vectors()
        return vs.T @ vs.conj()


def _norm_const(gamma: float, theta: float) -> float:
    return float(np.sqrt(np.cos(gamma) ** 2 + np.sin(gamma) ** 2 * np.cos(theta) ** 2))


def _upb_side_vectors(gamma, theta, phi, n_const):
    sg, cg, st, ct = np.sin(gamma), np.cos(gamma), np.sin(theta), np.cos(theta)
    ph = np.exp(1j * phi)
    e = np.eye(3)
    mixed = sg * (st * e[0] - ct * e[2]) + cg * ph * e[1]
    tilted = ct * e[0] + st * e[2]
    last = (sg * ct * ph * e[1] + cg * e[2]) / n_const
    return e[0].astype(complex), e[1].astype(complex), tilted.astype(complex), mixed, last


def upb_family(gamma_a, theta_a, phi_a, gamma_b, theta_b, phi_b) -> UpbFamily:
    """Build the quintuple for the given angles.

    Warns when one of sin/cos of a gamma or theta vanishes, where the family
    degenerates. Raises DegenerateParameters when a normalization constant is 0.
    """
    angles = [float(x) for x in (gamma_a, theta_a, phi_a, gamma_b, theta_b, phi_b)]
    if not all(np.isfinite(angles)):
        raise InvalidInput("angles must be finite")
    ga, ta, pa, gb, tb, pb = angles
    for name, ang in (("gamma_A", ga), ("theta_A", ta), ("gamma_B", gb), ("theta_B", tb)):
        if min(abs(np.sin(ang)), abs(np.cos(ang))) < 1e-12:
            warnings.warn(f"degenerate UPB angle {name}={ang}", RuntimeWarning, stacklevel=2)
    n_a, n_b = _norm_const(ga, ta), _norm_const(gb, tb)
    if n_a < 1e-12 or n_b < 1e-12:
        raise DegenerateParameters("normalization constant vanishes")
    a0, a1, a2, a3, a4 = _upb_side_vectors(ga, ta, pa, n_a)
    b0, b1, b2, b3, b4 = _upb_side_vectors(gb, tb, pb, n_b)
    # On B the roles are: beta_0=|1>, beta_1=mixed, beta_2=|0>, beta_3=tilted.
    alphas = np.array([a0, a1, a2, a3, a4])
    betas = np.array([b1, b3, b0, b2, b4])
    return UpbFamily(ga, ta, pa, gb, tb, pb, alphas, betas, n_a, n_b)


def _complement_state(p: np.ndarray) -> DensityMatrix:
    if max_abs(p @ p - p) > 1e-8:
        raise NotAProjector(f"sum of projectors is not a projector (|P^2-P| = {max_abs(p @ p - p):.2e})")
    rank = int(round(np.trace(p).real))
    if rank != 5:
        raise NotAProjector(f"projector has rank {rank}, expected 5")
    return DensityMatrix((np.eye(9) - p) / (9 - rank), (3, 3))


def upb_state(fam: UpbFamily) -> DensityMatrix:
    """``(I_9 - P)/4`` for the projector ``P`` onto the five product vectors."""
    return _complement_state(fam.projector())


def dephase_upb(fam: UpbFamily):
    """Return ``(D_A, D_B, sigma)`` with ``D = diag(1, e^{-i phi}, 1)`` on each side.

    The conjugated projector is real; ``sigma`` is built from its real part
    after checking the imaginary part is below 1e-12.
    """
    upb_state(fam)
    d_a = np.diag([1.0, np.exp(-1j * fam.phi_a), 1.0])
    d_b = np.diag([1.0, np.exp(-1j * fam.phi_b), 1.0])
    x = np.kron(d_a, d_b)
    p = x @ fam.projector() @ x.conj().T
    if max_abs(p.imag) >= 1e-12:
        raise NotAProjector(f"dephased projector is not real (|imag| = {max_abs(p.imag):.2e})")
    return d_a, d_b, _complement_state(p.real)


@dataclass(frozen=True)
class Rank4Params:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(vals)) or min(vals) <= 0:
            raise InvalidInput(f"rank-4 parameters must be positive, got {vals}")


def rank4_matrix_c(p: Rank4Params) -> np.ndarray:
    a, b, c, d = p.a, p.b, p.c, p.d
    c0 = np.array([[0, a, b], [0, 0, 1], [0, 0, 0], [0, 0, 0]], dtype=float)
    c1 = np.array([[0, 0, 0], [0, 0, c], [0, 0, 1], [1, 0, -1 / d]], dtype=float)
    c2 = np.array([[0, -1 / b, 0], [0, 1, 0], [1, -c, 0], [d, 0, 0]], dtype=float)
    return np.hstack([c0, c1, c2])


def rank4_state(p: Rank4Params | None = None, **kwargs) -> DensityMatrix:
    """``C^dagger C`` normalized, with ``C = [C0, C1, C2]`` (4x9, real)."""
    if p is None:
        p = Rank4Params(**kwargs)
    cm = rank4_matrix_c(p)
    return DensityMatrix(cm.T @ cm, (3, 3))


def quqart_unnormalized() -> np.ndarray:
    r = np.zeros((16, 16))
    for terms in ([(0, 0), (1, 1), (2, 2)], [(0, 1), (1, 0), (3, 3)]):
        v = sum(_ket(i, j, 4, 4) for i, j in terms)
        r += np.outer(v, v)
    for i, j in [(0, 2), (2, 0), (1, 2), (2, 1), (0, 3), (3, 0), (1, 3), (3, 1)]:
        v = _ket(i, j, 4, 4)
        r += np.outer(v, v)
    return r


def quqart_pair():
    """Return ``(rho, sigma, lu)`` with ``sigma = lu.apply(rho)``.

    ``rho`` is a real PPT entangled 4x4 state; ``lu = (I, diag(1, 1, i, i))``.
    """
    raw = quqart_unnormalized()
    rho = DensityMatrix(raw, (4, 4))
    lu = LocalUnitary(np.eye(4), np.diag([1, 1, 1j, 1j]))
    sigma = DensityMatrix(apply_local(BipartiteOperator(raw, (4, 4)), lu.u, lu.v).mat, (4, 4))
    return rho, sigma, lu


@dataclass(frozen=True, eq=False)
class SupportReduction:
    p: int
    q: int
    reduced: DensityMatrix
    iso_a: np.ndarray  # m x p, real orthonormal columns
    iso_b: np.ndarray

    def reconstruct(self) -> BipartiteOperator:
        return apply_local(self.reduced, self.iso_a, self.iso_b)


def _range_basis(h: np.ndarray, tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    keep = w > tol * max(w.max(), 1e-300)
    return v[:, keep][:, ::-1]


def support_reduce(rho: DensityMatrix, tol: float = 1e-10) -> SupportReduction:
    """Restrict ``rho`` to ``range(rho^+_A) (x) range(rho^+_B)``.

    The reduced operators of ``rho^+`` are real symmetric, so the isometries
    are real. The state lives in that product subspace, so reconstruction is
    exact up to rounding.
    """
    re = BipartiteOperator(rho.mat.real, rho.dims)
    iso_a = _range_basis(partial_trace(re, "B").real, tol)
    iso_b = _range_basis(partial_trace(re, "A").real, tol)
    red = apply_local(rho, iso_a.T, iso_b.T)
    reduced = DensityMatrix(red.mat, red.dims)
    return SupportReduction(iso_a.shape[1], iso_b.shape[1], reduced, iso_a, iso_b)


@dataclass(frozen=True)
class ZeroPatternReport:
    """Zero pattern forced on a PPT state whose real part is diagonal.

    ``weights[i, j]`` is the diagonal entry ``<ij|rho|ij>``. For every zero
    weight, ``zero_violation`` is the largest entry of ``rho`` that PSD-ness of
    ``rho`` and ``rho^Gamma`` forces to vanish. ``permutation_form`` says whether
    the nonzero weights sit on a (partial) permutation pattern, in which case
    ``rho`` must equal its real part; ``permutation_residual`` measures that.
    """

    weights: np.ndarray
    zero_positions: tuple[tuple[int, int], ...]
    zero_violation: float
    block_violation: float
    permutation_form: bool
    permutation_residual: float | None
    tol: float

    @property
    def holds(self) -> bool:
        ok = self.zero_violation <= self.tol and self.block_violation <= self.tol
        if self.permutation_form:
            ok = ok and self.permutation_residual <= self.tol
        return ok


def diagonal_realpart_pattern(rho: DensityMatrix, tol: float = 1e-10) -> ZeroPatternReport:
    re = rho.mat.real
    if max_abs(re - np.diag(np.diag(re))) > 1e-12:
        raise NotApplicable("real part of the state is not diagonal")
    if not is_ppt(rho).ppt:
        raise NotApplicable("state is not PPT")
    m, n = rho.dims
    t = rho.tensor()  # t[x, k, y, l] = <x k| rho |y l>
    weights = np.diag(re).reshape(m, n).copy()
    zeros = tuple((int(x), int(k)) for x, k in zip(*np.nonzero(weights <= tol)))

    viol = 0.0
    for x, k in zeros:
        # PSD of rho: row (x,k) vanishes. PSD of rho^Gamma: entries <y k|rho|x l> vanish.
        viol = max(viol, max_abs(t[x, k, :, :]), max_abs(t[:, :, x, k]))
        viol = max(viol, max_abs(t[:, k, x, :]), max_abs(t[x, :, :, k]))

    # Off-diagonal blocks rho_xy, rho_yx lose row and column k when p_{x,k} or p_{y,k} is 0.
    bviol = 0.0
    for x in range(m):
        for y in range(m):
            if x == y:
                continue
            for k in range(n):
                if weights[x, k] <= tol or weights[y, k] <= tol:
                    bviol = max(bviol, max_abs(t[x, k, y, :]), max_abs(t[x, :, y, k]))

    nz = weights > tol
    perm = bool(np.all(nz.sum(axis=0) <= 1) and np.all(nz.sum(axis=1) <= 1))
    resid = max_abs(rho.mat - re) if perm else None
    return ZeroPatternReport(weights, zeros, viol, bviol, perm, resid, tol)

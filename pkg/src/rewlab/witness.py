"""Entanglement witnesses and the operations that build, test and project them."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .bipartite import (
    BipartiteOperator,
    DensityMatrix,
    _pt_matrix,
    apply_local,
    is_ppt,
    partial_transpose,
)
from .errors import InvalidInput, NotApplicable, NotAWitness
from .linalg import SchmidtForm, max_abs, polar_decompose, schmidt
from .seesaw import min_product_expectation

__all__ = [
    "Provenance",
    "BlockPositivityEvidence",
    "Witness",
    "Detection",
    "block_positivity_evidence",
    "detects",
    "wt_mix",
    "WtMix",
    "WPlusClass",
    "classify_w_plus",
    "witness_from_npt",
    "ProjectionRecord",
    "project_witness",
    "project_npt",
    "BridgeVerdict",
    "slocc_realness_bridge",
    "DecomposableOperator",
    "decomposable_from_parts",
]

NEG_EIG_RTOL = 1e-10
BLOCK_POS_RTOL = 1e-8
DETECT_DELTA = 1e-10


class Provenance(str, Enum):
    PT_OF_PURE = "partial-transpose-of-pure"
    HYPERPLANE = "hyperplane"
    REALIFIED = "realified"
    PROJECTED = "projected"
    USER = "user"


@dataclass(frozen=True)
class BlockPositivityEvidence:
    """Outcome of a see-saw search for a negative product expectation.

    Evidence-grade only: a passing check means no violation was found.
    """

    min_value: float
    scale: float
    restarts: int
    seed: int | None
    passed: bool
    grade: str = "evidence"


def block_positivity_evidence(op: BipartiteOperator, restarts: int = 64, seed: int = 0,
                              max_iter: int = 500) -> BlockPositivityEvidence:
    scale = max_abs(op.mat)
    res = min_product_expectation(op, restarts=restarts, seed=seed, max_iter=max_iter, tol=1e-15)
    passed = res.value >= -BLOCK_POS_RTOL * scale
    return BlockPositivityEvidence(res.value, scale, restarts, seed, bool(passed))


@dataclass(frozen=True, eq=False)
class Witness:
    """A Hermitian operator certified (evidence-grade) as an entanglement witness.

    Use :meth:`certify` to build one; it checks that the operator is not PSD
    and that a see-saw search finds no negative product expectation.
    """

    op: BipartiteOperator
    provenance: Provenance
    evidence: BlockPositivityEvidence
    info: dict = field(default_factory=dict)

    @classmethod
    def certify(cls, op, provenance=Provenance.USER, dims=None, restarts: int = 64,
                seed: int = 0, info: dict | None = None) -> "Witness":
        if not isinstance(op, BipartiteOperator):
            if dims is None:
                raise InvalidInput("dims are required for a bare matrix")
            op = BipartiteOperator(op, dims)
        op = BipartiteOperator(op.mat, op.dims)
        scale = max_abs(op.mat)
        lam = op.min_eig()
        if not lam < -NEG_EIG_RTOL * scale:
            raise NotAWitness(f"operator is PSD (min eigenvalue {lam:.3e})")
        ev = block_positivity_evidence(op, restarts=restarts, seed=seed)
        if not ev.passed:
            raise NotAWitness(
                f"negative product expectation {ev.min_value:.3e} found by see-saw"
            )
        return cls(op, Provenance(provenance), ev, dict(info or {}))

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dims(self) -> tuple[int, int]:
        return self.op.dims

    @property
    def is_real(self) -> bool:
        return self.op.is_real

    def value(self, rho: BipartiteOperator) -> float:
        return self.op.inner(rho)


class Detection(NamedTuple):
    detected: bool
    value: float

    def __bool__(self) -> bool:
        return self.detected


def _op(x) -> BipartiteOperator:
    return x.op if isinstance(x, Witness) else x


def detects(w, rho, delta: float = DETECT_DELTA) -> Detection:
    """``tr(W rho) < -delta``, returned with the trace value."""
    w_op, r_op = _op(w), _op(rho)
    if w_op.dims != r_op.dims:
        raise InvalidInput(f"dimension mismatch: {w_op.dims} vs {r_op.dims}")
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    val = w_op.inner(r_op)
    return Detection(val < -delta, val)


class WtMix(NamedTuple):
    classification: str  # "EW" or "PSD"
    operator: BipartiteOperator
    min_eigenvalue: float


def wt_mix(w: Witness, t: float) -> WtMix:
    """Classify ``W_t = t W + (1-t) W^*``: an EW exactly when it is not PSD."""
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t must lie in [0, 1], got {t}")
    op = _op(w)
    wt = BipartiteOperator(t * op.mat + (1 - t) * op.mat.conj(), op.dims)
    lam = wt.min_eig()
    tag = "EW" if lam < -NEG_EIG_RTOL * max_abs(op.mat) else "PSD"
    return WtMix(tag, wt, lam)


@dataclass(frozen=True)
class WPlusClass:
    tag: str  # "EW", "PPT-state" or "NPT-state"
    w_plus: BipartiteOperator
    min_eigenvalue: float
    pt_min_eigenvalue: float


def classify_w_plus(w) -> WPlusClass:
    """Split by the PSD and PPT tests on ``W^+ = (W + W^*)/2``."""
    op = _op(w)
    wp = BipartiteOperator(op.mat.real, op.dims)
    tol = NEG_EIG_RTOL * max(max_abs(op.mat), 1e-300)
    lam = wp.min_eig()
    pt_lam = float(np.linalg.eigvalsh(_pt_matrix(wp.mat, wp.dims))[0])
    if lam < -tol:
        tag = "EW"
    elif pt_lam >= -tol:
        tag = "PPT-state"
    else:
        tag = "NPT-state"
    return WPlusClass(tag, wp, lam, pt_lam)


def _schmidt_unitaries(sf: SchmidtForm) -> tuple[np.ndarray, np.ndarray]:
    """Unitaries (U, V) with ``(U (x) V) v = sum_j c_j |j, j>``."""
    m, n = sf.dims

    def complete(cols: np.ndarray, d: int) -> np.ndarray:
        q, _ = np.linalg.qr(np.hstack([cols, np.eye(d, dtype=complex)]))
        q = q[:, :d]
        # QR may flip phases of the given columns; put them back exactly.
        q[:, : cols.shape[1]] = cols
        return q

    u = complete(sf.left, m).conj().T
    v = complete(sf.right, n).conj().T
    return u, v


def _pure_pt_witness(vec: np.ndarray, dims, provenance, restarts, seed, extra=None) -> Witness:
    m, n = dims
    proj = np.outer(vec, vec.conj())
    op = BipartiteOperator(_pt_matrix(proj, dims), dims)
    sf = schmidt(vec, dims)
    u, v = _schmidt_unitaries(sf)
    # (U (x) V) P^T_A (U (x) V)^dag = ((U^* (x) V) P (U^* (x) V)^dag)^T_A, so U^*
    # must rotate the A Schmidt basis.
    lu_u, lu_v = u.conj(), v
    rotated = apply_local(op, lu_u, lu_v).mat
    info = {
        "schmidt": sf,
        "elu": (lu_u, lu_v),
        "elu_imag_residual": max_abs(rotated.imag),
    }
    info.update(extra or {})
    return Witness.certify(op, provenance, restarts=restarts, seed=seed, info=info)


def witness_from_npt(rho: DensityMatrix, restarts: int = 64, seed: int = 0) -> Witness:
    """``|psi_1><psi_1|^Gamma`` for the most negative eigenvector of ``rho^Gamma``.

    ``info["elu"]`` holds a local unitary that turns the witness real, with the
    residual imaginary part in ``info["elu_imag_residual"]``.
    """
    verdict = is_ppt(rho)
    if verdict.ppt:
        raise NotApplicable("state is PPT; no negative eigenvector of its partial transpose")
    w = _pure_pt_witness(verdict.eigenvector, rho.dims, Provenance.PT_OF_PURE, restarts, seed,
                         {"pt_eigenvalue": verdict.min_eigenvalue})
    return w


@dataclass(frozen=True)
class ProjectionRecord:
    """Local maps used by a projection onto ``C^p (x) C^p``.

    ``u`` and ``v`` rotate the Schmidt bases of ``vector`` to the computational
    basis. For states the map applied is ``state_map = P (U^* (x) V)``.
    """

    p: int
    u: np.ndarray
    v: np.ndarray
    coefficients: np.ndarray
    vector: np.ndarray
    eigenvalue: float

    @property
    def compression(self) -> tuple[np.ndarray, np.ndarray]:
        return self.u[: self.p], self.v[: self.p]

    @property
    def projected_vector(self) -> np.ndarray:
        out = np.zeros(self.p * self.p, dtype=complex)
        out[np.arange(self.p) * (self.p + 1)] = self.coefficients
        return out


def _min_rank_negative_vector(mat: np.ndarray, dims, tol: float):
    w, vecs = np.linalg.eigh(mat)
    neg = np.flatnonzero(w < -tol)
    if neg.size == 0:
        return None
    best = None
    for k in neg:
        sf = schmidt(vecs[:, k], dims, tol=1e-10)
        if best is None or sf.rank < best[0].rank:
            best = (sf, vecs[:, k], float(w[k]))
    return best


def _record(sf: SchmidtForm, vec, lam) -> ProjectionRecord:
    u, v = _schmidt_unitaries(sf)
    return ProjectionRecord(sf.rank, u, v, sf.coefficients, vec, lam)


def project_witness(w, restarts: int = 64, seed: int = 0) -> tuple[Witness, ProjectionRecord]:
    """Compress a witness to ``C^p (x) C^p`` around a negative eigenvector.

    ``p`` is the smallest Schmidt rank among an eigenbasis of the negative
    eigenspace. The compressed witness has expectation equal to the chosen
    eigenvalue on ``sum_j c_j |j, j>``.
    """
    op = _op(w)
    found = _min_rank_negative_vector(op.mat, op.dims, NEG_EIG_RTOL * max_abs(op.mat))
    if found is None:
        raise NotAWitness("operator has no negative eigenvector")
    rec = _record(*found)
    a, b = rec.compression
    proj = apply_local(op, a, b)
    wp = Witness.certify(proj, Provenance.PROJECTED, restarts=restarts, seed=seed,
                         info={"projection": rec})
    return wp, rec


def project_npt(rho: DensityMatrix) -> tuple[DensityMatrix, ProjectionRecord]:
    """Compress an NPT state to ``C^p (x) C^p`` keeping it NPT.

    With ``y`` a negative eigenvector of ``rho^Gamma`` of Schmidt rank ``p``
    and ``X = U (x) V`` rotating its Schmidt bases, the state is mapped by
    ``Y = P (U^* (x) V)``. Then ``(Y rho Y^dag)^Gamma = P X rho^Gamma X^dag P``.
    """
    pt = _pt_matrix(rho.mat, rho.dims)
    found = _min_rank_negative_vector(pt, rho.dims, 1e-9)
    if found is None:
        raise NotApplicable("state is PPT")
    rec = _record(*found)
    a, b = rec.compression
    out = apply_local(rho, a.conj(), b)
    if out.trace() <= 0:
        raise NotApplicable("projection annihilates the state")
    state = DensityMatrix(out.mat, out.dims)
    if is_ppt(state).ppt:
        raise NotApplicable("projected state is PPT; numerical failure of the projection")
    return state, rec


def twist_residual(rho: BipartiteOperator, rec: ProjectionRecord) -> float:
    """Max deviation between the two sides of the projection twist identity."""
    a, b = rec.compression
    lhs = _pt_matrix(apply_local(rho, a.conj(), b).mat, (rec.p, rec.p))
    rhs = apply_local(partial_transpose(rho), a, b).mat
    return max_abs(lhs - rhs)


@dataclass(frozen=True)
class BridgeVerdict:
    tag: str  # "InELU" or "Fails"
    u: np.ndarray | None
    v: np.ndarray | None
    imag_norm: float


def slocc_realness_bridge(w_r, a, b, tol: float = 1e-10) -> BridgeVerdict:
    """Reduce SLOCC equivalence to a real witness to LU equivalence.

    With polar forms ``A = U|A|`` and ``B = V|B|``, the SLOCC image
    ``(A (x) B) W_r (A (x) B)^dag`` is the LU image under ``U (x) V`` of
    ``(|A| (x) |B|) W_r (|A| (x) |B|)``. When that middle operator is real,
    ``(U, V)`` certifies the image as LU-equivalent to a real witness.
    """
    op = _op(w_r)
    if max_abs(op.mat.imag) > 1e-12:
        raise InvalidInput("W_r must be real")
    u, abs_a = polar_decompose(a)
    v, abs_b = polar_decompose(b)
    mid = apply_local(op, abs_a, abs_b)
    imag = max_abs(mid.mat.imag)
    if imag < tol:
        return BridgeVerdict("InELU", u, v, imag)
    return BridgeVerdict("Fails", None, None, imag)


@dataclass(frozen=True, eq=False)
class DecomposableOperator:
    """``W = X^Gamma + Y`` with ``X`` and ``Y`` positive semidefinite."""

    op: BipartiteOperator
    x: BipartiteOperator
    y: BipartiteOperator

    def conjugate_by(self, a, b) -> "DecomposableOperator":
        """Image under ``(A (x) B) . (A (x) B)^dag``, kept in decomposable form.

        ``(A (x) B) X^Gamma (A (x) B)^dag = ((A^* (x) B) X (A^* (x) B)^dag)^Gamma``.
        """
        x2 = apply_local(self.x, np.conj(a), b)
        y2 = apply_local(self.y, a, b)
        return DecomposableOperator(apply_local(self.op, a, b), x2, y2)

    def residual(self) -> float:
        return max_abs(self.op.mat - _pt_matrix(self.x.mat, self.x.dims) - self.y.mat)


def decomposable_from_parts(x, y, dims=None) -> DecomposableOperator:
    xo = x if isinstance(x, BipartiteOperator) else BipartiteOperator(x, dims)
    yo = y if isinstance(y, BipartiteOperator) else BipartiteOperator(y, dims)
    if xo.dims != yo.dims:
        raise InvalidInput("X and Y act on different dimensions")
    for name, part in (("X", xo), ("Y", yo)):
        if part.min_eig() < -1e-10 * max(max_abs(part.mat), 1.0):
            raise InvalidInput(f"{name} is not positive semidefinite")
    op = BipartiteOperator(_pt_matrix(xo.mat, xo.dims) + yo.mat, xo.dims)
    return DecomposableOperator(op, xo, yo)

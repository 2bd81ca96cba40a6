"""Frank-Wolfe (Gilbert) projection onto the separable set and its certificates.

The engine minimizes ``||rho - sigma||_F^2`` over separable ``sigma``. Each
step asks the see-saw oracle for the product state maximizing
``<a,b|rho - sigma_k|a,b>``, moves toward it with an exact line search, and
every few steps re-fits all weights at once by non-negative least squares.

Two certificates come out of a run:

* ``Separable``: an explicit product ensemble within ``eps_sep`` of ``rho``.
  Checking it needs arithmetic only.
* ``Entangled``: the hyperplane witness ``c I - (rho - sigma_k)`` with
  ``c`` the oracle's maximum. It is only as good as the oracle, so it is
  evidence-grade.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .bipartite import BipartiteOperator, DensityMatrix
from .errors import InvalidInput, InvalidState, NotApplicable
from .linalg import max_abs
from .seesaw import max_product_expectation
from .witness import Provenance, Witness, detects

__all__ = [
    "ProductEnsemble",
    "SeparabilityVerdict",
    "RewVerdict",
    "gilbert",
    "gilbert_lower_bound",
    "witness_from_hyperplane",
    "realify_witness",
    "rew_detectable",
]

EPS_SEP = 1e-6
ENTANGLED_FACTOR = 10.0
C_MARGIN = 1e-6
_NNLS_SUM_WEIGHT = 1e3


@dataclass(frozen=True, eq=False)
class ProductEnsemble:
    """``sum_k w_k |a_k b_k><a_k b_k|`` with positive weights summing to one."""

    weights: np.ndarray
    a: np.ndarray  # (K, m)
    b: np.ndarray  # (K, n)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        a = np.atleast_2d(np.asarray(self.a, dtype=complex))
        b = np.atleast_2d(np.asarray(self.b, dtype=complex))
        if not (len(w) == len(a) == len(b)) or len(w) == 0:
            raise InvalidInput("ensemble needs matching, non-empty weights and vectors")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise InvalidInput("weights must be positive and sum to 1")
        for side in (a, b):
            if np.max(np.abs(np.linalg.norm(side, axis=1) - 1)) > 1e-12:
                raise InvalidInput("ensemble vectors must have unit norm")
        for name, val in (("weights", w), ("a", a), ("b", b)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dims(self) -> tuple[int, int]:
        return self.a.shape[1], self.b.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def vectors(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.a, self.b).reshape(len(self), -1)

    def matrix(self) -> np.ndarray:
        v = self.vectors()
        return (v.T * self.weights) @ v.conj()

    def distance(self, rho) -> float:
        mat = rho.mat if isinstance(rho, BipartiteOperator) else np.asarray(rho)
        return float(np.linalg.norm(mat - self.matrix()))


@dataclass(frozen=True, eq=False)
class SeparabilityVerdict:
    """Outcome of :func:`gilbert`.

    ``tag`` is "Separable", "Entangled" or "Inconclusive". ``distance`` is the
    final Frobenius distance, ``lower_bound`` the best certified lower bound on
    the distance to the separable set (negative when none was found).
    ``history`` holds the Frobenius distance after every iteration.
    """

    tag: str
    distance: float
    lower_bound: float
    iterations: int
    ensemble: ProductEnsemble
    witness: Witness | None
    history: tuple[float, ...]
    seed: int | None
    settings: dict = field(default_factory=dict)

    @property
    def separable(self) -> bool:
        return self.tag == "Separable"

    @property
    def entangled(self) -> bool:
        return self.tag == "Entangled"

    def is_monotone(self, rtol: float = 1e-12) -> bool:
        h = np.asarray(self.history)
        return bool(np.all(np.diff(h) <= rtol * max(h[0], 1e-300))) if h.size else True


def _herm_vec_index(d: int):
    iu = np.triu_indices(d, 1)
    return iu


def _herm_vec(mat: np.ndarray, iu) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix (Frobenius-preserving)."""
    up = mat[iu] * np.sqrt(2)
    return np.concatenate([np.diag(mat).real, up.real, up.imag])


class _FrankWolfe:
    """Mutable iterate ``sigma = sum_k w_k |v_k><v_k|`` for one run."""

    def __init__(self, rho: np.ndarray, dims):
        self.rho = rho
        self.dims = dims
        m, n = dims
        d = m * n
        self.iu = _herm_vec_index(d)
        self.rho_vec = _herm_vec(rho, self.iu)
        eye_m, eye_n = np.eye(m, dtype=complex), np.eye(n, dtype=complex)
        self.a = [eye_m[i] for i in range(m) for _ in range(n)]
        self.b = [eye_n[j] for _ in range(m) for j in range(n)]
        self.w = np.full(d, 1.0 / d)
        self.cols = [_herm_vec(np.outer(v, v.conj()), self.iu) for v in self._vecs()]
        self.sigma = np.eye(d, dtype=complex) / d

    def _vecs(self):
        return [np.kron(a, b) for a, b in zip(self.a, self.b)]

    def step(self, a: np.ndarray, b: np.ndarray):
        v = np.kron(a, b)
        proj = np.outer(v, v.conj())
        diff = self.rho - self.sigma
        g = proj - self.sigma
        gg = float(np.vdot(g, g).real)
        if gg <= 0:
            return 0.0
        gamma = float(np.clip(np.vdot(diff, g).real / gg, 0.0, 1.0))
        if gamma <= 0:
            return 0.0
        self.sigma = self.sigma + gamma * g
        self.w = np.append(self.w * (1 - gamma), gamma)
        self.a.append(a)
        self.b.append(b)
        self.cols.append(_herm_vec(proj, self.iu))
        return gamma

    def corrective(self):
        """Re-fit all weights by NNLS; keep the result only if it is no worse."""
        amat = np.array(self.cols).T
        aug = np.vstack([amat, _NNLS_SUM_WEIGHT * np.ones((1, amat.shape[1]))])
        rhs = np.concatenate([self.rho_vec, [_NNLS_SUM_WEIGHT]])
        try:
            w, _ = nnls(aug, rhs, maxiter=50 * amat.shape[1])
        except RuntimeError:
            return
        if w.sum() <= 0:
            return
        keep = w > 1e-12
        w = w[keep] / w[keep].sum()
        vecs = np.array(self._vecs())[keep]
        sigma = (vecs.T * w) @ vecs.conj()
        if np.linalg.norm(self.rho - sigma) <= np.linalg.norm(self.rho - self.sigma):
            idx = np.flatnonzero(keep)
            self.a = [self.a[i] for i in idx]
            self.b = [self.b[i] for i in idx]
            self.cols = [self.cols[i] for i in idx]
            self.w = w
            self.sigma = sigma

    def prune(self, eps: float) -> ProductEnsemble:
        """Drop tiny weights, then greedily drop atoms while staying within ``eps``."""
        ens = self.ensemble()
        keep = ens.weights > 1e-10
        if keep.sum() < len(ens):
            cand = ProductEnsemble(ens.weights[keep] / ens.weights[keep].sum(),
                                   ens.a[keep], ens.b[keep])
            if cand.distance(self.rho) <= eps:
                ens = cand
        mask = np.ones(len(ens), dtype=bool)
        for i in np.argsort(ens.weights):
            if mask.sum() == 1:
                break
            mask[i] = False
            w = ens.weights[mask]
            cand = ProductEnsemble(w / w.sum(), ens.a[mask], ens.b[mask])
            if cand.distance(self.rho) > eps:
                mask[i] = True
        w = ens.weights[mask]
        return ProductEnsemble(w / w.sum(), ens.a[mask], ens.b[mask])

    def ensemble(self) -> ProductEnsemble:
        keep = self.w > 0
        w = self.w[keep]
        return ProductEnsemble(
            w / w.sum(),
            np.array([x for x, k in zip(self.a, keep) if k]),
            np.array([x for x, k in zip(self.b, keep) if k]),
        )


def _as_state(rho, dims=None) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    if isinstance(rho, BipartiteOperator):
        return DensityMatrix(rho.mat, rho.dims)
    if dims is None:
        raise InvalidInput("dims are required for a bare matrix")
    return DensityMatrix(rho, dims)


def _run(rho: np.ndarray, dims, *, eps_sep, max_iter, rng, oracle_restarts, oracle_iter,
         confirm_restarts, corrective_every, polish, early_exit, confirm):
    """Shared Frank-Wolfe loop. Returns a dict of raw results."""
    fw = _FrankWolfe(rho, dims)
    history = []
    best = {"lb": -np.inf, "sigma": None, "c": None, "a": None, "dist": None, "k": None}
    a_prev = None
    detected_at = None
    stale = 0
    dist = float(np.linalg.norm(rho - fw.sigma))
    k = 0
    tag = "Inconclusive"
    rho_sq = None
    for k in range(max_iter):
        diff = rho - fw.sigma
        dist = float(np.linalg.norm(diff))
        if dist <= eps_sep:
            tag = "Separable"
            break
        rho_sq = float(np.vdot(diff, rho).real)
        init = None if a_prev is None else a_prev[None, :]
        opt = max_product_expectation(diff, dims, restarts=oracle_restarts, max_iter=oracle_iter,
                                      tol=1e-10, init=init, rng=rng)
        a, b, c = opt.a, opt.b, opt.value
        lb = (rho_sq - c) / dist
        improved = False
        if lb > ENTANGLED_FACTOR * eps_sep and confirm and lb > best["lb"] * 1.02:
            strong = max_product_expectation(diff, dims, restarts=confirm_restarts, max_iter=100,
                                             tol=1e-12, init=a[None, :], rng=rng)
            if strong.value > c:
                a, b, c = strong.a, strong.b, strong.value
            lb = (rho_sq - c) / dist
            if lb > ENTANGLED_FACTOR * eps_sep and lb > best["lb"]:
                improved = True
        elif not confirm and lb > best["lb"]:
            improved = True
        if improved:
            best = {"lb": lb, "sigma": fw.sigma.copy(), "c": c, "a": a, "b": b, "dist": dist, "k": k}
            stale = 0
            if detected_at is None and lb > ENTANGLED_FACTOR * eps_sep:
                detected_at = k
        else:
            stale += 1
        if detected_at is not None and early_exit:
            if k - detected_at >= polish or stale >= 20:
                tag = "Entangled"
                break
        a_prev = a
        fw.step(a, b)
        if corrective_every and (k + 1) % corrective_every == 0:
            fw.corrective()
        history.append(float(np.linalg.norm(rho - fw.sigma)))
    else:
        k = max_iter
        if detected_at is not None:
            tag = "Entangled"
    if tag == "Inconclusive" and detected_at is not None:
        tag = "Entangled"
    return {"tag": tag, "fw": fw, "history": history, "best": best, "iterations": k,
            "distance": float(np.linalg.norm(rho - fw.sigma))}


def gilbert(rho, eps_sep: float = EPS_SEP, max_iter: int = 5000, seed: int | None = 0, *,
            dims=None, oracle_restarts: int = 8, oracle_iter: int = 30,
            confirm_restarts: int = 64, witness_restarts: int = 128,
            corrective_every: int = 5, polish: int = 100) -> SeparabilityVerdict:
    """Decide separability of ``rho`` by Frank-Wolfe projection.

    Separable when the iterate gets within ``eps_sep``; Entangled once the
    hyperplane lower bound ``(<D, rho> - c) / ||D||`` with ``D = rho - sigma_k``
    exceeds ``10 * eps_sep`` (confirmed by a stronger oracle run). After the
    first detection the run continues for up to ``polish`` iterations and
    keeps the iterate with the largest bound. Otherwise Inconclusive.
    """
    if eps_sep <= 0:
        raise InvalidInput("eps_sep must be positive")
    if max_iter < 1:
        raise InvalidInput("max_iter must be >= 1")
    state = _as_state(rho, dims)
    rng = np.random.default_rng(seed)
    settings = dict(eps_sep=eps_sep, max_iter=max_iter, oracle_restarts=oracle_restarts,
                    oracle_iter=oracle_iter, confirm_restarts=confirm_restarts,
                    witness_restarts=witness_restarts, corrective_every=corrective_every,
                    polish=polish)
    raw = _run(state.mat, state.dims, eps_sep=eps_sep, max_iter=max_iter, rng=rng,
               oracle_restarts=oracle_restarts, oracle_iter=oracle_iter,
               confirm_restarts=confirm_restarts, corrective_every=corrective_every,
               polish=polish, early_exit=True, confirm=True)
    fw, best = raw["fw"], raw["best"]
    history = tuple(raw["history"])
    if raw["tag"] == "Separable":
        ens = fw.prune(eps_sep)
        return SeparabilityVerdict("Separable", ens.distance(state), best["lb"], raw["iterations"],
                                   ens, None, history, seed, settings)
    if raw["tag"] == "Entangled":
        wit_seed = int(rng.integers(2**31))
        try:
            w = witness_from_hyperplane(state, best["sigma"], best["a"], restarts=witness_restarts,
                                        seed=wit_seed)
            lb = w.info["lower_bound"]
            return SeparabilityVerdict("Entangled", raw["distance"], lb, raw["iterations"],
                                       fw.ensemble(), w, history, seed, settings)
        except InvalidState:
            pass
    return SeparabilityVerdict("Inconclusive", raw["distance"], best["lb"], raw["iterations"],
                               fw.ensemble(), None, history, seed, settings)


def gilbert_lower_bound(rho, iterations: int = 300, seed: int | None = 0, *, dims=None,
                        eps_sep: float = EPS_SEP, oracle_restarts: int = 4,
                        oracle_iter: int = 20, corrective_every: int = 5) -> float:
    """Best hyperplane lower bound seen in a capped, unconfirmed run.

    A cheap surrogate for "how entangled is rho": positive values are not
    certified. Runs that converge to a separable state still report their
    best (negative) bound, which says how deep inside the separable set the
    state sits.
    """
    state = _as_state(rho, dims)
    raw = _run(state.mat, state.dims, eps_sep=eps_sep, max_iter=iterations,
               rng=np.random.default_rng(seed), oracle_restarts=oracle_restarts,
               oracle_iter=oracle_iter, confirm_restarts=0, corrective_every=corrective_every,
               polish=0, early_exit=False, confirm=False)
    lb = float(raw["best"]["lb"])
    return lb if np.isfinite(lb) else -raw["distance"]


def witness_from_hyperplane(rho, sigma_k, a_star=None, restarts: int = 128,
                            seed: int | None = 0) -> Witness:
    """``W = c I - (rho - sigma_k)`` with ``c`` the maximal product expectation of ``rho - sigma_k``.

    ``c`` carries a safety margin of ``C_MARGIN * ||rho - sigma_k||``, so the
    reported lower bound is smaller than the iterate's by ``C_MARGIN``. Raises InvalidState unless ``tr(W rho) < 0``, i.e. unless the hyperplane
    through ``sigma_k`` separates ``rho`` from every product state found.
    """
    state = _as_state(rho)
    sig = sigma_k.matrix() if isinstance(sigma_k, ProductEnsemble) else np.asarray(
        sigma_k.mat if isinstance(sigma_k, BipartiteOperator) else sigma_k)
    if sig is None or sig.shape != state.mat.shape:
        raise InvalidState("no iterate to build a hyperplane from")
    diff = state.mat - sig
    dist = float(np.linalg.norm(diff))
    if dist == 0:
        raise InvalidState("rho coincides with the separable iterate")
    init = None if a_star is None else np.asarray(a_star)[None, :]
    opt = max_product_expectation(diff, state.dims, restarts=restarts, seed=seed, max_iter=500,
                                  tol=1e-15, init=init)
    # See-saw can stall ~1e-7 * dist below the true maximum when the maximizer
    # is nearly degenerate; the margin keeps W block-positive at a bound cost of C_MARGIN.
    c = opt.value + C_MARGIN * dist
    eye = np.eye(diff.shape[0])
    for attempt in range(3):
        lb = (float(np.vdot(diff, state.mat).real) - c) / dist
        if not lb > 0:
            raise InvalidState(f"no positive lower bound (lb = {lb:.3e})")
        op = BipartiteOperator(c * eye - diff, state.dims)
        try:
            w = Witness.certify(op, Provenance.HYPERPLANE, restarts=restarts,
                                seed=None if seed is None else seed + 1 + attempt,
                                info={"c": c, "lower_bound": lb, "distance": dist})
        except Exception:
            # The check found a product state beating c; raise c to cover it.
            chk = max_product_expectation(diff, state.dims, restarts=restarts,
                                          seed=None if seed is None else seed + 1 + attempt,
                                          max_iter=500, tol=1e-15)
            if chk.value <= c:
                raise
            c = chk.value + C_MARGIN * dist
            continue
        if not detects(w, state).detected:
            raise InvalidState("hyperplane witness does not detect rho")
        return w
    raise InvalidState("could not certify the hyperplane witness")


def realify_witness(w: Witness, rho_real) -> Witness:
    """Return ``W^+ = (W + W^*)/2``, which detects every real state ``W`` detects."""
    state = _as_state(rho_real)
    if max_abs(state.mat.imag) > 1e-14:
        raise NotApplicable("state is not real")
    det = detects(w, state)
    if not det.detected:
        raise NotApplicable(f"witness does not detect the state (tr = {det.value:.3e})")
    if w.is_real:
        return w
    op = BipartiteOperator(w.mat.real, w.dims)
    info = dict(w.info)
    info["realified_from"] = w.provenance.value
    return Witness.certify(op, Provenance.REALIFIED, restarts=w.evidence.restarts,
                           seed=w.evidence.seed if w.evidence.seed is not None else 0, info=info)


@dataclass(frozen=True, eq=False)
class RewVerdict:
    """Whether some real witness detects the state.

    ``tag`` is "Yes", "No" or "Inconclusive". ``separability`` is the engine
    run on the normalized real part.
    """

    tag: str
    witness: Witness | None
    value: float | None
    separability: SeparabilityVerdict
    real_part: DensityMatrix


def rew_detectable(rho, seed: int | None = 0, **gilbert_kwargs) -> RewVerdict:
    """Decide REW-detectability through separability of the real part."""
    state = _as_state(rho)
    plus = DensityMatrix(state.mat.real, state.dims)
    verdict = gilbert(plus, seed=seed, **gilbert_kwargs)
    if verdict.entangled:
        w = realify_witness(verdict.witness, plus)
        return RewVerdict("Yes", w, detects(w, state).value, verdict, plus)
    if verdict.separable:
        return RewVerdict("No", None, None, verdict, plus)
    return RewVerdict("Inconclusive", None, None, verdict, plus)

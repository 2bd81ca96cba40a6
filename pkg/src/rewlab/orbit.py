"""Local-unitary orbit search for entangled real parts, and the detection flowchart.

A PPT entangled state whose real part is separable escapes every real witness.
Some local-unitary image of it may still have an entangled real part; then a
real witness pulled back through that unitary detects the original state.
``search_entangled_real_part`` looks for such an image, and
``flowchart_classify`` chains it after the cheaper tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bipartite import (
    BipartiteOperator,
    DensityMatrix,
    _pt_matrix,
    is_ppt,
    swap_sides,
)
from .errors import NotApplicable
from .linalg import random_unitary
from .lu import LocalUnitary, lu_parameter_count, lu_parameterize, phase_slice
from .separability import (
    EPS_SEP,
    ENTANGLED_FACTOR,
    RewVerdict,
    SeparabilityVerdict,
    gilbert,
    gilbert_lower_bound,
    rew_detectable,
)
from .witness import Witness, detects, witness_from_npt

__all__ = [
    "OrbitCertificate",
    "search_entangled_real_part",
    "FlowchartVerdict",
    "flowchart_classify",
    "PrsTrial",
    "PrsEvidence",
    "prs_evidence",
]

DEFAULT_BUDGET = 2000
DEFAULT_RESTARTS = 16
OBJECTIVE_ITERATIONS = 300


@dataclass(frozen=True, eq=False)
class OrbitCertificate:
    """``lu`` maps the input to a state whose real part a real witness detects.

    ``real_witness`` detects ``lu.apply(rho)``; ``witness`` is its pull-back
    ``(U (x) V)^dag W_r (U (x) V)`` and detects ``rho`` with the same value.
    """

    lu: LocalUnitary
    x: np.ndarray
    real_witness: Witness
    witness: BipartiteOperator
    value: float
    objective: float
    restart: int
    evaluations: int


def _objective(rho: DensityMatrix, x, iterations: int, seed: int) -> float:
    lu = lu_parameterize(x, rho.dims)
    image = lu.apply(rho)
    plus = DensityMatrix(image.mat.real, rho.dims)
    return gilbert_lower_bound(plus, iterations=iterations, seed=seed)


def _pattern_search(f, x0, coords, budget, step0=np.pi / 2, min_step=1e-3):
    """Compass search maximizing ``f`` over ``coords`` of ``x``. Yields incumbents."""
    x = np.array(x0, dtype=float)
    fx = f(x)
    evals = 1
    yield x.copy(), fx, evals
    step = step0
    while step >= min_step and evals < budget:
        moved = False
        for i in coords:
            for sgn in (1.0, -1.0):
                if evals >= budget:
                    return
                y = x.copy()
                y[i] += sgn * step
                fy = f(y)
                evals += 1
                if fy > fx:
                    x, fx, moved = y, fy, True
                    yield x.copy(), fx, evals
                    break
        if not moved:
            step /= 2


def _confirm(rho: DensityMatrix, x, seed: int, gilbert_kwargs):
    lu = lu_parameterize(x, rho.dims)
    image = lu.apply(rho)
    verdict = rew_detectable(image, seed=seed, **gilbert_kwargs)
    if verdict.tag != "Yes":
        return None
    pulled = lu.pull_back(verdict.witness.op)
    value = detects(pulled, rho).value
    return lu, verdict.witness, pulled, value


def search_entangled_real_part(
    rho: DensityMatrix,
    budget: int = DEFAULT_BUDGET,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    iterations: int = OBJECTIVE_ITERATIONS,
    threshold: float = 1e-3,
    gilbert_kwargs: dict | None = None,
) -> OrbitCertificate | None:
    """Search local unitaries ``U (x) V`` for an entangled real part of ``(U (x) V) rho (U (x) V)^dag``.

    Each restart runs a compass search on the phases only, then on all
    parameters. The objective is the best Frank-Wolfe lower bound on the real
    part after ``iterations`` steps. Whenever the incumbent exceeds
    ``threshold`` (and again when a stage ends with a positive incumbent) the
    point is confirmed by a full :func:`rew_detectable` run. ``budget`` counts
    objective evaluations per restart. Restart 0 starts at the identity.
    """
    gilbert_kwargs = dict(gilbert_kwargs or {})
    dims = rho.dims
    npar = lu_parameter_count(dims)
    phases = phase_slice(dims)
    rng = np.random.default_rng(seed)
    tried = set()
    for r in range(restarts):
        x0 = np.zeros(npar)
        if r > 0:
            x0[phases] = rng.uniform(0, 2 * np.pi, size=len(phases))
        obj_seed = int(rng.integers(2**31))
        evals_used = 0

        def f(x):
            return _objective(rho, x, iterations, obj_seed)

        x_best, f_best = x0, -np.inf
        for coords in (phases, np.arange(npar)):
            last = None
            for x, fx, evals in _pattern_search(f, x_best, coords, budget - evals_used):
                last = (x, fx, evals)
                if fx > threshold and fx > f_best:
                    key = tuple(np.round(x, 12))
                    if key not in tried:
                        tried.add(key)
                        hit = _confirm(rho, x, obj_seed, gilbert_kwargs)
                        if hit is not None:
                            return OrbitCertificate(*_cert(hit, x, fx, r, evals_used + evals))
                if fx > f_best:
                    x_best, f_best = x, fx
            if last is not None:
                evals_used += last[2]
            if f_best > ENTANGLED_FACTOR * EPS_SEP:
                key = tuple(np.round(x_best, 12))
                if key not in tried:
                    tried.add(key)
                    hit = _confirm(rho, x_best, obj_seed, gilbert_kwargs)
                    if hit is not None:
                        return OrbitCertificate(*_cert(hit, x_best, f_best, r, evals_used))
            if evals_used >= budget:
                break
    return None


def _cert(hit, x, fx, restart, evals):
    lu, w_r, pulled, value = hit
    return lu, np.asarray(x), w_r, pulled, value, fx, restart, evals


@dataclass(frozen=True)
class PrsTrial:
    transform: str
    tag: str  # rew_detectable verdict tag on the transformed state
    lu: LocalUnitary | None = None
    verdict: RewVerdict | None = None


@dataclass(frozen=True)
class PrsEvidence:
    """Attempts to refute membership in the set of states whose LU orbit has only separable real parts."""

    trials: tuple[PrsTrial, ...]
    seed: int

    @property
    def refuted(self) -> bool:
        return any(t.tag == "Yes" for t in self.trials)

    @property
    def refuting_trial(self) -> PrsTrial | None:
        return next((t for t in self.trials if t.tag == "Yes"), None)

    @property
    def consistent(self) -> bool:
        """No trial refuted; the candidacy stands (as evidence only)."""
        return not self.refuted


PRS_MAX_ITER = 1500


def prs_evidence(rho: DensityMatrix, trials: int = 8, seed: int = 0,
                 gilbert_kwargs: dict | None = None, stop_on_refute: bool = True) -> PrsEvidence:
    """Run :func:`rew_detectable` on the conjugate, partial transpose, swap and random LU images.

    Each trial runs Gilbert with at most ``PRS_MAX_ITER`` iterations unless
    ``gilbert_kwargs`` says otherwise; an Inconclusive trial is consistent
    with candidacy just like a No. Trial seeds and LUs come from one stream,
    so stopping at the first refutation leaves earlier trials unchanged.
    """
    gilbert_kwargs = {"max_iter": PRS_MAX_ITER, **(gilbert_kwargs or {})}
    if not is_ppt(rho).ppt:
        raise NotApplicable("state is NPT")
    rng = np.random.default_rng(seed)
    m, n = rho.dims
    out = []

    def run(name, state, lu=None):
        v = rew_detectable(state, seed=int(rng.integers(2**31)), **gilbert_kwargs)
        out.append(PrsTrial(name, v.tag, lu, v))

    sw = swap_sides(rho)
    fixed = [("identity", lambda: rho),
             ("conjugate", lambda: DensityMatrix(rho.mat.conj(), rho.dims)),
             ("partial-transpose", lambda: DensityMatrix(_pt_matrix(rho.mat, rho.dims), rho.dims)),
             ("swap", lambda: DensityMatrix(sw.mat, sw.dims))]
    for name, make in fixed:
        run(name, make())
        if stop_on_refute and out[-1].tag == "Yes":
            return PrsEvidence(tuple(out), seed)
    for k in range(trials):
        lu = LocalUnitary(random_unitary(m, rng), random_unitary(n, rng))
        run(f"random-lu-{k}", lu.apply(rho), lu)
        if stop_on_refute and out[-1].tag == "Yes":
            break
    return PrsEvidence(tuple(out), seed)


@dataclass(frozen=True, eq=False)
class FlowchartVerdict:
    """Outcome of :func:`flowchart_classify`.

    ``tag`` is one of "NptDetected", "RewDetected", "EluDetected",
    "PrsCandidate" or "Inconclusive". Detected tags carry ``witness`` with
    ``value = tr(W rho) < -delta``; EluDetected also carries ``lu`` and the
    real witness before pull-back. ``separable`` marks a PrsCandidate reached
    because the state itself was found separable.
    """

    tag: str
    witness: BipartiteOperator | None = None
    value: float | None = None
    lu: LocalUnitary | None = None
    real_witness: Witness | None = None
    evidence: PrsEvidence | None = None
    separability: SeparabilityVerdict | None = None
    separable: bool = False
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    details: dict = field(default_factory=dict)

    @property
    def detected(self) -> bool:
        return self.tag.endswith("Detected")


def flowchart_classify(rho: DensityMatrix, budget: int = DEFAULT_BUDGET, seed: int = 0,
                       restarts: int = DEFAULT_RESTARTS, prs_trials: int = 8,
                       gilbert_kwargs: dict | None = None) -> FlowchartVerdict:
    """Decide whether some witness LU-equivalent to a real one detects ``rho``.

    Branches in order: NPT (a partial-transposed pure witness works);
    entangled real part (a real witness works); orbit search; otherwise the
    state is reported as a candidate with the evidence gathered.
    """
    gk = dict(gilbert_kwargs or {})
    if not is_ppt(rho).ppt:
        w = witness_from_npt(rho)
        return FlowchartVerdict("NptDetected", w.op, detects(w, rho).value, real_witness=w,
                                seed=seed, budget=budget)

    rew = rew_detectable(rho, seed=seed, **gk)
    if rew.tag == "Yes":
        return FlowchartVerdict("RewDetected", rew.witness.op, rew.value,
                                lu=LocalUnitary.identity(rho.dims), real_witness=rew.witness,
                                separability=rew.separability, seed=seed, budget=budget)

    if rew.tag == "No":
        own = gilbert(rho, seed=seed, **gk)
        if own.separable:
            return FlowchartVerdict("PrsCandidate", separability=own, separable=True,
                                    seed=seed, budget=budget)

    cert = search_entangled_real_part(rho, budget=budget, restarts=restarts, seed=seed,
                                      gilbert_kwargs=gk)
    if cert is not None:
        return FlowchartVerdict("EluDetected", cert.witness, cert.value, lu=cert.lu,
                                real_witness=cert.real_witness, seed=seed, budget=budget,
                                details={"restart": cert.restart, "evaluations": cert.evaluations,
                                         "x": cert.x.tolist()})

    if rew.tag != "No":
        return FlowchartVerdict("Inconclusive", separability=rew.separability, seed=seed,
                                budget=budget)

    ev = prs_evidence(rho, trials=prs_trials, seed=seed, gilbert_kwargs=gk)
    hit = ev.refuting_trial
    if hit is not None and hit.lu is not None:
        pulled = hit.lu.pull_back(hit.verdict.witness.op)
        return FlowchartVerdict("EluDetected", pulled, detects(pulled, rho).value, lu=hit.lu,
                                real_witness=hit.verdict.witness, evidence=ev, seed=seed,
                                budget=budget)
    if hit is not None:
        # A non-LU transform cannot refute when the real part is separable.
        return FlowchartVerdict("Inconclusive", evidence=ev, seed=seed, budget=budget)
    return FlowchartVerdict("PrsCandidate", evidence=ev, seed=seed, budget=budget)

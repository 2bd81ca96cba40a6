"""JSON files for matrices and verdict certificates, and certificate replay.

Floats are written by ``json`` as the shortest repr that round-trips, so a
write-then-read cycle is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bipartite import BipartiteOperator, DensityMatrix
from .errors import InvalidInput
from .linalg import max_abs
from .lu import LocalUnitary
from .seesaw import min_product_expectation
from .separability import EPS_SEP, ProductEnsemble, RewVerdict, SeparabilityVerdict
from .witness import BLOCK_POS_RTOL, DETECT_DELTA, Witness

__all__ = [
    "MatrixFile",
    "read_matrix",
    "write_matrix",
    "Certificate",
    "certificate_from_separability",
    "certificate_from_rew",
    "certificate_from_flowchart",
    "certificate_from_npt",
    "read_certificate",
    "write_certificate",
    "VerifyReport",
    "verify_certificate",
]

MATRIX_FORMAT = "rewlab-matrix"
CERT_FORMAT = "rewlab-certificate"
KINDS = ("state", "witness", "hermitian")


def _split(mat) -> tuple[list, list]:
    arr = np.asarray(mat, dtype=complex)
    return arr.real.tolist(), arr.imag.tolist()


def _join(re, im, shape=None) -> np.ndarray:
    try:
        r = np.asarray(re, dtype=float)
        i = np.asarray(im, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput("matrix entries must be numbers") from exc
    if r.shape != i.shape:
        raise InvalidInput(f"re and im shapes differ: {r.shape} vs {i.shape}")
    if shape is not None and r.shape != tuple(shape):
        raise InvalidInput(f"expected shape {tuple(shape)}, got {r.shape}")
    return r + 1j * i


@dataclass(frozen=True, eq=False)
class MatrixFile:
    kind: str
    dims: tuple[int, int]
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"kind must be one of {KINDS}, got {self.kind!r}")
        m, n = (int(x) for x in self.dims)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (m * n, m * n):
            raise InvalidInput(f"matrix shape {mat.shape} does not match dims {(m, n)}")
        if self.kind in ("state", "witness"):
            scale = max(max_abs(mat), 1.0)
            if max_abs(mat.real - mat.real.T) > 1e-12 * scale:
                raise InvalidInput("re part is not symmetric")
            if max_abs(mat.imag + mat.imag.T) > 1e-12 * scale:
                raise InvalidInput("im part is not skew-symmetric")
        object.__setattr__(self, "dims", (m, n))
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_operator(cls, op: BipartiteOperator, kind: str | None = None, meta=None):
        if kind is None:
            kind = "state" if isinstance(op, DensityMatrix) else "hermitian"
        meta = dict(meta or {})
        if isinstance(op, DensityMatrix):
            meta.setdefault("norm_factor", op.norm_factor)
        return cls(kind, op.dims, np.array(op.mat), meta)

    def to_dict(self) -> dict:
        re, im = _split(self.matrix)
        return {"format": MATRIX_FORMAT, "version": __version__, "kind": self.kind,
                "dims": list(self.dims), "re": re, "im": im, "meta": self.meta}

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixFile":
        if not isinstance(data, dict):
            raise InvalidInput("matrix file must hold a JSON object")
        for key in ("dims", "re", "im", "kind"):
            if key not in data:
                raise InvalidInput(f"matrix file lacks field {key!r}")
        dims = data["dims"]
        if not (isinstance(dims, list) and len(dims) == 2):
            raise InvalidInput("dims must be a list [m, n]")
        m, n = (int(x) for x in dims)
        mat = _join(data["re"], data["im"], (m * n, m * n))
        return cls(data["kind"], (m, n), mat, dict(data.get("meta", {})))

    def operator(self) -> BipartiteOperator:
        if self.kind == "state":
            return DensityMatrix(self.matrix, self.dims)
        return BipartiteOperator(self.matrix, self.dims)

    def fingerprint(self) -> str:
        return _fingerprint(self.matrix)


def _fingerprint(mat: np.ndarray) -> str:
    arr = np.ascontiguousarray(np.asarray(mat, dtype=complex))
    return hashlib.sha256(arr.tobytes()).hexdigest()


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc


def read_matrix(path) -> MatrixFile:
    return MatrixFile.from_dict(_load_json(path))


def write_matrix(path, mf: MatrixFile) -> None:
    Path(path).write_text(json.dumps(mf.to_dict()))


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class Certificate:
    """A verdict plus everything needed to re-check it without searching.

    ``payload["type"]`` is "ensemble", "witness" or "none". An ensemble
    certificate targets either the state or its real part
    (``payload["target"]``).
    """

    verdict: str
    dims: tuple[int, int]
    payload: dict
    seeds: dict
    tolerances: dict
    source: str
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "format": CERT_FORMAT,
            "version": self.version,
            "source": self.source,
            "verdict": self.verdict,
            "dims": list(self.dims),
            "payload": self.payload,
            "seeds": self.seeds,
            "tolerances": self.tolerances,
            "replay": "rewlab verify CERTIFICATE STATEFILE  (recomputes the checks from the "
                      "payload with fixed seeds; no search)",
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        if not isinstance(data, dict) or data.get("format") != CERT_FORMAT:
            raise InvalidInput("not a certificate file")
        try:
            return cls(data["verdict"], tuple(int(x) for x in data["dims"]), data["payload"],
                       data.get("seeds", {}), data.get("tolerances", {}),
                       data.get("source", ""), data.get("version", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed certificate: {exc}") from exc


def read_certificate(path) -> Certificate:
    return Certificate.from_dict(_load_json(path))


def write_certificate(path, cert: Certificate) -> None:
    Path(path).write_text(json.dumps(cert.to_dict(), indent=1))


def _ensemble_payload(ens: ProductEnsemble, target: str) -> dict:
    a_re, a_im = _split(ens.a)
    b_re, b_im = _split(ens.b)
    return {"type": "ensemble", "target": target, "weights": ens.weights.tolist(),
            "a_re": a_re, "a_im": a_im, "b_re": b_re, "b_im": b_im}


def _witness_payload(w, value: float, evidence=None, lu: LocalUnitary | None = None,
                     real_witness=None) -> dict:
    op = w.op if isinstance(w, Witness) else w
    re, im = _split(op.mat)
    ev = evidence if evidence is not None else (w.evidence if isinstance(w, Witness) else None)
    out = {"type": "witness", "re": re, "im": im, "value": float(value)}
    if ev is not None:
        out["block_positivity"] = {"restarts": ev.restarts, "seed": ev.seed,
                                   "min_value": ev.min_value}
    if lu is not None:
        u_re, u_im = _split(lu.u)
        v_re, v_im = _split(lu.v)
        out["lu"] = {"u_re": u_re, "u_im": u_im, "v_re": v_re, "v_im": v_im}
    if real_witness is not None:
        rw_re, _ = _split(real_witness.mat)
        out["real_witness"] = rw_re
    return out


def _tolerances(eps_sep=EPS_SEP) -> dict:
    return {"eps_sep": eps_sep, "delta": DETECT_DELTA, "block_positivity_rtol": BLOCK_POS_RTOL,
            "replay_value_atol": 1e-12}


def certificate_from_separability(v: SeparabilityVerdict, state, target: str = "state",
                                  source: str = "gilbert") -> Certificate:
    eps = v.settings.get("eps_sep", EPS_SEP)
    if v.separable:
        payload = _ensemble_payload(v.ensemble, target)
    elif v.entangled:
        payload = _witness_payload(v.witness, v.witness.value(state))
        payload["target"] = target
    else:
        payload = {"type": "none", "distance": v.distance, "iterations": v.iterations}
    return Certificate(v.tag, state.dims, payload, {"gilbert": v.seed}, _tolerances(eps), source)


def certificate_from_rew(v: RewVerdict, state, source: str = "rew_detectable") -> Certificate:
    eps = v.separability.settings.get("eps_sep", EPS_SEP)
    if v.tag == "Yes":
        payload = _witness_payload(v.witness, v.value)
    elif v.tag == "No":
        payload = _ensemble_payload(v.separability.ensemble, "real-part")
    else:
        payload = {"type": "none"}
    tag = {"Yes": "RewDetectable", "No": "NotRewDetectable"}.get(v.tag, "Inconclusive")
    return Certificate(tag, state.dims, payload, {"gilbert": v.separability.seed},
                       _tolerances(eps), source)


def certificate_from_npt(w: Witness, state, source: str = "npt") -> Certificate:
    return Certificate("NptDetected", state.dims, _witness_payload(w, w.value(state)),
                       {}, _tolerances(), source)


def certificate_from_flowchart(v, state, source: str = "flowchart") -> Certificate:
    seeds = {"flowchart": v.seed, "budget": v.budget}
    if v.detected:
        payload = _witness_payload(v.witness, v.value,
                                   evidence=v.real_witness.evidence if v.real_witness else None,
                                   lu=v.lu if v.tag == "EluDetected" else None,
                                   real_witness=v.real_witness if v.tag == "EluDetected" else None)
        if v.tag == "EluDetected" and v.real_witness is not None:
            # Block positivity is replayed on the real witness; the pull-back is LU-equivalent.
            payload["block_positivity"]["on"] = "real_witness"
    elif v.tag == "PrsCandidate" and v.separable:
        payload = _ensemble_payload(v.separability.ensemble, "state")
    elif v.tag == "PrsCandidate" and v.evidence is not None:
        ident = v.evidence.trials[0]
        payload = _ensemble_payload(ident.verdict.separability.ensemble, "real-part")
        payload["trials"] = [{"transform": t.transform, "tag": t.tag} for t in v.evidence.trials]
    else:
        payload = {"type": "none"}
    return Certificate(v.tag, state.dims, payload, seeds, _tolerances(), source)


# ---------------------------------------------------------------------- replay


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self) -> list[str]:
        return [f"{'ok  ' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in self.checks]


def _verify_ensemble(p: dict, state: DensityMatrix, tol: dict, rep: VerifyReport) -> None:
    w = np.asarray(p["weights"], dtype=float)
    a = _join(p["a_re"], p["a_im"])
    b = _join(p["b_re"], p["b_im"])
    m, n = state.dims
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != m or b.shape[1] != n or len(a) != len(w) \
            or len(b) != len(w):
        rep.add("ensemble shape", False, f"vectors do not fit dims {state.dims}")
        return
    rep.add("weights", bool(np.all(w > 0) and abs(w.sum() - 1) <= 1e-12),
            f"min {w.min():.3e}, sum-1 = {w.sum() - 1:.1e}")
    norms = np.concatenate([np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)])
    rep.add("unit vectors", float(np.max(np.abs(norms - 1))) <= 1e-12,
            f"max |norm-1| = {np.max(np.abs(norms - 1)):.1e}")
    target = state.mat.real if p.get("target") == "real-part" else state.mat
    if p.get("target") == "real-part":
        target = target / np.trace(target).real
    v = np.einsum("ki,kj->kij", a, b).reshape(len(w), -1)
    recon = (v.T * w) @ v.conj()
    dist = float(np.linalg.norm(target - recon))
    eps = float(tol.get("eps_sep", EPS_SEP))
    rep.add("reconstruction", dist <= eps, f"distance {dist:.3e} <= {eps:.1e}")


def _verify_witness(p: dict, state: DensityMatrix, tol: dict, rep: VerifyReport) -> None:
    w = _join(p["re"], p["im"], state.mat.shape)
    delta = float(tol.get("delta", DETECT_DELTA))
    value = float(np.sum(w.T * state.mat).real)
    rep.add("detection", value < -delta, f"tr(W rho) = {value:.6e} < -{delta:.0e}")
    stored = float(p.get("value", np.nan))
    atol = float(tol.get("replay_value_atol", 1e-12))
    rep.add("stored value", abs(value - stored) <= atol, f"|{value:.15e} - {stored:.15e}|")
    herm = max_abs(w - w.conj().T)
    rep.add("hermitian", herm <= 1e-12 * max(max_abs(w), 1.0), f"{herm:.1e}")

    target = w
    if "lu" in p:
        lu = p["lu"]
        u = _join(lu["u_re"], lu["u_im"])
        v = _join(lu["v_re"], lu["v_im"])
        x = np.kron(u, v)
        unit = max_abs(x.conj().T @ x - np.eye(x.shape[0]))
        rep.add("local unitary", unit <= 1e-10, f"unitarity residual {unit:.1e}")
        if "real_witness" in p:
            w_r = np.asarray(p["real_witness"], dtype=float)
            pulled = x.conj().T @ w_r @ x
            res = max_abs(pulled - w)
            rep.add("pull-back", res <= 1e-12 * max(max_abs(w_r), 1.0),
                    f"|(U x V)^dag W_r (U x V) - W| = {res:.1e}")
            image = x @ state.mat @ x.conj().T
            val_r = float(np.sum(w_r.T * image.real).real)
            rep.add("real witness on real part", val_r < -delta,
                    f"tr(W_r (sigma')^+) = {val_r:.6e}")
            target = w_r
    bp = p.get("block_positivity")
    if bp is None:
        rep.add("block positivity", False, "no replay data")
        return
    scale = max_abs(target)
    res = min_product_expectation(np.asarray(target), state.dims, restarts=int(bp["restarts"]),
                                  seed=bp["seed"], max_iter=500, tol=1e-15)
    rtol = float(tol.get("block_positivity_rtol", BLOCK_POS_RTOL))
    rep.add("block positivity", res.value >= -rtol * scale,
            f"see-saw min {res.value:.3e} over {bp['restarts']} restarts (seed {bp['seed']})")


def verify_certificate(cert: Certificate, state_file: MatrixFile) -> VerifyReport:
    """Re-check a certificate against a state by deterministic arithmetic."""
    rep = VerifyReport()
    if tuple(cert.dims) != tuple(state_file.dims):
        rep.add("dims", False, f"certificate {tuple(cert.dims)} vs state {state_file.dims}")
        return rep
    try:
        state = DensityMatrix(state_file.matrix, state_file.dims)
    except InvalidInput as exc:
        rep.add("state", False, str(exc))
        return rep
    p = cert.payload
    kind = p.get("type")
    try:
        if kind == "ensemble":
            _verify_ensemble(p, state, cert.tolerances, rep)
        elif kind == "witness":
            _verify_witness(p, state, cert.tolerances, rep)
        elif kind == "none":
            rep.add("payload", True, f"{cert.verdict}: nothing to replay")
        else:
            rep.add("payload", False, f"unknown payload type {kind!r}")
    except (KeyError, InvalidInput, ValueError, TypeError) as exc:
        rep.add("payload", False, f"malformed payload: {exc}")
    return rep

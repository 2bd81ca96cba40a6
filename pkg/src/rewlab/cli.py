"""Command-line front end: ``rewlab <command> ...``.

Exit codes: 0 success (for ``flowchart``: detected), 1 failure or
not-applicable input, 2 usage error or (``flowchart``) PrsCandidate,
3 (``flowchart``) inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bipartite import BipartiteOperator, DensityMatrix, is_ppt
from .errors import RewlabError
from .linalg import max_abs
from .orbit import DEFAULT_BUDGET, DEFAULT_RESTARTS, flowchart_classify
from .separability import EPS_SEP, gilbert, rew_detectable
from .serialization import (
    MatrixFile,
    certificate_from_flowchart,
    certificate_from_npt,
    certificate_from_rew,
    certificate_from_separability,
    read_certificate,
    read_matrix,
    verify_certificate,
    write_certificate,
    write_matrix,
)
from .states import (
    Rank4Params,
    bell_phase_state,
    dephase_upb,
    h_counterexample,
    quqart_pair,
    rank4_state,
    support_reduce,
    upb_family,
    upb_state,
    witness_theta,
)
from .witness import project_npt, project_witness, witness_from_npt

FAMILIES = ("bell-phase", "witness-theta", "h-example", "upb", "upb-state", "upb-dephased",
            "rank4", "quqart-rho", "quqart-sigma")
# Generic angles (gamma, theta, phi) per side used when --angles is not given.
DEFAULT_UPB_ANGLES = (np.pi / 5, np.pi / 5, np.pi / 7, np.pi / 5, np.pi / 5, np.pi / 7)

EXIT_OK, EXIT_FAIL, EXIT_PRS, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class _Out:
    """Collects a report; prints text lines, or one JSON object with --json."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.data: dict = {}

    def put(self, key, value, text: str | None = None):
        self.data[key] = value
        if not self.as_json and text is not None:
            print(text)

    def line(self, text: str):
        if not self.as_json:
            print(text)

    def finish(self):
        if self.as_json:
            print(json.dumps(self.data, default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _build(args) -> tuple[BipartiteOperator, str, dict]:
    fam = args.family
    meta: dict = {"family": fam}
    if fam in ("bell-phase", "witness-theta"):
        meta["theta"] = args.theta
        if fam == "bell-phase":
            return bell_phase_state(args.theta), "state", meta
        return witness_theta(args.theta).op, "witness", meta
    if fam == "h-example":
        return h_counterexample(), "hermitian", meta
    if fam.startswith("upb"):
        angles = tuple(args.angles) if args.angles else DEFAULT_UPB_ANGLES
        meta["angles"] = list(angles)
        f = upb_family(*angles)
        if fam == "upb":
            return BipartiteOperator(f.projector(), (3, 3)), "hermitian", meta
        if fam == "upb-state":
            return upb_state(f), "state", meta
        _, _, sigma = dephase_upb(f)
        return sigma, "state", meta
    if fam == "rank4":
        p = Rank4Params(args.a, args.b, args.c, args.d)
        meta.update(a=p.a, b=p.b, c=p.c, d=p.d)
        return rank4_state(p), "state", meta
    rho, sigma, _ = quqart_pair()
    return (rho if fam == "quqart-rho" else sigma), "state", meta


def cmd_construct(args, out: _Out) -> int:
    op, kind, meta = _build(args)
    mf = MatrixFile.from_operator(op, kind, meta)
    real = max_abs(op.mat.imag) == 0
    facts = {"family": args.family, "kind": kind, "dims": list(op.dims), "real": bool(real)}
    if isinstance(op, DensityMatrix):
        v = is_ppt(op)
        facts.update(norm_factor=op.norm_factor, ppt=bool(v.ppt),
                     pt_min_eigenvalue=v.min_eigenvalue, rank=int(np.linalg.matrix_rank(op.mat, tol=1e-10)))
    if args.output:
        write_matrix(args.output, mf)
        facts["output"] = str(args.output)
        for k, v in facts.items():
            out.put(k, v, f"{k}: {v}")
    else:
        # Matrix to stdout, facts to stderr so the output can be piped.
        print(json.dumps(mf.to_dict()))
        for k, v in facts.items():
            print(f"{k}: {v}", file=sys.stderr)
        out.as_json = False
    return EXIT_OK


def _load_state(path) -> tuple[MatrixFile, DensityMatrix]:
    mf = read_matrix(path)
    if mf.kind != "state":
        raise RewlabError(f"{path} holds a {mf.kind}, expected a state")
    return mf, DensityMatrix(mf.matrix, mf.dims)


def _cert_path(args, default_suffix: str) -> Path:
    if getattr(args, "certificate", None):
        return Path(args.certificate)
    p = Path(args.file)
    return p.with_name(p.stem + default_suffix)


def cmd_analyze(args, out: _Out) -> int:
    _, rho = _load_state(args.file)
    v = is_ppt(rho)
    real = max_abs(rho.mat.imag) == 0
    red = support_reduce(rho)
    out.put("ppt", bool(v.ppt), "PPT" if v.ppt else "NPT")
    out.put("pt_min_eigenvalue", v.min_eigenvalue)
    out.put("real", bool(real), "real" if real else "complex")
    out.put("reduced_ranks", [red.p, red.q], f"reduced ranks (p, q) = ({red.p}, {red.q})")
    path = _cert_path(args, ".cert.json")
    if not v.ppt:
        w = witness_from_npt(rho)
        cert = certificate_from_npt(w, rho, source="analyze")
        out.put("verdict", "NPT", f"NPT: detected by a partial-transposed pure witness, "
                                  f"tr = {w.value(rho):.6e}")
    else:
        rew = rew_detectable(rho, seed=args.seed, eps_sep=args.tol)
        cert = certificate_from_rew(rew, rho, source="analyze")
        label = {"Yes": "Yes", "No": "No"}.get(rew.tag, "Inconclusive")
        verdict = f"REW-detectable: {label}"
        if rew.tag == "No":
            own = gilbert(rho, seed=args.seed, eps_sep=args.tol)
            if own.separable:
                cert = certificate_from_separability(own, rho, source="analyze")
                verdict = "Separable"
        out.put("verdict", verdict,
                f"{'PPT' if v.ppt else 'NPT'}, {'real' if real else 'complex'}, {verdict}")
        if rew.tag == "Yes":
            out.put("rew_value", rew.value, f"REW value tr(W rho) = {rew.value:.6e}")
    write_certificate(path, cert)
    out.put("certificate", str(path), f"certificate written: {path}")
    return EXIT_OK


def cmd_flowchart(args, out: _Out) -> int:
    _, rho = _load_state(args.file)
    gk = {"eps_sep": args.tol}
    if args.max_iter is not None:
        gk["max_iter"] = args.max_iter
    v = flowchart_classify(rho, budget=args.budget, seed=args.seed, restarts=args.restarts,
                           prs_trials=args.trials, gilbert_kwargs=gk)
    out.put("tag", v.tag, f"verdict: {v.tag}")
    if v.detected:
        out.put("value", v.value, f"tr(W rho) = {v.value:.6e}")
        if v.tag == "EluDetected":
            out.put("lu_u", v.lu.u)
            out.put("lu_v", v.lu.v)
            out.line("local unitary recorded in the certificate")
    elif v.tag == "PrsCandidate":
        if v.separable:
            out.put("separable", True, "state is separable (ensemble certificate)")
        else:
            out.put("trials", [(t.transform, t.tag) for t in v.evidence.trials],
                    "no transform refuted candidacy (evidence only, not a membership proof)")
    path = _cert_path(args, ".flowchart.cert.json")
    write_certificate(path, certificate_from_flowchart(v, rho))
    out.put("certificate", str(path), f"certificate written: {path}")
    if v.detected:
        return EXIT_OK
    return EXIT_PRS if v.tag == "PrsCandidate" else EXIT_INCONCLUSIVE


def cmd_verify(args, out: _Out) -> int:
    cert = read_certificate(args.certificate_file)
    mf = read_matrix(args.state)
    rep = verify_certificate(cert, mf)
    for name, ok, detail in rep.checks:
        out.line(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    out.put("checks", [{"name": n, "ok": ok, "detail": d} for n, ok, d in rep.checks])
    out.put("verdict", cert.verdict)
    out.put("passed", rep.passed, "PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_project(args, out: _Out) -> int:
    mf = read_matrix(args.file)
    if mf.kind == "state":
        rho = DensityMatrix(mf.matrix, mf.dims)
        proj, rec = project_npt(rho)
        kind = "state"
    else:
        w, rec = project_witness(BipartiteOperator(mf.matrix, mf.dims))
        proj, kind = w.op, "witness"
    out.put("p", rec.p, f"p = {rec.p}")
    out.put("schmidt_coefficients", rec.coefficients,
            f"Schmidt coefficients: {np.array2string(rec.coefficients, precision=6)}")
    out.put("eigenvalue", rec.eigenvalue, f"negative eigenvalue used: {rec.eigenvalue:.6e}")
    meta = {"projected_from": str(args.file), "p": rec.p,
            "u_re": rec.u.real.tolist(), "u_im": rec.u.imag.tolist(),
            "v_re": rec.v.real.tolist(), "v_im": rec.v.imag.tolist()}
    target = Path(args.output) if args.output else Path(args.file).with_name(
        Path(args.file).stem + ".projected.json")
    write_matrix(target, MatrixFile.from_operator(proj, kind, meta))
    out.put("output", str(target), f"written: {target}")
    return EXIT_OK


def cmd_gilbert(args, out: _Out) -> int:
    _, rho = _load_state(args.file)
    v = gilbert(rho, eps_sep=args.tol, max_iter=args.max_iter, seed=args.seed)
    out.put("tag", v.tag, f"verdict: {v.tag}")
    out.put("distance", v.distance, f"distance: {v.distance:.6e}")
    out.put("lower_bound", v.lower_bound, f"lower bound: {v.lower_bound:.6e}")
    out.put("iterations", v.iterations, f"iterations: {v.iterations}")
    path = _cert_path(args, ".gilbert.cert.json")
    write_certificate(path, certificate_from_separability(v, rho))
    out.put("certificate", str(path), f"certificate written: {path}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, help=f"separability tolerance (default {EPS_SEP})")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--budget", type=int,
                        help=f"orbit-search evaluations per restart (default {DEFAULT_BUDGET})")
    common.add_argument("--json", action="store_true", help="machine-readable report on stdout")

    ap = argparse.ArgumentParser(prog="rewlab", parents=[common],
                                 description="Real entanglement witnesses and LU orbits.")
    ap.add_argument("--version", action="version", version=f"rewlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build a named family member")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--angles", type=float, nargs=6,
                   metavar=("GA", "TA", "PA", "GB", "TB", "PB"))
    for name in "abcd":
        p.add_argument(f"--{name}", type=float, default=1.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("analyze", parents=[common], help="PPT, realness, REW-detectability")
    p.add_argument("file")
    p.add_argument("--certificate")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("flowchart", parents=[common], help="run the full detection flowchart")
    p.add_argument("file")
    p.add_argument("--certificate")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--trials", type=int, default=8, help="random LU trials for candidate evidence")
    p.add_argument("--max-iter", type=int, default=None,
                   help="Frank-Wolfe iterations per run (default 5000; 1500 for evidence trials)")
    p.set_defaults(func=cmd_flowchart)

    p = sub.add_parser("verify", parents=[common], help="replay a certificate against a state")
    p.add_argument("certificate_file")
    p.add_argument("state")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("project", parents=[common], help="project an NPT state or a witness")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("gilbert", parents=[common], help="Frank-Wolfe separability test")
    p.add_argument("file")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--certificate")
    p.set_defaults(func=cmd_gilbert)
    return ap


GLOBAL_DEFAULTS = {"tol": EPS_SEP, "seed": 0, "budget": DEFAULT_BUDGET, "json": False}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    # Filled in here, not with set_defaults: parent parsers share their action
    # objects, so a default set on one level would overwrite flags given at the other.
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    out = _Out(args.json)
    try:
        code = args.func(args, out)
    except RewlabError as exc:
        out.put("error", f"{type(exc).__name__}: {exc}")
        if not args.json:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    out.finish()
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

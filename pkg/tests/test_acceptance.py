"""Acceptance criteria, one test each, with a PASS/FAIL line and wall time per criterion.

Run ``pytest tests/test_acceptance.py -v`` for the summary block at the end of
the session (``-s`` also shows each line as it happens).
"""

import functools
import time

import numpy as np
import pytest

import test_properties as props
from conftest import UPB_ANGLES
from oracles import haar, npt_rank2_state
from rewlab.bipartite import DensityMatrix, is_ppt, partial_transpose
from rewlab.cli import main
from rewlab.linalg import inertia, max_abs
from rewlab.orbit import flowchart_classify, prs_evidence
from rewlab.separability import gilbert, realify_witness, rew_detectable
from rewlab.serialization import (
    MatrixFile,
    certificate_from_flowchart,
    certificate_from_rew,
    certificate_from_separability,
    write_certificate,
    write_matrix,
)
from rewlab.states import (
    bell_phase_state,
    dephase_upb,
    h_counterexample,
    maximally_mixed,
    quqart_pair,
    rank4_state,
    upb_family,
    upb_state,
)
from rewlab.witness import detects, project_npt, project_witness, twist_residual, Witness, witness_from_npt
from test_states import quqart_real_part_decomposition

RESULTS = []


def criterion(label, limit=None):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                note = fn(*args, **kwargs)
                dt = time.perf_counter() - t0
                if limit is not None:
                    assert dt < limit, f"took {dt:.1f}s, limit {limit}s"
            except BaseException as exc:
                line = f"FAIL {label} ({time.perf_counter() - t0:.1f}s): {exc!s:.200}"
                RESULTS.append(line)
                print(line)
                raise
            line = f"PASS {label} ({dt:.1f}s)" + (f": {note}" if note else "")
            RESULTS.append(line)
            print(line)
        return run
    return wrap


# Heavy computations shared with the certificate replay criterion.

@functools.cache
def c3_runs():
    half = bell_phase_state(np.pi / 2)
    tilted = bell_phase_state(0.3)
    return (half, rew_detectable(half)), (tilted, rew_detectable(tilted))


@functools.cache
def c4_runs():
    _, sigma, _ = quqart_pair()
    plus = DensityMatrix(sigma.mat.real, sigma.dims)
    return sigma, plus, gilbert(plus), flowchart_classify(sigma)


@functools.cache
def c5_runs():
    fam = upb_family(*UPB_ANGLES)
    _, _, sigma = dephase_upb(fam)
    return fam, sigma, gilbert(sigma)


@criterion("1 W(theta)+ spectrum", limit=5)
def test_c1_witness_theta_spectrum():
    for theta in (0, np.pi / 6, np.pi / 4, np.pi / 3, np.pi / 2, 2, 5):
        psi = bell_phase_state(theta)
        w = partial_transpose(psi).mat
        got = np.linalg.eigvalsh(w.real)
        want = np.sort([0.5, 0.5, np.cos(theta) / 2, -np.cos(theta) / 2])
        assert max_abs(got - want) < 1e-10, theta


@criterion("2 H counterexample", limit=5)
def test_c2_h_counterexample():
    h = h_counterexample()
    assert tuple(inertia(h.mat)) == (2, 0, 2)
    target = partial_transpose(bell_phase_state(0)).mat
    assert max_abs(h.mat.real - target) < 1e-14


@criterion("3 REW-detectability dichotomy", limit=10)
def test_c3_rew_dichotomy():
    (_, no), (tilted, yes) = c3_runs()
    assert no.tag == "No"
    assert no.separability.ensemble.distance(no.real_part) <= 1e-6
    assert yes.tag == "Yes" and yes.witness.is_real
    assert yes.value < -1e-3
    assert detects(yes.witness, tilted).value == pytest.approx(yes.value, abs=1e-12)
    return f"tr = {yes.value:.3e}"


@criterion("4 quqart end-to-end", limit=120)
def test_c4_quqart():
    rho, _, _ = quqart_pair()
    assert np.linalg.eigvalsh(partial_transpose(rho).mat)[0] >= -1e-10
    sigma, plus, sep, flow = c4_runs()
    assert max_abs(sigma.mat.real - quqart_real_part_decomposition()) < 1e-14
    assert sep.tag == "Separable" and sep.ensemble.distance(plus) <= 1e-6
    assert flow.tag == "EluDetected"
    assert isinstance(flow.real_witness, Witness) and flow.real_witness.is_real
    assert flow.value < -1e-4
    assert detects(flow.witness, sigma).value == pytest.approx(flow.value, abs=1e-12)
    return f"pulled-back tr = {flow.value:.3e}"


@criterion("5 UPB pipeline", limit=300)
def test_c5_upb():
    fam, sigma, v = c5_runs()
    rho = upb_state(fam)
    assert is_ppt(rho).ppt
    lam = np.linalg.eigvalsh(rho.mat)
    assert np.sum(lam > 1e-10) == 4 and np.sum(np.abs(lam) <= 1e-10) == 5
    assert max_abs(sigma.mat.imag) < 1e-12
    assert v.tag == "Entangled" and v.lower_bound > 0
    rew = realify_witness(v.witness, sigma)
    assert rew.is_real and detects(rew, sigma).detected
    return f"lower bound = {v.lower_bound:.3e}, tr = {detects(rew, sigma).value:.3e}"


@criterion("6 rank-4 family", limit=30)
def test_c6_rank4():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        a, b, c, d = rng.uniform(0.2, 5, size=4)
        s = rank4_state(a=a, b=b, c=c, d=d).mat
        assert max_abs(s.imag) == 0
        lam = np.linalg.eigvalsh(s)
        assert lam[0] > -1e-12 and np.sum(lam > 1e-10 * lam[-1]) == 4
        dev = max_abs(partial_transpose(DensityMatrix(s, (3, 3))).mat - s)
        worst = max(worst, dev)
    # The invariance claim is part of the criterion; a deviation is reported in the message.
    assert worst < 1e-12, f"finding: sigma^Gamma != sigma, max deviation {worst:.3e}"
    return f"max |sigma^Gamma - sigma| = {worst:.1e}"


@criterion("7 identity/property suite", limit=60)
def test_c7_properties():
    for fn in (props.test_trace_identities, props.test_split_and_skew,
               props.test_conjugation_and_gamma_duality,
               props.test_ppt_survives_lu_and_slocc_with_real_part,
               props.test_witness_set_convex_and_lu_covariant,
               props.test_frank_wolfe_monotone_and_certified):
        fn()


@criterion("8 projection lemmas", limit=30)
def test_c8_projection():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(50):
        rho = DensityMatrix(npt_rank2_state(rng), (3, 3))
        small, rec = project_npt(rho)
        assert rec.p == 2 and small.dims == (2, 2) and not is_ppt(small).ppt
        worst = max(worst, twist_residual(rho, rec))
        pw, prec = project_witness(witness_from_npt(rho))
        y = prec.projected_vector
        assert np.real(y.conj() @ pw.mat @ y) < 0
    assert worst < 1e-12
    return f"max twist residual = {worst:.1e}"


@criterion("9 certificate replay", limit=None)
def test_c9_replay(tmp_path, capsys):
    certs = []
    for state, v in c3_runs():
        certs.append(("c3", state, certificate_from_rew(v, state)))
    sigma, plus, sep, flow = c4_runs()
    certs.append(("c4-sep", plus, certificate_from_separability(sep, plus)))
    certs.append(("c4-flow", sigma, certificate_from_flowchart(flow, sigma)))
    _, upb_sigma, v = c5_runs()
    certs.append(("c5", upb_sigma, certificate_from_separability(v, upb_sigma)))
    t0 = time.perf_counter()
    for k, (name, state, cert) in enumerate(certs):
        sp, cp = tmp_path / f"{k}.state.json", tmp_path / f"{k}.cert.json"
        write_matrix(sp, MatrixFile.from_operator(state))
        write_certificate(cp, cert)
        outs = []
        for _ in range(2):
            assert main(["verify", str(cp), str(sp)]) == 0, name
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1], name
    return f"{len(certs)} certificates, replay {time.perf_counter() - t0:.1f}s"


@criterion("? prs_evidence never refutes separable states; refutes quqart sigma")
def test_prs_branch():
    rng = np.random.default_rng(10)
    separable = [maximally_mixed((2, 2)), maximally_mixed((3, 3))]
    for dims in ((2, 2), (2, 3)):
        mix = np.zeros((dims[0] * dims[1],) * 2, dtype=complex)
        for _ in range(12):
            a, b = haar(dims[0], rng)[:, 0], haar(dims[1], rng)[:, 0]
            ab = np.kron(a, b)
            mix += rng.uniform() * np.outer(ab, ab.conj())
        separable.append(DensityMatrix(0.5 * mix / np.trace(mix).real
                                       + 0.5 * np.eye(len(mix)) / len(mix), dims))
    for rho in separable:
        assert not prs_evidence(rho, trials=2).refuted
    sigma = c4_runs()[0]
    ev = prs_evidence(sigma)
    assert ev.refuted
    return f"sigma refuted by {ev.refuting_trial.transform}"

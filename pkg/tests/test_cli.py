import json
import subprocess
import sys

import numpy as np
import pytest

from rewlab.bipartite import DensityMatrix
from rewlab.cli import main
from rewlab.serialization import MatrixFile, read_certificate, read_matrix, write_matrix
from rewlab.states import witness_theta

from oracles import random_density


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def construct(capsys, tmp_path, family, *extra):
    path = tmp_path / f"{family}.json"
    code, _, _ = run(capsys, "construct", family, "-o", path, *extra)
    assert code == 0
    return path


def random_separable_file(tmp_path, rng):
    mat = 0.5 * np.eye(4) / 4
    for w in (0.2, 0.3):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        v = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
        mat = mat + w * np.outer(v, v.conj())
    path = tmp_path / "sep.json"
    write_matrix(path, MatrixFile.from_operator(DensityMatrix(mat, (2, 2))))
    return path


class TestConstruct:
    def test_quqart_rho(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "quqart-rho")
        mf = read_matrix(path)
        assert mf.dims == (4, 4) and mf.meta["norm_factor"] == 14
        assert not np.any(mf.matrix.imag)

    def test_witness_theta(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "witness-theta", "--theta", 1.5707963)
        mf = read_matrix(path)
        assert mf.kind == "witness"
        np.testing.assert_allclose(mf.matrix, witness_theta(1.5707963).mat, atol=0)

    def test_rank4(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "rank4", "--a", 1, "--b", 1, "--c", 1, "--d", 1)
        mf = read_matrix(path)
        assert mf.dims == (3, 3) and np.linalg.matrix_rank(mf.matrix, tol=1e-10) == 4

    def test_stdout_when_no_output(self, capsys):
        code, out, err = run(capsys, "construct", "bell-phase", "--theta", 0.5)
        assert code == 0
        data = json.loads(out)
        assert data["dims"] == [2, 2] and "ppt: False" in err

    def test_unknown_family(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["construct", "nope"])
        assert exc.value.code != 0

    def test_invalid_params(self, capsys):
        code, _, err = run(capsys, "construct", "rank4", "--a", -1)
        assert code == 1 and "InvalidInput" in err

    def test_upb_default_angles(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "upb-dephased")
        mf = read_matrix(path)
        assert not np.any(mf.matrix.imag)
        assert mf.meta["angles"] == pytest.approx([np.pi / 5, np.pi / 5, np.pi / 7] * 2)


class TestAnalyze:
    def test_quqart_sigma(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "quqart-sigma")
        code, out, _ = run(capsys, "analyze", path)
        assert code == 0 and "PPT, complex, REW-detectable: No" in out
        cert = tmp_path / "quqart-sigma.cert.json"
        code, out, _ = run(capsys, "verify", cert, path)
        assert code == 0 and "PASS" in out

    def test_bell_npt(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "bell-phase")
        code, out, _ = run(capsys, "analyze", path)
        assert code == 0 and out.splitlines()[0] == "NPT"

    def test_maximally_mixed(self, capsys, tmp_path):
        path = tmp_path / "mm.json"
        write_matrix(path, MatrixFile("state", (3, 3), np.eye(9) / 9))
        code, out, _ = run(capsys, "--json", "analyze", path)
        data = json.loads(out)
        assert code == 0 and data["verdict"] == "Separable"
        code, _, _ = run(capsys, "verify", data["certificate"], path)
        assert code == 0

    def test_wrong_kind(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "witness-theta")
        code, _, err = run(capsys, "analyze", path)
        assert code == 1 and "expected a state" in err

    def test_malformed(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("[1, 2")
        code, _, err = run(capsys, "analyze", path)
        assert code == 1 and "InvalidInput" in err


class TestFlowchart:
    def test_npt(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "bell-phase", "--theta", 0.2)
        code, out, _ = run(capsys, "--json", "flowchart", path)
        assert code == 0 and json.loads(out)["tag"] == "NptDetected"

    def test_quqart_sigma(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "quqart-sigma")
        cert = tmp_path / "fc.json"
        code, out, _ = run(capsys, "--json", "flowchart", path, "--certificate", cert)
        data = json.loads(out)
        assert code == 0 and data["tag"] == "EluDetected" and data["value"] < -1e-4
        code, out, _ = run(capsys, "--json", "verify", cert, path)
        rep = json.loads(out)
        assert code == 0 and rep["passed"]
        names = {c["name"] for c in rep["checks"]}
        assert {"stored value", "pull-back", "block positivity"} <= names

    def test_separable_exit_2(self, capsys, tmp_path, rng):
        path = random_separable_file(tmp_path, rng)
        code, out, _ = run(capsys, "flowchart", path)
        assert code == 2 and "separable" in out
        code, _, _ = run(capsys, "verify", tmp_path / "sep.flowchart.cert.json", path)
        assert code == 0

    def test_inconclusive_exit_3(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "quqart-sigma")
        code, out, _ = run(capsys, "--budget", 1, "flowchart", path, "--restarts", 1,
                           "--max-iter", 3)
        assert code == 3 and "Inconclusive" in out


class TestProjectAndGilbert:
    def test_project_bell(self, capsys, tmp_path):
        path = construct(capsys, tmp_path, "bell-phase")
        code, out, _ = run(capsys, "project", path)
        assert code == 0 and "p = 2" in out
        assert read_matrix(tmp_path / "bell-phase.projected.json").dims == (2, 2)

    def test_project_engineered_witness(self, capsys, tmp_path):
        y = np.zeros(9)
        y[0], y[4] = 0.8, 0.6
        p = np.outer(y, y).reshape(3, 3, 3, 3).transpose(2, 1, 0, 3).reshape(9, 9)
        path = tmp_path / "w.json"
        write_matrix(path, MatrixFile("witness", (3, 3), p))
        code, out, _ = run(capsys, "--json", "project", path)
        data = json.loads(out)
        assert code == 0 and data["p"] == 2
        assert read_matrix(data["output"]).dims == (2, 2)

    def test_project_ppt_fails(self, capsys, tmp_path):
        path = tmp_path / "mm.json"
        write_matrix(path, MatrixFile("state", (2, 2), np.eye(4) / 4))
        code, _, err = run(capsys, "project", path)
        assert code == 1 and "NotApplicable" in err

    def test_gilbert_seed_reproducible(self, capsys, tmp_path, rng):
        path = tmp_path / "r.json"
        write_matrix(path, MatrixFile.from_operator(DensityMatrix(random_density(4, rng), (2, 2))))
        outs = []
        for k in range(2):
            cert = tmp_path / f"g{k}.json"
            code, out, _ = run(capsys, "--json", "--seed", 11, "gilbert", path, "--certificate", cert)
            outs.append((out.replace(str(cert), ""), read_certificate(cert).payload))
            assert code == 0
        assert outs[0] == outs[1]

    def test_dims_mismatch_verify(self, capsys, tmp_path):
        bell = construct(capsys, tmp_path, "bell-phase")
        run(capsys, "analyze", bell)
        mm = tmp_path / "mm.json"
        write_matrix(mm, MatrixFile("state", (3, 3), np.eye(9) / 9))
        code, out, _ = run(capsys, "verify", tmp_path / "bell-phase.cert.json", mm)
        assert code == 1 and "FAIL dims" in out


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rewlab", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("rewlab ")

import json
import subprocess
import sys

import numpy as np
import pytest

from qlenv import cli
from qlenv import linalg as la
from qlenv.fixtures import EXAMPLES, LOWERING, SIGMA_X, build, mixed_pair, spontaneous_emission
from qlenv.io import CoefficientFile, ParseError
from qlenv.model import QleCoefficients


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def fixture_file(tmp_path):
    def make(name, **params):
        path = tmp_path / f"{name}.json"
        CoefficientFile(build(name, **params), {"name": name}).write(path)
        return path

    return make


@pytest.mark.parametrize("name", sorted(EXAMPLES))
def test_round_trip_bitwise(name):
    c = build(name)
    back = CoefficientFile.loads(CoefficientFile(c, {"k": "v"}).dumps())
    c2 = back.coefficients
    assert np.array_equal(c.H, c2.H) and np.array_equal(c.S, c2.S)
    assert all(np.array_equal(a, b) for a, b in zip(c.L0, c2.L0))
    assert back.metadata == {"k": "v"}


def test_s_blocks_index_convention():
    rng = np.random.default_rng(0)
    S = la.haar_unitary(4, rng)
    c = QleCoefficients(np.zeros((2, 2)), (np.zeros((2, 2)),) * 2, S)
    obj = CoefficientFile(c).to_dict()
    B = c.S_blocks()
    # S_blocks[i][j] is S^i_j, stored internally at block (j, i)
    got = np.array(obj["S_blocks"][0][1])
    assert np.array_equal(got[..., 0] + 1j * got[..., 1], B[1, 0])


@pytest.mark.parametrize(
    "text, needle",
    [
        ("", "empty"),
        ("{", "line"),
        ("[]", "top level"),
        ('{"dim_system": 2}', "dim_noise"),
        ('{"dim_system": 0, "dim_noise": 1, "H": [], "L0": [], "S_blocks": []}', "dim_system"),
    ],
)
def test_parse_errors(text, needle):
    with pytest.raises(ParseError) as exc:
        CoefficientFile.loads(text)
    assert needle in str(exc.value)


def test_parse_error_names_field():
    obj = CoefficientFile(spontaneous_emission()).to_dict()
    obj["L0"][0] = [[[0, 0]]]
    with pytest.raises(ParseError) as exc:
        CoefficientFile.from_dict(obj)
    assert exc.value.field == "L0[0]"


def test_validate(capsys, fixture_file, tmp_path):
    code, rep, _ = run(capsys, "validate", fixture_file("spontaneous_emission"))
    assert code == 0 and rep["valid"]
    c = spontaneous_emission()
    bad = tmp_path / "bad.json"
    CoefficientFile(QleCoefficients(c.H, c.L0, 1.1 * c.S)).write(bad)
    code, rep, _ = run(capsys, "validate", bad)
    assert code == 1 and rep["violation"] == "S unitary"
    empty = tmp_path / "empty.json"
    empty.write_text("")
    code, rep, err = run(capsys, "validate", empty)
    assert code == 2 and rep is None and "empty" in err
    code, _, err = run(capsys, "validate", tmp_path / "missing.json")
    assert code == 2 and "cannot read" in err


def test_classify(capsys, fixture_file):
    code, rep, _ = run(capsys, "classify", fixture_file("spontaneous_emission"))
    assert code == 0 and rep["verdict"] == "Quantum" and rep["d1"]["kind"] == "Quantum"
    code, rep, _ = run(capsys, "classify", fixture_file("mixed_pair", theta=0.5235987755982988, lam=2.0))
    assert rep["not_classical"]["reason"] == "WienerGramMismatch" and rep["verdict"] == "Mixed"
    code, rep, _ = run(capsys, "classify", fixture_file("brownian_d1"))
    assert rep["verdict"] == "Classical" and len(rep["classical_form"]["brownian"]) == 1


def test_decompose(capsys, fixture_file):
    code, rep, _ = run(capsys, "decompose", fixture_file("mixed_pair"))
    dec = rep["decomposition"]
    assert code == 0 and dec["dim_classical"] == 1 and dec["dim_quantum"] == 1 and dec["tier"] == "Exact"
    assert dec["classical_part"]["poisson"][0]["rho"] == pytest.approx(2.0)
    code, rep, _ = run(capsys, "decompose", fixture_file("hidden_pair"), "--search-budget", 2000)
    dec = rep["decomposition"]
    assert dec["dim_classical"] == 1 and dec["tier"] == "Heuristic"
    joint = dec["certificate"]["joint"]
    assert joint["passed"] and max(joint["classical_residuals"].values()) <= 1e-8
    code, rep, _ = run(capsys, "decompose", fixture_file("spontaneous_emission"))
    assert rep["decomposition"]["dim_classical"] == 0 and rep["verdict"] == "Quantum"


def test_lindblad(capsys, fixture_file):
    code, rep, _ = run(capsys, "lindblad", fixture_file("amplitude_damping"), "--observable", "diag:1,0", "--time", 1)
    out = np.array(rep["lindblad"]["result"])
    out = out[..., 0] + 1j * out[..., 1]
    assert code == 0 and np.allclose(out, np.diag([1, 1 - np.exp(-1)]))
    code, _, err = run(capsys, "lindblad", fixture_file("amplitude_damping"), "--observable", "diag:1,0,0")
    assert code == 2 and "observable" in err


def test_detailed_balance(capsys, fixture_file):
    code, rep, _ = run(capsys, "detailed-balance", fixture_file("brownian_selfadjoint"))
    assert code == 0 and rep["detailed_balance"] is True
    code, rep, _ = run(capsys, "detailed-balance", fixture_file("poisson_d1"))
    assert code == 1 and rep["reason"] == "PoissonTerms"


def test_simulate(capsys, fixture_file):
    path = fixture_file("brownian_d1")
    argv = ("simulate", path, "--observable", "sigma_z", "--time", 0.5, "--dt", 1e-3, "--ntraj", 20000, "--seed", 3)
    code, rep, _ = run(capsys, *argv)
    sim = rep["simulation"]
    assert code == 0 and sim["pass"]
    est = np.array(sim["estimate"])
    assert abs(est[0, 0, 0] - np.exp(-1)) <= 3 * sim["stderr"] + 5e-3
    cli.main([str(a) for a in argv])
    first = capsys.readouterr().out
    cli.main([str(a) for a in argv])
    assert capsys.readouterr().out == first


def test_simulate_refuses_quantum(capsys, fixture_file):
    code, rep, err = run(capsys, "simulate", fixture_file("mixed_pair"), "--ntraj", 10)
    assert code == 1 and rep["refused"] and "decompose" in err


def test_reports_are_byte_identical(capsys, fixture_file):
    path = fixture_file("hidden_pair")
    cli.main(["decompose", str(path)])
    a = capsys.readouterr().out
    cli.main(["decompose", str(path)])
    b = capsys.readouterr().out
    assert a == b
    rep = json.loads(a)
    assert rep["version"] and rep["input_digest"].startswith("sha256:")
    keys = list(rep)
    assert keys == sorted(keys)


def test_examples_command(capsys, tmp_path):
    code = cli.main(["examples", "mixed_pair", "--theta", "pi/6", "--lambda", "2"])
    text = capsys.readouterr().out
    assert code == 0
    f = CoefficientFile.loads(text)
    th = np.pi / 6
    s, c = np.sin(th), np.cos(th)
    assert np.allclose(f.coefficients.L0[0], [[-2 * c, 2 * c + s], [2 * c, -2 * c]])
    assert np.allclose(f.coefficients.L0[1], [[-2 * s, 2 * s - c], [2 * s, -2 * s]])
    assert float(f.metadata["theta"]) == th and float(f.metadata["lam"]) == 2.0
    code = cli.main(["examples", "spontaneous_emission", "-o", str(tmp_path / "se.json")])
    assert code == 0
    assert np.array_equal(CoefficientFile.read(tmp_path / "se.json").coefficients.L0[0], LOWERING)
    code, _, err = run(capsys, "examples", "nonsense")
    assert code == 2 and "spontaneous_emission" in err


def test_tolerance_env_override(capsys, fixture_file, monkeypatch):
    path = fixture_file("spontaneous_emission")
    monkeypatch.setenv("QLENV_TOL", "1e-6")
    code, rep, _ = run(capsys, "classify", path)
    assert rep["tolerance"] == 1e-6
    code, rep, _ = run(capsys, "classify", path, "--tol", "1e-7")
    assert rep["tolerance"] == 1e-7
    monkeypatch.setenv("QLENV_TOL", "-1")
    code, _, err = run(capsys, "classify", path)
    assert code == 2


def test_usage_errors(capsys):
    assert cli.main([]) == 2
    assert cli.main(["classify"]) == 2
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    path = tmp_path / "p.json"
    CoefficientFile(mixed_pair()).write(path)
    proc = subprocess.run([sys.executable, "-m", "qlenv.cli", "validate", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["valid"]

import csv
import json

import numpy as np
import pytest

from canontime import cli, lyapunov, spectra
from canontime.matrix_io import read_matrix, write_matrix
from canontime.spectra import SpectrumSpec


@pytest.fixture()
def files(tmp_path):
    sp = SpectrumSpec.grid(10.0, 129)
    st = spectra.band_limited_state(sp, [[1.0, 0.5j, -0.2]])
    good = tmp_path / "state.json"
    good.write_text(json.dumps(spectra.state_to_dict(st)))
    doc = spectra.state_to_dict(st)
    doc["amplitudes"] = [[2 * re, 2 * im] for re, im in doc["amplitudes"]]
    bad = tmp_path / "unnormalized.json"
    bad.write_text(json.dumps(doc))
    disc = tmp_path / "levels.json"
    disc.write_text(json.dumps({"kind": "discrete", "energies": [0.0, 1.0, 2 ** 0.5]}))
    dstate = tmp_path / "dstate.json"
    dstate.write_text(json.dumps({"kind": "discrete", "energies": [0.0, 1.0, 2 ** 0.5],
                                  "amplitudes": [[0.6, 0.0], [0.0, 0.8], [0.0, 0.0]]}))
    box = tmp_path / "box.json"
    box.write_text(json.dumps({"kind": "continuous", "energies": np.linspace(0, 2, 32).tolist()}))
    return {"good": good, "bad": bad, "disc": disc, "dstate": dstate, "box": box, "dir": tmp_path}


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_state_validate(files, capsys):
    assert cli.main(["state", "validate", str(files["good"])]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["normalized"] and report["hbar"] == 1.0
    assert cli.main(["state", "validate", str(files["bad"])]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2


def test_usage_errors_exit_2(files, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["timedist", str(files["good"])])
    assert info.value.code == 2
    assert cli.main(["lyapunov", str(files["good"]), "--times", "1:0:0.1", "--out", "x.csv"]) == 2
    assert cli.main(["state", "validate", str(files["dir"] / "missing.json")]) == 2


def test_timedist_csv_and_determinism(files):
    out1, out2 = files["dir"] / "a.csv", files["dir"] / "b.csv"
    args = ["timedist", str(files["good"]), "--tmin", "-30", "--tmax", "30", "--nodes", "1201"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = read_rows(out1)
    assert rows[0] == ["t", "p_T", "cumulative"]
    assert len(rows) == 1202
    assert float(rows[-1][2]) == pytest.approx(1.0, abs=1e-6)


def test_coverage_failure_exits_3(files, capsys):
    args = ["timedist", str(files["good"]), "--tmin", "-1", "--tmax", "1", "--nodes", "41",
            "--out", str(files["dir"] / "c.csv")]
    assert cli.main(args) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "CoverageError"


def test_lyapunov_and_uncertainty(files, capsys):
    out = files["dir"] / "ly.csv"
    assert cli.main(["lyapunov", str(files["good"]), "--times=-5:5:0.5", "--out", str(out),
                     "--tmax", "30", "--nodes", "1201"]) == 0
    rows = read_rows(out)
    mf = np.array([float(r[1]) for r in rows[1:]])
    assert len(mf) == 21 and np.all(np.diff(mf) < 0)
    assert cli.main(["uncertainty", str(files["good"])]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["product"] >= rep["bound"] * (1 - 1e-3)


def test_pom_command(files, capsys):
    assert cli.main(["pom", str(files["disc"]), "--tau", "5", "--state", str(files["dstate"])]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["completeness_residual"] <= 1e-8
    assert doc["total_probability"] == pytest.approx(1.0, abs=1e-10)
    assert cli.main(["pom", str(files["disc"]), "--tau", "5", "--nodes", "16",
                     "--completeness-tol", "1e-14"]) == 3


def test_oracle_commands(files, capsys):
    out = files["dir"] / "o.csv"
    assert cli.main(["oracle", "--out", str(out), "--times=-1:1:0.5"]) == 0
    rows = read_rows(out)
    assert float(rows[3][2]) == pytest.approx(0.5)
    assert cli.main(["oracle-compare"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["pass"] and rep["max_mf_abs_error"] < 1e-3


def test_mf_matrix_binary(files):
    out = files["dir"] / "mf.bin"
    assert cli.main(["mf-matrix", str(files["box"]), "--out", str(out)]) == 0
    m = read_matrix(out)
    ref = lyapunov.mf_matrix(spectra.load_spectrum(files["box"])).entries
    assert np.array_equal(m, ref)
    assert out.read_bytes()[:8] == b"CTMATRIX"
    assert cli.main(["mf-matrix", str(files["disc"]), "--out", str(out)]) == 2


def test_matrix_io_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    write_matrix(tmp_path / "m.bin", a)
    assert np.array_equal(read_matrix(tmp_path / "m.bin"), a)
    (tmp_path / "t.bin").write_bytes(b"CTMAT")
    with pytest.raises(Exception):
        read_matrix(tmp_path / "t.bin")


def test_parse_times():
    np.testing.assert_allclose(cli.parse_times("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(cli.parse_times("2.5"), [2.5])

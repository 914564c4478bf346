import json
import subprocess
import sys

import pytest

from p1tr.cli import EXIT_ERROR, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, dispatch, parse_complex, to_json


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_complex_literals():
    assert parse_complex("-9.9313,1.17017") == complex(-9.9313, 1.17017)
    assert parse_complex("0.5") == 0.5
    assert parse_complex("-1e-3,-2") == complex(-1e-3, -2)


def test_json_number_format():
    assert to_json(0.1) == "0.10000000000000001"
    assert to_json(1j) == "[0.0, 1.0]"
    assert to_json({"a": [1, None, True]}) == '{\n  "a": [\n    1,\n    null,\n    true\n  ]\n}'


def test_stokes_multipliers(capsys):
    code, out, _ = run(capsys, "stokes-multipliers", "--nu", "0.5,0", "--rho", "0.3,0", "--hbar", "1", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["schema"] == "p1tr/1"
    assert len(doc["result"]["s"]) == 5
    assert doc["result"]["cyclic_residual"] < 1e-12
    assert "tolerances" in doc["meta"]


def test_stokes_multipliers_csv(capsys):
    code, out, _ = run(capsys, "stokes-multipliers", "--nu", "0.5", "--rho", "0.3", "--hbar", "1", "--format", "csv")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "ell,re,im" and len(out.splitlines()) == 6


def test_curve(capsys):
    code, out, _ = run(capsys, "curve", "--t", "-50,0", "--nu", "0.5,0")
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    for key in ("u", "roots", "omega_A", "omega_B", "eta_A", "eta_B", "tau"):
        assert key in res
    assert set(res["residuals"]) == {"bilinear", "a_period"}


def test_stokes_graph_svg(tmp_path, capsys):
    paths = [tmp_path / "a.svg", tmp_path / "b.svg"]
    for p in paths:
        code, _, _ = run(capsys, "stokes-graph", "--t", "-9.9313,1.17017", "--nu", "0.5,0", "--kind", "anti",
                         "--format", "svg", "--out", str(p))
        assert code == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert "#2ca02c" in paths[0].read_text()


def test_tau_and_validation_exit(capsys):
    args = ["tau", "--t", "-5,0.3", "--nu", "0.3", "--rho", "0.3,0.05", "--hbar", "0.2", "--order", "0"]
    code, out, _ = run(capsys, *args)
    assert code == EXIT_OK
    assert json.loads(out)["result"]["residuals"]["order_0"]["painleve"] < 1e-7
    code, _, _ = run(capsys, *args, "--tol", "1e-300")
    assert code == EXIT_VALIDATION


def test_usage_and_domain_errors(capsys):
    assert run(capsys, "curve", "--t", "abc", "--nu", "1")[0] == EXIT_USAGE
    assert run(capsys, "nonsense")[0] == EXIT_USAGE
    assert run(capsys, "curve", "--t", "-5", "--nu", "0.3", "--format", "svg")[0] == EXIT_USAGE
    code, _, err = run(capsys, "curve", "--t", "0,0", "--nu", "0.5")
    assert code == EXIT_ERROR and err.startswith("error:")


def test_correlator_and_free_energy(capsys):
    code, out, _ = run(capsys, "correlator", "--t", "-5,0.3", "--nu", "0.3", "--g", "0", "--n", "2",
                       "--z", "0.3,0.1", "--z", "0.2,-0.1")
    assert code == EXIT_OK and "contour" in json.loads(out)["meta"]
    assert run(capsys, "correlator", "--t", "-5,0.3", "--nu", "0.3", "--g", "0", "--n", "2", "--z", "0.3")[0] == EXIT_USAGE
    code, out, _ = run(capsys, "free-energy", "--t", "-5,0.3", "--nu", "0.3", "--genus", "1")
    assert code == EXIT_OK and set(json.loads(out)["result"]) == {"F0", "F1"}


def test_wkb_check(capsys):
    code, out, _ = run(capsys, "wkb-check", "--t", "-5,0.3", "--nu", "0.3", "--x", "6,2")
    assert code == EXIT_OK
    assert json.loads(out)["result"]["points"][0]["riccati_m1"] < 1e-5


def test_verify_threads_do_not_change_output(capsys, monkeypatch):
    monkeypatch.setenv("P1TR_THREADS", "1")
    code1, out1, _ = run(capsys, "verify", "--only", "11", "--only", "12")
    monkeypatch.setenv("P1TR_THREADS", "2")
    code2, out2, _ = run(capsys, "verify", "--only", "11", "--only", "12")
    assert code1 == code2 == EXIT_OK
    assert out1 == out2 and out1.count("[PASS]") == 2


@pytest.mark.parametrize("argv", [["--version"]])
def test_module_entry_point(argv):
    proc = subprocess.run([sys.executable, "-m", "p1tr", *argv], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()

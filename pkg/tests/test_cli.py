import hashlib
import json
import shutil
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from mottlab.cli import EXIT_CODES, format_value, main, read_csv
from mottlab.response import sigma_two_well
from mottlab.model import RegimeParams

KUBO = ["direct-kubo", "--L", "100", "--realizations", "6", "--nu-list", "1e-3,3e-3"]


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def test_sigma_values_round_trip(tmp_path):
    code, out = run(tmp_path, "sigma", "--nu-list", "1e-4,1e-3")
    assert code == 0
    header, rows = read_csv(out)
    col = header.index("sigma_integral")
    ref = sigma_two_well(1e-4, RegimeParams(1, -1.0, 1e-4)).sigma_integral
    assert rows[0][col] == ref


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_value_is_exact(v):
    assert float(format_value(v)) == v


def test_manifest_digests(tmp_path):
    code, out = run(tmp_path, "maryland", "--window", "200", "--nu-list", "0.1,0.03")
    assert code == 0
    man = json.loads((tmp_path / "out.manifest.json").read_text())
    assert set(man["outputs"]) == {str(out), str(tmp_path / "out.spectrum.csv")}
    for path, digest in man["outputs"].items():
        assert hashlib.sha256(open(path, "rb").read()).hexdigest() == digest
    for key in ("command", "parameters", "seed", "version", "python", "numpy", "started", "finished"):
        assert key in man


def test_monte_carlo_output_is_reproducible(tmp_path):
    c1, a = run(tmp_path, *KUBO, "--seed", "5", name="a.csv")
    c2, b = run(tmp_path, *KUBO, "--seed", "5", "--threads", "3", name="b.csv")
    c3, c = run(tmp_path, *KUBO, "--seed", "6", name="c.csv")
    assert c1 == c2 == c3 == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MOTTLAB_THREADS", "2")
    code, out = run(tmp_path, *KUBO, "--seed", "5")
    assert code == 0
    man = json.loads((tmp_path / "out.manifest.json").read_text())
    assert man["parameters"]["threads"] == 2


@pytest.mark.parametrize("argv, code", [
    (["sigma", "--nu", "9"], EXIT_CODES["OutOfRegimeError"]),
    (["sigma", "--EF", "1"], EXIT_CODES["InvalidParameterError"]),
    (["dos", "--E-list", "0.5"], EXIT_CODES["DomainError"]),
    (["direct-kubo", "--h", "0.5"], EXIT_CODES["ConfigurationError"]),
    (["direct-kubo", "--eta-ratio", "0.5", "--realizations", "1"], EXIT_CODES["BroadeningError"]),
    (["direct-kubo", "--realizations", "2", "--nu-list", "1e-3,2e-3,3e-3,4e-3", "--fit"],
     EXIT_CODES["IllConditionedFit"]),
    (["sigma", "--bogus"], EXIT_CODES["usage"]),
    (["nosuch"], EXIT_CODES["usage"]),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    err = capsys.readouterr().err
    if code not in (EXIT_CODES["usage"],):
        assert json.loads(err.strip().splitlines()[-1])["exit_code"] == code


def test_validate_exit_status(tmp_path):
    ok, _ = run(tmp_path, "validate", "--nu-list", "1e-4", name="ok.csv")
    bad, out = run(tmp_path, "validate", "--nu-list", "0.5", name="bad.csv")
    assert ok == 0
    assert bad == EXIT_CODES["regime_check_failed"]
    header, rows = read_csv(out)
    assert any(r[header.index("passed")] == 0.0 for r in rows)


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\nseed = 5\n[direct-kubo]\nL = 100\nrealizations = 6\nnu_list = 1e-3,3e-3\n")
    code, a = run(tmp_path, "direct-kubo", "--config", str(cfg), name="a.csv")
    code2, b = run(tmp_path, *KUBO, "--seed", "5", name="b.csv")
    assert code == code2 == 0
    assert a.read_bytes() == b.read_bytes()


def test_command_line_overrides_config(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sigma]\nnu_list = 1e-3\n")
    code, out = run(tmp_path, "sigma", "--config", str(cfg), "--nu-list", "1e-4")
    assert code == 0
    assert read_csv(out)[1][0][0] == 1e-4


@pytest.mark.parametrize("text", ["[sigma]\nbogus = 1\n", "[other]\nx = 1\n", "[sigma]\nd = 7\n",
                                  "[sigma]\nrho = abc\n"])
def test_config_schema_errors(tmp_path, text, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert main(["sigma", "--config", str(cfg)]) == EXIT_CODES["usage"]
    assert json.loads(capsys.readouterr().err.strip())["exit_code"] == EXIT_CODES["usage"]


def test_stdout_mode(capsys):
    assert main(["twowell", "--y-list", "6"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2


@pytest.mark.skipif(shutil.which("mottlab") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["mottlab", "delta1d", "--y-list", "6"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.count("\n") == 2
    res = subprocess.run([sys.executable, "-m", "mottlab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "mottlab" in res.stdout


def test_sigma_log_sweep(tmp_path):
    code, out = run(tmp_path, "sigma", "--nu-min", "1e-8", "--nu-max", "1e-4", "--points", "5")
    assert code == 0
    nus = [r[0] for r in read_csv(out)[1]]
    assert nus[0] == 1e-8 and nus[-1] == pytest.approx(1e-4) and len(nus) == 5


def test_sigma_two_dimensional_example(tmp_path):
    code, out = run(tmp_path, "sigma", "--d", "2", "--nu", "1e-6")
    header, rows = read_csv(out)
    assert code == 0 and 1.0 <= rows[0][header.index("ratio")] <= 1.15

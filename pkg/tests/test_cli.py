import subprocess
from importlib import resources
import sys

import numpy as np
import pytest

from nlcoupler import cli
from nlcoupler.errors import ConfigError

SMALL = """
[params]
lambda1 = 0.25
lambda2 = 0.25
lambda3 = 1.0
lambda4 = 0.25

[state]
kind = "coherent"
alpha1 = [0.5, 0.1]
alpha2 = 0.3

[time]
t_min = 0.0
t_max = 1.0
n_steps = 4

[observables]
list = ["squeezing", "mean", "variance", "g2"]
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_scan_output_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    code, first, _ = run(["scan", "--config", cfg], capsys)
    assert code == 0
    _, second, _ = run(["scan", "--config", cfg], capsys)
    assert first == second
    lines = first.splitlines()
    assert lines[0] == "t,S1,Q1,S2,Q2,n1_mean,n2_mean,n1_var,n2_var,g2_1,g2_2"
    assert len(lines) == 6
    assert lines[1].split(",")[0] == "0"


def test_scan_matches_library(tmp_path, capsys):
    from nlcoupler.coupler_core import evolution_coefficients
    from nlcoupler.photon_stats import squeezing
    cfg = cli.load_config(write(tmp_path, SMALL))
    code, out, _ = run(["scan", "--config", write(tmp_path, SMALL)], capsys)
    last = [float(v) for v in out.splitlines()[-1].split(",")]
    q = squeezing(evolution_coefficients(cfg.params, 1.0), cfg.state)
    assert last[1:5] == [q.s1, q.q1, q.s2, q.q2]


def test_scan_written_to_file(tmp_path, capsys):
    out = tmp_path / "out.txt"
    code, stdout, _ = run(["scan", "--config", write(tmp_path, SMALL), "--format", "matrix",
                           "--output", str(out)], capsys)
    assert code == 0 and stdout == ""
    assert out.read_text().startswith("# columns: t S1")


def test_config_errors_exit_1(tmp_path, capsys):
    missing = SMALL.replace("lambda3 = 1.0\n", "")
    code, _, err = run(["scan", "--config", write(tmp_path, missing)], capsys)
    assert code == 1 and "lambda3" in err
    code, _, err = run(["scan", "--config", write(tmp_path, "[params\nlambda1 = ", "bad.toml")], capsys)
    assert code == 1
    code, _, _ = run(["scan", "--config", str(tmp_path / "absent.toml")], capsys)
    assert code == 1
    code, _, _ = run(["scan", "--config", write(tmp_path, SMALL + "\n[extra]\nx = 1\n", "x.toml")], capsys)
    assert code == 1
    code, _, _ = run(["scan", "--config", write(tmp_path, SMALL.replace('"g2"', '"bogus"'), "y.toml")], capsys)
    assert code == 1
    bad_type = SMALL.replace("lambda4 = 0.25", 'lambda4 = "big"')
    code, _, _ = run(["scan", "--config", write(tmp_path, bad_type, "z.toml")], capsys)
    assert code == 1


def test_override(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    loaded = cli.load_config(cfg, ["params.lambda4=2", 'state.kind="thermal"', "state.nbar1=0.5",
                                   "state.nbar2=1"])
    assert loaded.params.lambda4 == 2.0
    assert type(loaded.state).__name__ == "Thermal"
    with pytest.raises(ConfigError):
        cli.load_config(cfg, ["no_equals_sign"])
    code, out, _ = run(["scan", "--config", cfg, "--override", "time.n_steps=2"], capsys)
    assert code == 0 and len(out.splitlines()) == 4


def test_grid_matrix_round_trip(tmp_path, capsys):
    text = SMALL.replace('list = ["squeezing", "mean", "variance", "g2"]', 'list = ["wigner"]') + """
[grid]
selection = 1
t = 0.5
re_min = -4.0
re_max = 4.0
im_min = -4.0
im_max = 4.0
n_re = 81
n_im = 81
"""
    out = tmp_path / "w.txt"
    code, _, _ = run(["grid", "--config", write(tmp_path, text), "--format", "matrix",
                      "--output", str(out)], capsys)
    assert code == 0
    meta, axes, values = cli.read_matrix(out)
    assert values.shape == (81, 81)
    cell = float(meta["cell_volume"])
    assert cell == pytest.approx(0.01, rel=1e-12)
    assert float(meta["normalization"]) == pytest.approx(values.sum() * cell, abs=1e-12)
    assert abs(values.sum() * cell - 1) < 1e-3
    assert meta["normalization_check"] == "pass"
    assert set(axes) == {"re", "im"}
    assert np.allclose(axes["re"], np.linspace(-4, 4, 81))


def test_grid_csv(tmp_path, capsys):
    text = SMALL.replace('list = ["squeezing", "mean", "variance", "g2"]', 'list = ["qfunc"]') + """
[grid]
t = 0.2
n = 5
"""
    code, out, _ = run(["grid", "--config", write(tmp_path, text), "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].endswith(",value") and len(lines) == 26


def test_p_function_refusal_exits_3(tmp_path, capsys):
    text = SMALL.replace('list = ["squeezing", "mean", "variance", "g2"]', 'list = ["pfunc"]') + """
[grid]
t = 1.0
n = 5
"""
    code, out, err = run(["grid", "--config", write(tmp_path, text)], capsys)
    assert code == 3 and out == "" and "PNotRepresentable" in err


VERIFY = SMALL + """
[verify]
samples = 20
transform_grid = 21
oracle_points = 5
oracle_times = [0.5]
"""


def test_verify_passes(tmp_path, capsys):
    code, out, _ = run(["verify", "--config", write(tmp_path, VERIFY)], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 4 and all(" PASS " in line for line in lines)


def test_verify_corrupt_fails(tmp_path, capsys):
    code, out, _ = run(["verify", "--config", write(tmp_path, VERIFY), "--corrupt"], capsys)
    assert code == 2
    assert "FAIL" in out


def test_verify_skip_and_strict(capsys):
    code, out, _ = run(["verify", "--config", "verify_amplifying"], capsys)
    assert code == 0 and "SKIP" in out
    code, _, _ = run(["verify", "--config", "verify_amplifying", "--strict"], capsys)
    assert code == 3


def test_coeffs(tmp_path, capsys):
    code, out, _ = run(["coeffs", "--config", write(tmp_path, SMALL)], capsys)
    assert code == 0
    lines = out.splitlines()
    assert any(line.startswith("# regime: ") for line in lines)
    header = next(line for line in lines if not line.startswith("#"))
    assert header.startswith("t,K1_re,K1_im") and header.endswith("symplectic_residual")
    first = lines[lines.index(header) + 1].split(",")
    assert float(first[1]) == 1.0 and max(float(v) for v in first[-1:]) < 1e-12


def test_list_configs(capsys):
    code, out, _ = run(["list-configs"], capsys)
    assert code == 0
    assert "fig7a" in out.split()


@pytest.mark.parametrize("name", cli.bundled_configs())
def test_bundled_configs_parse(name):
    path = cli.bundled_config_path(name)
    with resources.as_file(path) as p:
        cli.load_config(p)


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "nlcoupler.cli", "coeffs", "--override", "time.n_steps=1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "lambda_plus" in res.stdout

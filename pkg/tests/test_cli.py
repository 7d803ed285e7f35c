import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from grnhopf import DivergenceError, cli

D1 = 3.1171090272437e-4


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main(list(args) + ["--out", str(out)])
    return code, out


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_steady_small_D(tmp_path, capsys):
    code, out = run(["steady", "--D", "1e-6"], tmp_path)
    assert code == 0
    header, data = read_csv(out / "profile.csv")
    assert header == ["x", "m_star", "p_star"]
    x, m, p = data.T
    assert np.max(p) < 1e-3
    near = np.abs(x - 0.1) < 0.05
    assert np.trapezoid(np.where(near, m, 0), x) >= 0.99 * np.trapezoid(m, x)
    line = capsys.readouterr().out.strip().splitlines()[-1]
    fields = line.split(",")
    assert len(fields) == 3 and float(fields[0]) == 1e-6
    assert (out / "summary.csv").read_text().splitlines()[0] == "D,p_at_gene,residual"


def test_steady_large_D(tmp_path):
    code, out = run(["steady", "--D", "100", "--n-nodes", "501"], tmp_path)
    assert code == 0
    _, data = read_csv(out / "profile.csv")
    for col in (data[:, 1], data[:, 2]):
        assert np.ptp(col) < 0.01 * np.mean(col)


@pytest.mark.parametrize("args", [["steady", "--D", "0"], ["steady"],
                                  ["simulate", "--D", "3e-4", "--t-end", "-1"],
                                  ["steady", "--D", "1e-3", "--mu", "-1"],
                                  ["sweep", "--d-min", "1e-2", "--d-max", "1e-3"],
                                  ["sweep", "--count", "0"],
                                  ["roots"]])
def test_configuration_errors_exit_2(tmp_path, args):
    code, _ = run(args, tmp_path)
    assert code == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("mu = 0.05\nD = 1e-3\n")
    code, out = run(["steady", "--config", str(cfg), "--mu", "0.04"], tmp_path)
    assert code == 0
    from grnhopf import ModelParams, solve_p_at_gene
    expected = solve_p_at_gene(ModelParams(mu=0.04), 1e-3)
    _, data = read_csv(out / "summary.csv")
    assert data[0, 1] == expected
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown = 1\n")
    assert run(["steady", "--config", str(bad)], tmp_path)[0] == 2


def test_simulate_outputs_and_determinism(tmp_path, capsys):
    args = ["simulate", "--D", "1e-3", "--t-end", "200", "--n-nodes", "201", "--snapshot", "100"]
    code, a = run(args, tmp_path, "a")
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert list(summary) == ["D", "t_end", "n_nodes", "dt", "kind", "rel_amplitude", "period",
                             "decay_ratio"]
    assert (a / "trajectory.csv").read_text().startswith("t,M,P\n")
    assert (a / "snapshot_final.csv").read_text().startswith("x,m,p\n")
    assert (a / "snapshot_t100.csv").exists()
    run(args, tmp_path, "b")
    for name in ("trajectory.csv", "snapshot_final.csv", "summary.json"):
        assert (a / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_numbers_have_17_digits(tmp_path):
    run(["steady", "--D", "1e-3", "--n-nodes", "11"], tmp_path)
    line = (tmp_path / "out" / "profile.csv").read_text().splitlines()[2]
    x, m, p = line.split(",")
    assert x == format(0.1, ".17g")
    assert float(m) == float(format(float(m), ".17g"))


def test_divergence_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise DivergenceError("non-finite fields")
    monkeypatch.setattr(cli, "simulate", boom)
    assert run(["simulate", "--D", "1e-3", "--t-end", "10"], tmp_path)[0] == 3


def test_roots(tmp_path):
    code, out = run(["roots", "--D", "1e-3", "--D", "1e-4"], tmp_path)
    assert code == 0
    header, data = read_csv(out / "roots.csv")
    assert header == ["D", "re_lambda", "im_lambda", "residual", "re_Rprime", "im_Rprime"]
    first = data[data[:, 0] == 1e-3]
    assert np.count_nonzero(first[:, 1] > 0) == 1
    assert np.all(data[data[:, 0] == 1e-4][:, 1] < 0)


def test_sweep_single_point_at_critical(tmp_path):
    code, out = run(["sweep", "--d-min", repr(D1), "--d-max", repr(D1), "--count", "1"], tmp_path)
    assert code == 0
    _, data = read_csv(out / "sweep.csv")
    assert data.shape == (1, 3) and abs(data[0, 1]) < 1e-8


@pytest.mark.slow
def test_sweep_sign_pattern(tmp_path):
    code, out = run(["sweep", "--count", "40"], tmp_path)
    assert code == 0
    header, data = read_csv(out / "sweep.csv")
    assert header == ["D", "max_re_lambda", "n_unstable"]
    assert np.all(np.diff(data[:, 0]) > 0)
    signs = np.sign(data[:, 1])
    changes = np.nonzero(np.diff(signs))[0]
    assert len(changes) == 2 and signs[0] < 0
    lo, hi = data[changes[0], 0], data[changes[0] + 1, 0]
    assert lo < D1 < hi
    assert data[changes[1], 0] < 7.884712e-3 < data[changes[1] + 1, 0]
    assert set(data[signs > 0, 2]) == {1.0}


def test_hopf(tmp_path, capsys):
    code, out = run(["hopf"], tmp_path)
    assert code == 0
    report = json.loads((out / "hopf.json").read_text())
    assert [r["j"] for r in report] == [1, 2]
    assert all(r["classification"] == "supercritical" for r in report)
    assert report[0]["D_c"] == pytest.approx(3.117109e-4, rel=1e-6)
    header = (out / "amplitude_j1.csv").read_text().splitlines()[0]
    assert header == "T,re_A,im_A,abs_A"
    assert json.loads(capsys.readouterr().out) == report


def test_hopf_bracket_error(tmp_path):
    assert run(["hopf", "--bracket", "1e-6", "1e-5"], tmp_path)[0] == 4


@pytest.mark.slow
def test_simulate_regimes(tmp_path, capsys):
    code, _ = run(["simulate", "--D", "3e-4", "--t-end", "2e4"], tmp_path, "steady")
    assert code == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "steady"
    code, _ = run(["simulate", "--D", "7.5e-3", "--n-nodes", "501"], tmp_path, "osc")
    assert code == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "oscillatory"


@pytest.mark.slow
def test_hopf_verify_amplitude(tmp_path):
    code, out = run(["hopf", "--bracket", "1e-4", "1e-3", "--verify-amplitude"], tmp_path)
    assert code == 0
    chk = json.loads((out / "amplitude_check.json").read_text())
    assert 0.35 <= chk["exponent"] <= 0.65
    assert chk["below_kinds"] == ["steady"] * 3


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "grnhopf", "steady", "--D", "1e-3",
                          "--n-nodes", "11", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert float(res.stdout.split(",")[0]) == 1e-3
    res = subprocess.run([sys.executable, "-m", "grnhopf", "hopf", "--bracket", "1e-6", "1e-5",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 4 and "bracket" in res.stderr.lower()

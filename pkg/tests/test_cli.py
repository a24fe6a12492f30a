import csv
import math
from pathlib import Path

import numpy as np
import pytest

from latentqde.cli import LOSS_HEADER, SUMMARY_HEADER, main

PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", str(PRESET_DIR / "linear_damped.toml"), "--seed", "7", "--epochs", "2000",
                 "--out", str(out)])
    assert code == 0
    for name in ("loss_history.csv", "solution.csv", "summary.csv", "plot.svg"):
        assert (out / name).exists()
    hist = _read(out / "loss_history.csv")
    assert hist[0] == LOSS_HEADER
    sol = _read(out / "solution.csv")
    assert sol[0] == ["x", "f_model", "f_truth", "df_model", "df_truth", "abs_error"]
    assert len(sol) == 102
    summ = _read(out / "summary.csv")
    assert summ[0] == SUMMARY_HEADER and summ[1][4] == "7"
    assert int(summ[1][3]) == len(hist) - 2
    # floats carry at least 12 significant digits
    assert len(sol[5][1].replace("-", "").replace(".", "").lstrip("0").split("e")[0]) >= 12
    assert (out / "plot.svg").read_text().startswith("<svg")


def test_run_is_deterministic(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert main(["run", "preset:nonlinear_riccati", "--epochs", "200", "--out", str(d)]) == 0
    for name in ("loss_history.csv", "solution.csv"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
    a, b = _read(dirs[0] / "summary.csv"), _read(dirs[1] / "summary.csv")
    assert a[1][:-1] == b[1][:-1]


def test_invalid_qubit_count_exits_2(tmp_path, capsys):
    text = (PRESET_DIR / "nonlinear_riccati.toml").read_text()
    lines = text.splitlines()
    i = next(k for k, l in enumerate(lines) if l.startswith("qubits"))
    # replace the qubit list (inline or multi-line) with [0]
    j = i if lines[i].rstrip().endswith("]") else next(k for k in range(i, len(lines)) if lines[k].strip() == "]")
    bad = lines[:i] + ["qubits = [0]"] + lines[j + 1:]
    cfg = tmp_path / "bad.toml"
    cfg.write_text("\n".join(bad) + "\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "qubits" in capsys.readouterr().err


def test_lse_mode_on_nonlinear_exits_2(tmp_path, capsys):
    code = main(["run", str(PRESET_DIR / "nonlinear_riccati.toml"), "--mode", "lse",
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "nonlinear problem unsupported in lse mode" in capsys.readouterr().err


def test_lse_mode_run(tmp_path):
    out = tmp_path / "lse"
    assert main(["run", "preset:multidim_2d", "--mode", "lse", "--out", str(out)]) == 0
    sol = _read(out / "solution.csv")
    assert sol[0][:2] == ["x", "y"] and len(sol) == 1 + 101 * 101
    assert float(_read(out / "summary.csv")[1][0]) < 1e-10


def test_numerical_failure_exits_3(tmp_path, capsys):
    text = (PRESET_DIR / "nonlinear_riccati.toml").read_text().replace("init_scale = 1.0",
                                                                       "init_scale = 1e200")
    cfg = tmp_path / "huge.toml"
    cfg.write_text(text)
    assert main(["run", str(cfg), "--epochs", "5", "--out", str(tmp_path / "o")]) == 3
    assert "numerical" in capsys.readouterr().err


def test_unknown_preset_and_bad_overlap(capsys):
    assert main(["preset", "nope"]) == 2
    assert "preset" in capsys.readouterr().err
    assert main(["run", "preset:linear_damped", "--overlap", "sometimes"]) == 2


def test_preset_emit_matches_shipped_file(capsys):
    for name in ("linear_damped", "multidim_2d"):
        assert main(["preset", name, "--emit"]) == 0
        assert capsys.readouterr().out == (PRESET_DIR / f"{name}.toml").read_text()
    assert main(["preset", "shifted_linear"]) == 0
    assert "shifted_linear" in capsys.readouterr().out


def test_report(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "preset:nonlinear_riccati", "--epochs", "50", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out.splitlines()
    assert text[0].split() == SUMMARY_HEADER + ["rmse_recomputed"]
    vals = text[1].split()
    assert float(vals[-1]) == pytest.approx(float(_read(out / "summary.csv")[1][0]), rel=1e-6)


def test_report_perfect_and_non_finite(tmp_path, capsys):
    d = tmp_path / "fake"
    d.mkdir()
    (d / "summary.csv").write_text(",".join(SUMMARY_HEADER) + "\n0.0,0.0,0.0,0,0,0.0\n")
    (d / "solution.csv").write_text("x,f_model,f_truth,df_model,df_truth,abs_error\n"
                                    "0.0,1.0,1.0,0.0,0.0,0.0\n0.5,2.0,2.0,0.0,0.0,0.0\n")
    assert main(["report", str(d)]) == 0
    assert float(capsys.readouterr().out.splitlines()[1].split()[-1]) == 0.0
    (d / "solution.csv").write_text("x,f_model,f_truth,df_model,df_truth,abs_error\n"
                                    "0.0,nan,1.0,0.0,0.0,nan\n")
    assert main(["report", str(d)]) == 0
    assert "non-finite" in capsys.readouterr().out
    assert main(["report", str(tmp_path / "missing")]) == 2

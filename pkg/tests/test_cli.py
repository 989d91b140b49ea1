import csv
import json
import subprocess
import sys

import pytest

from snrqi.cli import main
from snrqi.eigen import IterationRecord

GOLDEN_HEADER = ["solver", "eigen_iteration", "inner_iterations", "cumulative_krylov", "k",
                 "flux_change", "inner_converged", "elapsed_s"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_inf_medium(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--fixture", "INF_MEDIUM_1G", "--solver", "pi", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "k = 1.200000 +/-" in text
    assert (out / "summary.txt").read_text() == text
    result = json.loads((out / "result.json").read_text())
    assert result["exit_code"] == 0 and result["converged"]
    assert result["k"] == pytest.approx(1.2, rel=1e-6)
    rows = _rows(out / "iterations.csv")
    assert rows[0] == GOLDEN_HEADER == list(IterationRecord.FIELDS)
    assert len(rows) - 1 == result["eigen_iterations"]


def test_echoed_config_reproduces_run(tmp_path):
    first = tmp_path / "a"
    assert main(["run", "--fixture", "RANDOM_SMALL(7)", "--solver", "rqi", "--w", "1.2",
                 "--out", str(first)]) == 0
    second = tmp_path / "b"
    assert main(["run", str(first / "config.yaml"), "--out", str(second)]) == 0
    a = json.loads((first / "result.json").read_text())
    b = json.loads((second / "result.json").read_text())
    for key in ("k", "eigen_iterations", "krylov_iterations"):
        assert a[key] == b[key]
    assert "weight: 1.2" in (first / "config.yaml").read_text()


def test_sets_give_identical_k_column(tmp_path):
    cols = []
    for n in (1, 4):
        d = tmp_path / f"s{n}"
        assert main(["run", "--fixture", "UPSCATTER_CORE", "--solver", "pi", "--sets", str(n),
                     "--threads", str(n), "--out", str(d)]) == 0
        cols.append([r[4] for r in _rows(d / "iterations.csv")[1:]])
    assert cols[0] == cols[1]


def test_nonconverged_run_exits_2(tmp_path):
    code = main(["run", "--fixture", "RANDOM_SMALL(7)", "--max-eigen", "2", "--out", str(tmp_path)])
    assert code == 2
    assert json.loads((tmp_path / "result.json").read_text())["exit_code"] == 2


@pytest.mark.parametrize("argv, needle", [
    (["run", "--fixture", "NOPE"], "unknown fixture"),
    (["run"], "no problem given"),
    (["run", "/nonexistent/problem.yaml"], "problem.yaml"),
    (["run", "--fixture", "INF_MEDIUM_1G", "--w", "-1"], "weight"),
])
def test_errors_exit_1_with_one_line(argv, needle, capsys, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and needle in err


def test_bad_problem_file_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("mesh: {nx: 1, ny: 1, nz: 1, dx: 1, dy: 1, dz: 1}\nbogus: 3\n")
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "line 2: " in capsys.readouterr().err


def test_fixed_source_run(tmp_path, capsys):
    p = tmp_path / "fs.yaml"
    p.write_text("""\
mesh: {nx: 4, ny: 1, nz: 1, dx: 1.0, dy: 1.0, dz: 1.0}
boundaries: {xlo: vacuum, xhi: vacuum, ylo: reflecting, yhi: reflecting, zlo: reflecting, zhi: reflecting}
materials:
  - {id: m, sigma_t: [1.0, 1.5], scatter: [[0.3, 0.1], [0.5, 1.1]]}
assignment: {fill: m}
source: {per_group: [1.0, 0.0]}
solver: {mode: fixed_source, multigroup: {method: gs}}
""")
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 0
    assert "multigroup: gs" in capsys.readouterr().out


def test_audit(capsys):
    assert main(["audit", "--fixture", "INF_MEDIUM_2G"]) == 0
    out = capsys.readouterr().out
    assert "k (dense oracle): 1.142857142857" in out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "snrqi", "run", "--fixture", "INF_MEDIUM_2G",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert "k = 1.142857" in r.stdout

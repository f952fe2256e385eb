import json

import numpy as np
import pytest

from lukasiewicz.automata import DATA_DIR
from lukasiewicz.cli import main
from lukasiewicz.dataset import Dataset, read_dataset
from lukasiewicz.logic import eval_numerators, grid, parse_formula


def table_csv(path, text, names, n=4):
    pts = grid(len(names), n)
    f = parse_formula(text)
    y = np.broadcast_to(eval_numerators(f, {a: pts[:, i] for i, a in enumerate(names)}, n),
                        (len(pts),))
    Dataset.from_rows(names + ["out"], np.column_stack([pts, y]), n, inputs=names,
                      outputs=["out"]).write(path)
    return path


def test_gen_data_transitions(tmp_path, capsys):
    out = tmp_path / "t.csv"
    args = ["gen-data", "--automaton", "acyclic", "--logic", "5", "--length", "6",
            "--kind", "transitions", "--out", str(out)]
    assert main(args) == 0
    data = read_dataset(out)
    assert data.shape == (15625, 16) and data.n == 4
    first = out.read_bytes()
    assert main(args) == 0 and out.read_bytes() == first


def test_gen_data_to_stdout(capsys):
    assert main(["gen-data", "--automaton", "example", "--logic", "3", "--length", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 9 and lines[0].startswith("key,s1,s2,I1")


def test_eval_identical_table_is_one(tmp_path, capsys):
    path = table_csv(tmp_path / "tab.csv", "~x + y", ["x", "y"])
    assert main(["eval", "--formula", "~x + y", "--data", str(path), "--logic", "5"]) == 0
    assert capsys.readouterr().out.strip() == "lambda 1.000000"
    assert main(["eval", "--formula", "x * y", "--data", str(path), "--threshold", "0.99"]) == 1


def test_extract_prints_formula_and_report(tmp_path, capsys):
    path = table_csv(tmp_path / "conj.csv", "x * y", ["x", "y"])
    report = tmp_path / "r.json"
    assert main(["extract", "--data", str(path), "--seed", "42", "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert "lambda  1.000000" in out and str(report) in out
    assert json.loads(report.read_text())["lambda_final"] == 1.0


def test_extract_is_deterministic_across_jobs(tmp_path, capsys):
    path = table_csv(tmp_path / "imp.csv", "x -> y", ["x", "y"])
    outs = []
    for jobs in ("1", "2"):
        main(["extract", "--data", str(path), "--seed", "5", "--jobs", jobs,
              "--report", str(tmp_path / f"r{jobs}.json")])
        outs.append(capsys.readouterr().out.splitlines()[:2])
    assert outs[0] == outs[1]


def test_run_automaton_prints_trace(capsys):
    assert main(["run-automaton", "--automaton", "example",
                 "--word", str(DATA_DIR / "example_word.csv")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "output [1/2, 3/4, 1]" and len(lines) == 1 + 12 + 2


def test_approx(capsys):
    assert main(["approx", "--weights=-1,1,1", "--bias", "0", "--logic", "2", "--top", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "unrepresentable" in out[0] and out[1].startswith("0.882497")
    assert main(["approx", "--weights", "1,1", "--bias", "-1"]) == 0
    assert capsys.readouterr().out.splitlines()[1] == "1.000000  x1 * x2"


def test_compile_formula(tmp_path):
    out = tmp_path / "f.aut"
    assert main(["compile-formula", "--formula", "((a * b) + c) -> d", "--out", str(out)]) == 0
    assert out.read_text().startswith("# output E after 4 iterations")
    net = tmp_path / "f.json"
    assert main(["compile-formula", "--formula", "x * y", "--target", "network",
                 "--out", str(net)]) == 0
    assert json.loads(net.read_text())["inputs"] == ["x", "y"]


def test_check_spec_on_manifest(tmp_path, capsys):
    spec = tmp_path / "s.lspec"
    spec.write_text("O : { out };\nK : O;\nG : { K -> O;\n  G(x, y) : out = x * y;\n};\n")
    table_csv(tmp_path / "g.csv", "x * y", ["x", "y"])
    (tmp_path / "model.txt").write_text("G = g.csv\n")
    args = ["check-spec", "--spec", str(spec), "--model", str(tmp_path / "model.txt")]
    assert main(args) == 0
    assert "overall: pass" in capsys.readouterr().out
    spec.write_text("O : { out };\nK : O;\nG : { K -> O;\n  G(x, y) : out = x + y;\n};\n")
    assert main(args + ["--json", str(tmp_path / "r.json")]) == 1
    assert json.loads((tmp_path / "r.json").read_text())["passed"] is False


def test_repro_paper(capsys):
    assert main(["repro-paper"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1] == "5/5 passed" and all(line.startswith("PASS") for line in out[:-1])


@pytest.mark.parametrize("argv, code", [
    ([], 2), (["bogus"], 2), (["eval", "--formula", "x"], 2),
    (["eval", "--formula", "x +", "--data", "x.csv"], 2),
    (["eval", "--formula", "x", "--data", "/no/such/file.csv"], 3),
    (["run-automaton", "--automaton", "nowhere", "--word", "w.csv"], 3),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code

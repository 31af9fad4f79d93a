import csv
import json
import math

import pytest

from bestpath import __version__
from bestpath.cli import main, to_json, write_atomic


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestSelectCommand:
    def test_report_and_outputs(self, tmp_path, capsys):
        code, out, _ = _run(capsys, "select", "--input", "builtin:hitters", "--target", "Salary",
                            "--json", str(tmp_path / "r.json"), "--dot", str(tmp_path / "f.dot"))
        assert code == 0
        assert "best path step: 8" in out
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["best_step"] == 8
        assert (tmp_path / "f.dot").read_text().startswith("graph {")
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["version"] == __version__
        assert len(manifest["input_sha256"]) == 64
        assert "time" not in json.dumps(manifest)

    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ["select", "--input", "builtin:hitters", "--target", "Salary", "--seed", "3"]
        _run(capsys, *args, "--json", str(tmp_path / "a.json"))
        _run(capsys, *args, "--json", str(tmp_path / "b.json"))
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_no_temp_files_left(self, tmp_path, capsys):
        _run(capsys, "select", "--input", "builtin:hitters", "--target", "Salary",
             "--json", str(tmp_path / "r.json"))
        assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json", "r.json"]

    def test_missing_target_is_usage_error(self, capsys):
        code, _, err = _run(capsys, "select", "--input", "builtin:hitters")
        assert code == 1 and "--target" in err

    def test_discrete_target_is_data_error(self, tmp_path, capsys):
        code, _, err = _run(capsys, "select", "--input", "builtin:hitters", "--target", "League",
                            "--manifest", str(tmp_path / "m.json"))
        assert code == 2 and "'League'" in err

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        code, _, err = _run(capsys, "select", "--input", str(tmp_path / "no.csv"),
                            "--target", "y")
        assert code == 2

    def test_selection_failure_is_numeric_failure(self, tmp_path, capsys, monkeypatch):
        from bestpath import cli
        from bestpath.selector import SelectionError

        def boom(*a, **k):
            raise SelectionError("every path step failed for target 'Salary'")
        monkeypatch.setattr(cli, "select", boom)
        code, _, err = _run(capsys, "select", "--input", "builtin:hitters", "--target", "Salary",
                            "--manifest", str(tmp_path / "m.json"))
        assert code == 3
        assert "numerical failure" in err and "'Salary'" in err

    def test_bad_threads(self, capsys):
        code, _, _ = _run(capsys, "select", "--input", "builtin:hitters", "--target", "Salary",
                          "--threads", "0")
        assert code == 1


class TestOtherCommands:
    def test_mi_to_stdout(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = _run(capsys, "mi", "--input", "builtin:hitters", "--penalty", "aic")
        assert code == 0
        rows = list(csv.DictReader(out.splitlines()))
        assert len(rows) == 190
        assert list(rows[0]) == ["u", "v", "kind_pair", "i", "dof", "penalized"]
        assert (tmp_path / "manifest.json").exists()

    def test_mi_to_file(self, tmp_path, capsys):
        code, out, _ = _run(capsys, "mi", "--input", "builtin:hitters", "--out",
                            str(tmp_path / "mi.csv"))
        assert code == 0 and "190 pairs" in out
        assert (tmp_path / "mi.csv").read_text().count("\n") == 191

    def test_forest(self, tmp_path, capsys):
        code, out, _ = _run(capsys, "forest", "--input", "builtin:hitters", "--json",
                            str(tmp_path / "f.json"), "--dot", str(tmp_path / "f.dot"))
        assert code == 0 and "2 components" in out
        data = json.loads((tmp_path / "f.json").read_text())
        assert len(data["nodes"]) == 20 and len(data["edges"]) == 18
        assert (tmp_path / "f.dot").read_text().count(" -- ") == 18

    def test_compare(self, tmp_path, capsys):
        out_csv = tmp_path / "res.csv"
        code, out, _ = _run(capsys, "compare", "--input", "builtin:hitters", "--target", "Salary",
                            "--repeats", "3", "--seed", "7", "--out", str(out_csv))
        assert code == 0 and "splits completed: 3 / 3" in out
        rows = list(csv.reader(out_csv.read_text().splitlines()))
        assert rows[0] == ["split", "mse_bestpath", "mse_lasso", "winner"]
        assert len(rows) == 4

    def test_unknown_subcommand(self, capsys):
        assert _run(capsys, "fit", "--input", "x")[0] == 1


class TestJsonWriter:
    def test_float_formatting(self):
        text = to_json({"a": 0.1, "b": [1, math.nan, math.inf], "c": None, "d": True})
        assert '"a": 0.10000000000000001' in text
        assert json.loads(text) == {"a": 0.1, "b": [1, None, "inf"], "c": None, "d": True}

    def test_write_atomic_replaces(self, tmp_path):
        p = tmp_path / "x.txt"
        write_atomic(p, "one")
        write_atomic(p, "two")
        assert p.read_text() == "two"
        assert [q.name for q in tmp_path.iterdir()] == ["x.txt"]

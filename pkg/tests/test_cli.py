import json
import subprocess
import sys

import pytest

from condgraph import cli
from condgraph.errors import InvariantViolation


@pytest.fixture
def files(tmp_path):
    (tmp_path / "m.txt").write_text("# directed: false\n1 3\n2 4\n")
    (tmp_path / "web.txt").write_text("a c\nb c\nc d\nb d\na e\n")
    (tmp_path / "t.csv").write_text(",x,y,z\np,3,1,0\nq,1,2,2\nr,0,1,4\n")
    (tmp_path / "fx.txt").write_text("1 2 absent\n")
    (tmp_path / "cells.txt").write_text("p x 3\n")
    (tmp_path / "two.txt").write_text("1 2\n2 1\n")
    (tmp_path / "all.txt").write_text("1 2 present\n2 1 present\n")
    return tmp_path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCommands:
    def test_enumerate(self, capsys, files):
        code, out, _ = run(capsys, "enumerate", files / "m.txt", "--show")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "3" and len(lines) == 4

    def test_closure(self, capsys, files, tmp_path):
        code, out, _ = run(capsys, "closure", files / "m.txt", "--fixed", files / "fx.txt",
                           "--out", tmp_path / "closed.txt")
        assert code == 0
        assert out.splitlines()[1:] == ["3 4 absent"]
        assert "3 4 absent" in (tmp_path / "closed.txt").read_text()

    def test_sample_report(self, capsys, files, tmp_path):
        code, out, _ = run(capsys, "--seed", 4, "--threads", 2, "sample", files / "web.txt",
                           "--statistic", "compartmentalization", "--samples", 500, "--trace",
                           tmp_path / "tr.txt", "--out-graph", tmp_path / "final.txt")
        rep = json.loads(out)
        assert code == 0
        assert rep["config"]["seed"] == 4 and rep["config"]["method"] == "ugs"
        assert rep["chains"] == 2 and len(rep["report"]["chains"]) == 2
        lines = (tmp_path / "tr.txt").read_text().splitlines()
        assert lines[0].startswith("#") and len(lines) == 1001
        assert (tmp_path / "final.txt").exists()

    def test_test_reproducible(self, capsys, files):
        argv = ("--seed", 11, "test", files / "t.csv", "--statistic", "chi2", "--samples", 2000,
                "--fixed", files / "cells.txt")
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        a, b = json.loads(a), json.loads(b)
        assert a["config"]["method"] == "wgs"
        assert a["p_value"] == b["p_value"] and 0 <= a["p_value"] <= 1
        assert a["observed"] == b["observed"] > 0

    def test_config_file(self, capsys, files, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"method": "ds", "steps": 600, "thin": 3, "seed": 2,
                                   "statistic": "g2", "tail": "upper"}))
        code, out, _ = run(capsys, "test", files / "t.csv", "--statistic", "g2",
                           "--config", cfg, "--report", tmp_path / "r.json")
        assert code == 0 and out == ""
        rep = json.loads((tmp_path / "r.json").read_text())
        assert rep["config"]["samples"] == 200 and rep["config"]["method"] == "ds"

    def test_bench(self, capsys, tmp_path):
        code, out, _ = run(capsys, "--seed", 1, "bench", "--L", 4, "--samples", 200,
                           "--out", tmp_path / "b.csv")
        assert code == 0
        rows = (tmp_path / "b.csv").read_text().splitlines()
        assert rows[0] == "L,method,mixing_rate,ess,wall_seconds,ess_per_second"
        assert len(rows) == 3


class TestExitCodes:
    def test_parse_error(self, capsys, files):
        code, _, err = run(capsys, "sample", files / "missing.txt")
        assert code == 2 and "not found" in err

    def test_bad_fixed_file(self, capsys, files):
        (files / "bad.txt").write_text("1 3 absent\n")
        code, _, err = run(capsys, "closure", files / "m.txt", "--fixed", files / "bad.txt")
        assert code == 2 and "bad.txt:1" in err

    def test_config_error(self, capsys, files):
        code, _, _ = run(capsys, "sample", files / "m.txt", "--method", "wgs")
        assert code == 2

    def test_domain_error(self, capsys, files):
        code, _, _ = run(capsys, "test", files / "m.txt", "--statistic", "compartmentalization")
        assert code == 2

    def test_frozen(self, capsys, files):
        code, _, err = run(capsys, "sample", files / "two.txt", "--fixed", files / "all.txt")
        assert code == 3 and "single graph" in err

    def test_invariant_violation(self, capsys, files, monkeypatch):
        def boom(*a, **k):
            raise InvariantViolation("broken")

        monkeypatch.setattr(cli, "run_chains", boom)
        code, _, err = run(capsys, "sample", files / "m.txt")
        assert code == 4 and "broken" in err

    def test_module_entry(self):
        res = subprocess.run([sys.executable, "-m", "condgraph", "--help"], capture_output=True,
                             text=True)
        assert res.returncode == 0
        for name in ("closure", "sample", "test", "enumerate", "bench"):
            assert name in res.stdout

"""Command-line driver: verdicts, exit codes, report formats, dumps."""
import io
import json

import pytest

from conterm.cli import RunConfig, main, run
from conterm.solver import SolverConfig

COUNTDOWN = "while (x > 0) { x := x - 1; }"
STUTTER = "while (true) { x := x; }"
EVEN_GRAPH = """
graph {
  vertices v;
  root v;
  edge v v "(and (not (= x 0)) (= x' (- x 2)))";
}
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def do_run(path, **kw):
    out, err = io.StringIO(), io.StringIO()
    cfg = RunConfig(inputs=[path], solver=SolverConfig(seed=0), **kw)
    code = run(cfg, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


class TestVerdicts:
    def test_terminating(self, tmp_path):
        code, out, _ = do_run(write(tmp_path, "t.ct", COUNTDOWN))
        assert code == 0 and "TERMINATING" in out

    def test_conditional(self, tmp_path):
        code, out, _ = do_run(write(tmp_path, "c.ct", EVEN_GRAPH))
        assert code == 2 and "CONDITIONAL" in out

    def test_unknown(self, tmp_path):
        code, out, _ = do_run(write(tmp_path, "u.ct", STUTTER))
        assert code == 3 and "UNKNOWN" in out

    def test_missing_file(self):
        code, out, err = do_run("/nonexistent/input.ct")
        assert code == 1 and "error" in err

    def test_syntax_error_position(self, tmp_path):
        code, out, err = do_run(write(tmp_path, "bad.ct", "x := ;"))
        assert code == 1 and "1:6" in err

    def test_bad_operator(self, tmp_path):
        code, _, err = do_run(write(tmp_path, "t.ct", COUNTDOWN),
                              operator="frobnicate")
        assert code == 1 and "error" in err


class TestJson:
    def test_schema(self, tmp_path):
        code, out, _ = do_run(write(tmp_path, "c.ct", EVEN_GRAPH),
                              format="json")
        doc = json.loads(out)
        assert set(doc) == {"input", "verdict", "precondition", "loops",
                            "operator"}
        assert doc["verdict"] == "CONDITIONAL"
        assert doc["loops"] and set(doc["loops"][0]) == {"expression",
                                                         "precondition"}

    def test_deterministic_bytes(self, tmp_path):
        path = write(tmp_path, "c.ct", EVEN_GRAPH)
        runs = [do_run(path, format="json") for _ in range(2)]
        assert runs[0] == runs[1]


class TestDumps:
    def test_all_dump_sections(self, tmp_path):
        code, out, _ = do_run(write(tmp_path, "t.ct", COUNTDOWN),
                              dump_cfg=True, dump_domtree=True,
                              dump_pathexpr=True, dump_phase_graph=True)
        for section in ("-- cfg --", "-- domtree --", "-- pathexpr --",
                        "-- phasegraph --"):
            assert section in out
        assert "digraph" in out

    def test_json_dumps_key(self, tmp_path):
        code, out, _ = do_run(write(tmp_path, "t.ct", COUNTDOWN),
                              dump_cfg=True, format="json")
        doc = json.loads(out)
        assert "cfg" in doc["dumps"]


class TestMain:
    def test_argv_round_trip(self, tmp_path, capfd):
        path = write(tmp_path, "t.ct", COUNTDOWN)
        assert main([path, "--operator", "llrf", "--seed", "1"]) == 0
        assert "TERMINATING" in capfd.readouterr().out

    def test_usage_error(self, capsys):
        assert main([]) != 0

import json
import subprocess
import sys

import pytest

from bumpkit import cli
from bumpkit.errors import ParamError, ParseError, RealityViolation

from corpus_util import FAILURES

NOELL = """# |z|^4 + |z|^2|w|^2 + |w|^4
L = 2
delta = 0.05
(2,2,0,0) 1/1 0/1
(1,1,1,1) 1/1 0/1
(0,0,2,2) 1/1 0/1
"""


def test_parse_valid():
    s = cli.parse_spec(NOELL)
    assert s.k == 2 and s.params.L == 2
    assert len(s.R.terms) == 3


def test_lone_z_is_reality_violation():
    with pytest.raises(RealityViolation) as e:
        cli.parse_spec("(1,0,0,0) 1/1 0/1\n")
    assert "(1, 0, 0, 0)" in str(e.value) and "(0, 1, 0, 0)" in str(e.value)


def test_delta_too_large():
    with pytest.raises(ParamError):
        cli.parse_spec(NOELL.replace("delta = 0.05", "delta = 0.3"))


def test_parse_error_location():
    with pytest.raises(ParseError) as e:
        cli.parse_spec(NOELL + "L = two\n")
    assert e.value.line == 7 and e.value.col == 5
    with pytest.raises(ParseError) as e:
        cli.parse_spec("bogus = 1\n" + NOELL)
    assert e.value.line == 1
    with pytest.raises(ParseError) as e:
        cli.parse_spec(NOELL + "(1,1,0) 1/1 0/1\n")
    assert e.value.line == 7


def test_solver_override():
    s = cli.parse_spec(NOELL + "solver.grid = 81\n")
    assert s.params.solver.grid == 81


def test_graph_stage_only(tmp_path):
    man, res = cli.run_pipeline(cli.parse_spec(NOELL), {"graph"}, tmp_path)
    assert man.artifacts == ["graph.dot", "graph.json"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["graph.dot", "graph.json", "manifest.json"]


def test_continuum_fails_in_lines_stage():
    with pytest.raises(cli.StageError) as e:
        cli.run_pipeline(cli.load_spec("fail_continuum"), {"graph"})
    assert e.value.stage == "lines"


def test_exit_codes(tmp_path):
    assert cli.main(["graph", "fail_continuum", "--out-dir", str(tmp_path)]) == 1
    assert cli.main(["graph", "fail_pluriharmonic", "--out-dir", str(tmp_path)]) == 3
    assert cli.main(["graph", "no_such_spec", "--out-dir", str(tmp_path)]) == 3
    assert cli.main(["graph", "noell_k2", "--out-dir", str(tmp_path)]) == 0
    assert cli.main(["graph", "noell_k2", "--stages", "graph,nope", "--out-dir", str(tmp_path)]) == 3


def test_soft_flags_give_exit_two():
    from bumpkit.verify import CheckResult
    ok = CheckResult("a", "", 1, 0, 1, True)
    soft = CheckResult("b", "", 1, 0, 1, False, hard=False)
    hard = CheckResult("c", "", 1, 0, 1, False)
    assert cli.exit_code([ok]) == 0
    assert cli.exit_code([ok, soft]) == 2
    assert cli.exit_code([ok, soft, hard]) == 1


def test_corpus_contents():
    names = cli.corpus_names()
    for n in ("noell_k2", "ex2_sumsq", "ex3", "line_one", "line_multi", "cusp") + FAILURES:
        assert n in names


def test_synth_artifacts_reload(tmp_path):
    from bumpkit.synth import load_exprs
    man, _ = cli.run_pipeline(cli.load_spec("line_one"), cli.VERBS["synth"], tmp_path)
    assert set(man.artifacts) == {"graph.dot", "graph.json", "phi.expr", "p2.expr", "p3.expr", "weights.expr"}
    ex = load_exprs((tmp_path / "phi.expr").read_text())
    assert list(ex) == ["phi"]


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "bumpkit", "graph", "cusp", "--out-dir", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    obj = json.loads((tmp_path / "graph.json").read_text())
    assert len(obj["nodes"]) == 8

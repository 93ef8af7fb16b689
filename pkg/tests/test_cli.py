import json
import shutil
from pathlib import Path

import pytest

from silc.cli import main
from silc.config import AnalysisConfig, ConfigError, load_config
from silc.report import bundled_corpus, run_analyze, strip_timings

CLEAN = "void f(ptr p) { [p] = 1; }\n"
BUGGY = "// @vendor\nvoid set(ptr x, int v){ [x] = v; }\nvoid main() { x = NULL; set(x, 1); }\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "clean.mc").write_text(CLEAN)
    (tmp_path / "buggy.mc").write_text(BUGGY)
    (tmp_path / "broken.mc").write_text("void f( {\n")
    return tmp_path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_exit_codes(files, capsys):
    assert main(["analyze", str(files / "clean.mc")]) == 0
    assert main(["analyze", str(files / "buggy.mc")]) == 1
    assert main(["analyze", str(files / "broken.mc")]) == 2
    assert main(["analyze", str(files / "missing.mc")]) == 2
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_report_layout(files, capsys):
    main(["analyze", str(files / "buggy.mc"), str(files / "clean.mc")])
    rep = _json(capsys)
    assert set(rep) == {"tool", "command", "config", "files", "summary", "timings"}
    assert rep["summary"] == {"files": 2, "errors": 0, "manifest": 1, "integration": 1,
                              "sanitized": 0}
    (f,) = rep["files"][0]["findings"]
    assert f["bug_kind"] == "NPD" and f["classification"] == "Integration"
    assert f["blame"]["entity"] == "Client" and f["blame"]["function"] == "main"
    assert f["manifest"]["world"] == "Vendor" and f["manifest"]["function"] == "set"
    assert f["sanitizer"] is None and not f["sanitized"]
    assert rep["files"][1]["findings"] == []


def test_parse_error_reported_per_file(files, capsys):
    code = main(["analyze", str(files / "broken.mc"), str(files / "clean.mc")])
    out = capsys.readouterr()
    rep = json.loads(out.out)
    assert code == 2
    assert rep["files"][0]["error"].startswith("MiniCSyntaxError")
    assert rep["files"][1]["error"] is None
    assert "broken.mc" in out.err


def test_text_format(files, capsys):
    main(["analyze", "--format", "text", str(files / "buggy.mc")])
    out = capsys.readouterr().out
    assert "NPD [Integration] in main" in out
    assert "1 manifest, 1 integration, 0 sanitized" in out


def test_sanitize_writes_outputs(files, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["sanitize", str(files / "buggy.mc"), "--out-dir", str(out)])
    rep = _json(capsys)
    assert code == 0
    assert (out / "buggy.mc").exists() and (out / "buggy.mc.diff").exists()
    assert (out / "report.json").exists()
    (f,) = rep["files"][0]["findings"]
    assert f["sanitized"] and f["sanitizer"]["name"] == "sanitise_set_1"
    assert f["path_condition"] == "x == NULL"
    assert rep["files"][0]["residual"] == []
    assert "+void sanitise_set_1" in rep["files"][0]["diff"]


def test_config_file(files, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bugs": ["UAF"]}))
    assert main(["analyze", "--config", str(cfg), str(files / "buggy.mc")]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "blue"}))
    assert main(["analyze", "--config", str(bad), str(files / "buggy.mc")]) == 2
    capsys.readouterr()


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        AnalysisConfig(bugs=("Overflow",))
    with pytest.raises(ConfigError):
        AnalysisConfig(protocols={"NPD": "retry"})
    with pytest.raises(ConfigError):
        AnalysisConfig(unroll_bound=-1)
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    assert AnalysisConfig().error_return("void") is None
    assert AnalysisConfig().error_return("struct") == "NULL"


def test_corpus_command(capsys):
    assert main(["corpus", "--format", "text"]) == 0
    out = capsys.readouterr().out
    assert "scenarios ok" in out
    assert main(["corpus", "/no/such/dir"]) == 2
    capsys.readouterr()


def test_out_flag(files, tmp_path, capsys):
    target = tmp_path / "r.json"
    main(["analyze", str(files / "buggy.mc"), "--out", str(target)])
    assert capsys.readouterr().out == ""
    assert json.loads(target.read_text())["tool"] == "silc"


def test_strip_timings_removes_only_timing_keys():
    rep, _ = run_analyze([str(bundled_corpus() / "npd_swf" / "swf.mc")])
    d = strip_timings(rep.to_json())
    assert "timings" not in d and "files" in d
    assert strip_timings({"a": [{"ms": 1, "b": 2}]}) == {"a": [{"b": 2}]}


SAME_WORLD = "void f() { p = malloc(); free(p); free(p); }\n"


def test_sanitize_same_world_only_is_not_patched(tmp_path, capsys):
    src = tmp_path / "sw.mc"
    src.write_text(SAME_WORLD)
    code = main(["sanitize", str(src), "--out-dir", str(tmp_path / "o")])
    rep = _json(capsys)
    assert code == 1
    assert rep["files"][0]["findings"]
    assert all(f["classification"] != "Integration" for f in rep["files"][0]["findings"])
    assert all(f["sanitizer"] is None for f in rep["files"][0]["findings"])


def test_sanitize_is_idempotent(files, tmp_path, capsys):
    first = tmp_path / "first"
    assert main(["sanitize", str(files / "buggy.mc"), "--out-dir", str(first)]) == 0
    capsys.readouterr()
    assert main(["sanitize", str(first / "buggy.mc"), "--out-dir", str(tmp_path / "second")]) == 0
    rep = _json(capsys)
    assert rep["files"][0]["findings"] == [] and rep["files"][0]["residual"] == []


def test_empty_corpus(tmp_path, capsys):
    assert main(["corpus", str(tmp_path)]) == 0
    rep = _json(capsys)
    assert rep["scenarios"] == [] and rep["totals"]["scenarios"] == 0


def test_fixture_corpus_flags_unsanitizable_scenario_only(tmp_path, capsys):
    root = tmp_path / "corpus"
    shutil.copytree(Path(__file__).parent / "fixtures" / "typeb_unchecked_alloc",
                    root / "typeb_unchecked_alloc")
    shutil.copytree(bundled_corpus() / "npd_swf", root / "npd_swf")
    assert main(["corpus", str(root)]) == 0
    rows = {r["scenario"]: r for r in _json(capsys)["scenarios"]}
    assert not rows["typeb_unchecked_alloc"]["sanitizable"]
    assert rows["typeb_unchecked_alloc"]["sanitized"] == 0
    assert rows["npd_swf"]["sanitizable"] and rows["npd_swf"]["sanitized"] == 1
    assert all(r["ok"] for r in rows.values())


def test_corpus_mismatch_is_nonzero(tmp_path, capsys):
    d = tmp_path / "c" / "npd_swf"
    shutil.copytree(bundled_corpus() / "npd_swf", d)
    exp = json.loads((d / "expected.json").read_text())
    exp["findings"] = []
    (d / "expected.json").write_text(json.dumps(exp))
    assert main(["corpus", str(tmp_path / "c")]) == 1
    capsys.readouterr()


def test_loop_flags_override_config(files, capsys):
    src = files / "loop.mc"
    src.write_text("void f(ptr p) { while (p) { p = [p]; } }\n")
    assert main(["analyze", "--unroll-bound", "0", "--max-disjuncts", "8", str(src)]) == 0
    cfg = _json(capsys)["config"]
    assert cfg["unroll_bound"] == 0 and cfg["max_disjuncts"] == 8

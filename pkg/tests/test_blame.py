import json
from dataclasses import replace

import pytest

from conftest import FIXTURES, analyze
from laws import violations
from silc.blame import (
    INTEGRATION, SAME_WORLD, BugCatalog, MissingBlame, classify_all, culprit_call, related,
)
from silc.config import AnalysisConfig
from silc.executor import engine
from silc.frontend import parse
from silc.isl import MEMLEAK, NPD, UAF, Blame, BugApp, Entity, LVar
from silc.report import run_scenario

VENDOR_SET = "// @vendor\nvoid set(ptr x, int v){ [x] = v; }\n"


def test_client_nil_into_vendor_is_integration_plus():
    src = VENDOR_SET + "void main() { x = NULL; set(x, 1); }"
    _, _, (f,), _ = analyze(src)
    assert f.kind == NPD and f.status == INTEGRATION
    assert f.world.kind == "Vendor" and f.blamed.kind == "Client"
    assert f.blamed.function == "main" and f.blamed.line == 3
    assert f.culprit.caller == "main" and f.culprit.callee == "set"
    assert f.sanitizable


def test_client_only_bug_is_same_world():
    _, _, (f,), _ = analyze("void f() { p = NULL; [p] = 1; }")
    assert f.status == SAME_WORLD and f.culprit is None and not f.sanitizable


def test_vendor_orphaned_field_is_integration_minus():
    src = """struct rec { ptr a; ptr b; };
// @vendor
void rec_free(struct rec * r) { x = r->a; free(x); free(r); }
int use() {
  r = malloc();
  if (r == NULL) { return 1; }
  a = malloc();
  r->a = a;
  b = malloc();
  r->b = b;
  rec_free(r);
  return 0;
}
"""
    _, _, findings, _ = analyze(src)
    leaks = [f for f in findings if f.kind == MEMLEAK]
    assert len(leaks) == 1
    (f,) = leaks
    assert f.status == INTEGRATION and f.sign == "-"
    assert f.blamed.function == "rec_free"
    assert f.blamed.origin is not None and f.culprit == f.blamed.origin.call
    assert f.triple.err.edge == "b"


def test_type_b_fixture_is_flagged_but_not_sanitized():
    d = FIXTURES / "typeb_unchecked_alloc"
    res = run_scenario(d, AnalysisConfig(seed=0))
    assert res.match and res.integration == 1 and res.sanitized == 0
    assert not res.clean and res.ok
    _, _, (f,), _ = analyze((d / "cache.mc").read_text())
    assert f.blamed.kind == "Vendor" and f.world.kind == "Client"
    assert f.culprit is None


def test_type_b_does_not_disturb_the_bundled_corpus(corpus_dir):
    expected = json.loads((FIXTURES / "typeb_unchecked_alloc" / "expected.json").read_text())
    assert not expected["sanitizable"]
    assert not (corpus_dir / "typeb_unchecked_alloc").exists()


def test_missing_blame_is_listed_not_classified():
    _, run, findings, _ = analyze("void f() { p = NULL; [p] = 1; }")
    s = run.summaries["f"]
    (t,) = s.err_triples()
    t = replace(t, err=replace(t.err, blame=None))
    s2 = replace(s, triples=(t,))
    fs, problems = classify_all({"f": s2}, BugCatalog.from_config(AnalysisConfig()))
    assert fs == [] and len(problems) == 1
    assert isinstance(problems[0], MissingBlame)


def test_related_checks_bug_and_resource():
    _, run, _, _ = analyze("void f() { p = NULL; [p] = 1; }")
    (t,) = run.summaries["f"].err_triples()
    cat = BugCatalog.from_config(AnalysisConfig())
    b = t.err.blame
    assert related(b, t, cat)
    assert not related(replace(b, bug=BugApp(UAF, b.resource)), t, cat)
    assert not related(replace(b, resource=LVar("Elsewhere"), bug=BugApp(NPD, LVar("Elsewhere"))), t, cat)


def test_culprit_selection():
    client = Entity("Client", None, "f", "main", 1)
    b = Blame(LVar("X"), client, BugApp(NPD, LVar("X")))
    _, run, (f,), _ = analyze(VENDOR_SET + "void main() { x = NULL; set(x, 1); }")
    assert culprit_call(f.triple.err, b, "+") == f.triple.err.vendor_call
    assert culprit_call(f.triple.err, b, "-") is None


def test_catalog_requires_protocols():
    with pytest.raises(ValueError):
        BugCatalog((NPD,), sanitizations={})


def test_vendor_sticky_rule():
    src = """void touch(ptr p) { [p] = 1; }
// @vendor
void wrap(ptr p) { [p] = 2; touch(p); }
"""
    trace = []
    _, run, _, _ = analyze(src, trace=trace)
    (ok,) = run.summaries["wrap"].ok_triples()
    assert {b.entity.kind for b in ok.post.heap if isinstance(b, Blame)} == {"Vendor"}
    assert violations(trace) == []


def test_sticky_law_detects_a_missing_rule(monkeypatch):
    monkeypatch.setattr(engine, "_sticky", lambda s, vendor: s)
    src = """void touch(ptr p) { [p] = 1; }
// @vendor
void wrap(ptr p) { [p] = 2; touch(p); }
"""
    trace = []
    analyze(src, trace=trace)
    assert [name for name, _ in violations(trace)] == ["c"]


def test_dish_washing_on_ok_steps():
    trace = []
    analyze("void f(ptr p) {\n  [p] = 1;\n  x = [p];\n  free(p);\n}", trace=trace)
    shifted = [ev for ev in trace if ev.rule in ("store.ok", "load.ok", "free.ok")]
    assert len(shifted) == 3
    lines = [ev.world.line for ev in shifted]
    assert lines == [2, 3, 4]
    assert violations(trace) == []

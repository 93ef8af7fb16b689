"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal."""
import json
import os
import random
import subprocess
import sys
import time
from collections import Counter

import pytest

from conftest import analyze, corpus_files, scenario_config
from golden import SET_SRC, matches_golden, set_golden
from grid import run_grid
from laws import violations
from oracles import brute_satisfiable
from strategies import sample_conjunction
from silc.config import AnalysisConfig
from silc.executor import run_program
from silc.frontend import parse
from silc.isl import FLOW_SIGN, MEMLEAK, NPD
from silc.report import bundled_corpus, run_corpus, sanitize_text, strip_timings
from silc.solver import is_satisfiable


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return emit


def _scenario(name, filename):
    d = bundled_corpus() / name
    return (d / filename).read_text(), scenario_config(d)


def test_criterion_1_golden_set_summary(verdict):
    start = time.perf_counter()
    summary = run_program(parse(SET_SRC), AnalysisConfig(seed=0)).summaries["set"]
    secs = time.perf_counter() - start
    ok = matches_golden(summary.triples, set_golden()) and secs < 1.0
    verdict(1, ok, f"set -> {len(summary.triples)} triples (1 ok, 2 latent err), {secs:.3f}s")
    assert ok


def test_criterion_2_leak_scenario(verdict):
    text, cfg = _scenario("leak_client_list", "server.mc")
    start = time.perf_counter()
    _, _, findings, _ = analyze(text, cfg, "server.mc")
    leaks = [f for f in findings if f.kind == MEMLEAK]
    out = sanitize_text(text, "server.mc", cfg)
    secs = time.perf_counter() - start
    wrapper = out.patches[0]["wrapper"] if out.patches else ""
    rescued = ("= c->cpi_query;" in wrapper and "free(silc_t1);" in wrapper
               and wrapper.index("= c->cpi_query;") < wrapper.index("_client_list_free_node(c);")
               < wrapper.index("free(silc_t1);"))
    residual = [f for f in out.final.findings if f.kind == MEMLEAK]
    ok = (len(leaks) == 1 and leaks[0].is_integration
          and leaks[0].blamed.function == "_client_list_free_node"
          and leaks[0].blamed.kind == "Vendor"
          and rescued and not residual and secs < 5.0)
    blamed = leaks[0].blamed.function if leaks else None
    verdict(2, ok, f"{len(leaks)} MemLeak finding(s) blamed on {blamed}, "
                   f"cpi_query rescued={rescued}, residual={len(residual)}, {secs:.2f}s")
    assert ok


def test_criterion_3_npd_scenario(verdict):
    text, cfg = _scenario("npd_swf", "swf.mc")
    assert cfg.unroll_bound == 2
    start = time.perf_counter()
    _, _, findings, _ = analyze(text, cfg, "swf.mc")
    npd = [f for f in findings if f.kind == NPD]
    out = sanitize_text(text, "swf.mc", cfg)
    secs = time.perf_counter() - start
    f = npd[0] if npd else None
    inside = f is not None and f.world.kind == "Vendor" and f.triple.err.fault.startswith("memcpy")
    blamed = f is not None and (f.blamed.kind, f.blamed.function, f.blamed.line) == \
        ("Client", "swf_show_frame", 26)
    guard = out.patches[0]["condition"] if out.patches else None
    ok = (len(npd) == 1 and f.is_integration and inside and blamed
          and guard == "data == NULL" and not out.final.findings and secs < 5.0)
    verdict(3, ok, f"{len(npd)} NPD finding(s), faults in vendor memcpy={inside}, "
                   f"blamed swf_show_frame:26={blamed}, guard '{guard}', "
                   f"residual={len(out.final.findings)}, {secs:.2f}s")
    assert ok


def test_criterion_4_biabduction_grid(verdict):
    start = time.perf_counter()
    res = run_grid()
    secs = time.perf_counter() - start
    ok = res.violations == 0 and res.pairs > 10000
    verdict(4, ok, f"{res.pairs} pairs, {res.solved} solved, {len(res.unsound)} unsound, "
                   f"{len(res.incomplete)} incomplete, {secs:.1f}s")
    assert ok


def test_criterion_5_solver_vs_brute_force(verdict):
    rng = random.Random(int(os.environ.get("SILC_SEED", "0")))
    n, bad = 12000, []
    for _ in range(n):
        lits, universe = sample_conjunction(rng)
        if is_satisfiable(lits) != brute_satisfiable(lits, universe):
            bad.append(lits)
    ok = not bad
    verdict(5, ok, f"{n} sampled conjunctions, {len(bad)} disagreements")
    assert ok


def test_criterion_6_blame_laws(verdict):
    events, bad = 0, []
    for path in corpus_files():
        trace = []
        run_program(parse(path.read_text(), path.name), scenario_config(path.parent), trace)
        events += len(trace)
        bad += violations(trace)
    by_law = Counter(name for name, _ in bad)
    ok = not bad and events > 0
    verdict(6, ok, f"{events} rule/summary events over {len(corpus_files())} files, "
                   f"violations a={by_law['a']} b={by_law['b']} c={by_law['c']}")
    assert ok


def test_criterion_7_corpus(verdict):
    table, code = run_corpus(None, AnalysisConfig(seed=0))
    rows = table["scenarios"]
    integ = [r for r in rows if r["sanitizable"] and r["integration"] > 0]
    kinds, signs = set(), set()
    for d in sorted(p for p in bundled_corpus().iterdir() if p.is_dir()):
        spec = json.loads((d / "expected.json").read_text())
        if not spec.get("sanitizable", True):
            continue
        for f in spec.get("findings", []):
            if f["status"] == "Integration":
                kinds.add(f["kind"])
                signs.add(FLOW_SIGN[f["kind"]])
    t = table["totals"]
    secs = table["timings"]["total"] / 1000
    ok = (code == 0 and len(integ) >= 10 and t["sanitized"] == t["integration"]
          and all(r["clean"] for r in integ) and kinds == {"NPD", "MemLeak", "UAF"}
          and signs == {"+", "-"} and secs < 60)
    verdict(7, ok, f"{len(integ)} integration scenarios, {t['sanitized']}/{t['integration']} "
                   f"sanitized, {t['ok']}/{t['scenarios']} ok, kinds={sorted(kinds)}, {secs:.1f}s")
    assert ok


def test_criterion_8_determinism(verdict, tmp_path):
    paths = [str(p) for p in corpus_files()]
    env = dict(os.environ, SILC_SEED="17")
    outs = []
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "silc.cli", "analyze", *paths],
                              capture_output=True, text=True, env=env)
        assert proc.returncode in (0, 1), proc.stderr
        outs.append(json.dumps(strip_timings(json.loads(proc.stdout)), sort_keys=False))
    ok = outs[0] == outs[1]
    verdict(8, ok, f"two runs over {len(paths)} files with SILC_SEED=17 "
                   f"{'identical' if ok else 'differ'} modulo timings")
    assert ok

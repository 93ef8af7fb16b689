"""Summarise a one-line store and show how the summary composes at call sites.

    python3 demos/set_summary.py
"""
from silc.blame import BugCatalog, classify_all
from silc.config import AnalysisConfig
from silc.executor import run_program
from silc.frontend import parse

SET = "// @vendor\nvoid set(ptr x, int v) { [x] = v; }\n"
CALLERS = {
    "nil argument": "void main() { x = NULL; set(x, 1); }",
    "owned argument": "void main() { x = malloc(); if (x != NULL) { set(x, 1); free(x); } }",
}


def show(title, src):
    cfg = AnalysisConfig(seed=0)
    run = run_program(parse(src, "demo.mc"), cfg)
    print(f"== {title}")
    for s in run.summaries.values():
        for t in s.triples:
            tag = "ok" if not t.is_err else f"{t.err.kind} {'latent' if t.err.latent else 'MANIFEST'}"
            print(f"  {s.name:5} {tag:14} pre: {t.pre}")
    findings, _ = classify_all(run.summaries, BugCatalog.from_config(cfg))
    for f in findings:
        print(f"  -> {f.kind} {f.status}: faults in {f.world}, blamed on {f.blamed}")
    print()


if __name__ == "__main__":
    show("set alone", SET)
    for name, caller in CALLERS.items():
        show(f"set called with {name}", SET + caller)

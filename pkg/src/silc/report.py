"""End-to-end drivers (analyze, sanitize, corpus) and their JSON reports."""
from __future__ import annotations

import difflib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .blame import BugCatalog, IntegrationFinding, MissingBlame, classify_all
from .config import AnalysisConfig
from .executor.engine import Summary, run_program
from .frontend import MiniCSyntaxError, ResolveError, parse
from .frontend.callgraph import build_call_graph
from .sanitizer import (
    PatchConflict, UnscopedCondition, extract_path_condition, generate_sanitizer,
    group_by_culprit, rewrite_call_site,
)

EXIT_CLEAN, EXIT_BUGS, EXIT_USAGE = 0, 1, 2
MAX_PATCHES = 32


def _ms(seconds: float) -> float:
    return round(seconds * 1000.0, 3)


class Timer:
    def __init__(self):
        self.phases: Dict[str, float] = {}

    def add(self, phase: str, seconds: float) -> None:
        self.phases[phase] = self.phases.get(phase, 0.0) + seconds

    def as_ms(self) -> Dict[str, float]:
        return {k: _ms(v) for k, v in self.phases.items()}


def _entity_json(e) -> dict:
    d = {"entity": e.kind, "file": e.file, "function": e.function, "line": e.line}
    if e.origin is not None:
        c = e.origin.call
        d["via"] = {"caller": c.caller, "callee": c.callee, "line": c.line}
    return d


def _site_json(c) -> Optional[dict]:
    if c is None:
        return None
    return {"caller": c.caller, "callee": c.callee, "file": c.file, "line": c.line, "col": c.col}


def finding_key(f: IntegrationFinding) -> tuple:
    """Identity of a finding that survives line shifts caused by patching."""
    c = f.culprit
    return (f.kind, f.function, c.caller if c else None, c.callee if c else None,
            f.blamed.kind, f.blamed.function)


def finding_json(f: IntegrationFinding, file: str) -> dict:
    err = f.triple.err
    return {
        "bug_kind": f.kind,
        "status": "manifest",
        "integration": f.is_integration,
        "classification": f.status,
        "function": f.function,
        "manifest": {"world": err.world.kind, "file": err.world.file or file,
                     "function": err.world.function, "line": err.world.line},
        "site": _site_json(err.site),
        "blame": _entity_json(f.blamed),
        "culprit": _site_json(f.culprit),
        "flow": f.sign,
        "edge": err.edge,
        "path_condition": None,
        "sanitizer": None,
        "sanitized": False,
        "unsanitized_reason": None if not f.is_integration or f.culprit else "NoVendorCall",
        "diagnostics": [],
    }


def missing_json(m: MissingBlame, file: str) -> dict:
    err = m.triple.err
    return {
        "bug_kind": err.kind, "status": "manifest", "integration": False,
        "classification": "MissingBlame", "function": m.function,
        "manifest": {"world": err.world.kind, "file": err.world.file or file,
                     "function": err.world.function, "line": err.world.line},
        "site": _site_json(err.site), "blame": None, "culprit": None, "flow": None,
        "edge": err.edge, "path_condition": None, "sanitizer": None, "sanitized": False,
        "unsanitized_reason": "MissingBlame", "diagnostics": [str(m)],
    }


def latent_json(summaries: Dict[str, Summary], roots) -> List[dict]:
    out = []
    for name in roots:
        for t in summaries[name].err_triples(latent=True):
            e = t.err
            out.append({"function": name, "bug_kind": e.kind, "world": e.world.kind,
                        "fault_function": e.world.function, "line": e.world.line})
    return out


@dataclass
class FileResult:
    path: str
    findings: List[dict] = field(default_factory=list)
    latent: List[dict] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)
    error: Optional[str] = None
    patched: Optional[str] = None
    diff: Optional[str] = None
    residual: List[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        d = {"path": self.path, "error": self.error, "findings": self.findings,
             "latent": self.latent, "diagnostics": self.diagnostics}
        if self.patched is not None:
            d["diff"] = self.diff
            d["residual"] = self.residual
        return d


@dataclass
class Report:
    command: str
    config: AnalysisConfig
    files: List[FileResult] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def findings(self) -> List[dict]:
        return [f for r in self.files for f in r.findings]

    def to_json(self) -> dict:
        return {"tool": "silc", "command": self.command, "config": self.config.to_json(),
                "files": [r.to_json() for r in self.files],
                "summary": self.summary(), "timings": self.timings}

    def summary(self) -> dict:
        fs = self.findings
        return {"files": len(self.files),
                "errors": sum(1 for r in self.files if r.error),
                "manifest": len(fs),
                "integration": sum(1 for f in fs if f["integration"]),
                "sanitized": sum(1 for f in fs if f["sanitized"])}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def render_text(self) -> str:
        lines = []
        for r in self.files:
            if r.error:
                lines.append(f"{r.path}: error: {r.error}")
                continue
            lines.append(f"{r.path}: {len(r.findings)} manifest finding(s)")
            for f in r.findings:
                b = f["blame"] or {}
                m = f["manifest"]
                blamed = f"{b.get('entity')} {b.get('function')}:{b.get('line')}" if b else "unknown"
                lines.append(f"  {f['bug_kind']} [{f['classification']}] in {f['function']}, "
                             f"faults in {m['world']} {m['function']}:{m['line']}, blamed on {blamed}")
                if f["sanitizer"]:
                    lines.append(f"    sanitized by {f['sanitizer']['name']} when {f['path_condition']}")
                elif f["unsanitized_reason"]:
                    lines.append(f"    not sanitized: {f['unsanitized_reason']}")
            for d in r.diagnostics:
                lines.append(f"  note: {d}")
        s = self.summary()
        lines.append(f"{s['manifest']} manifest, {s['integration']} integration, "
                     f"{s['sanitized']} sanitized")
        return "\n".join(lines) + "\n"


# -- analysis ---------------------------------------------------------------------

@dataclass
class Analysis:
    program: object
    summaries: Dict[str, Summary]
    findings: List[IntegrationFinding]
    problems: List[MissingBlame]
    diagnostics: Tuple[str, ...]


def analyze_text(text: str, filename: str, cfg: AnalysisConfig, timer: Optional[Timer] = None) -> Analysis:
    timer = timer or Timer()
    t0 = time.perf_counter()
    program = parse(text, filename)
    run = run_program(program, cfg)
    t1 = time.perf_counter()
    findings, problems = classify_all(run.summaries, BugCatalog.from_config(cfg))
    t2 = time.perf_counter()
    timer.add("analysis", t1 - t0)
    timer.add("blame", t2 - t1)
    return Analysis(program, run.summaries, findings, problems, run.diagnostics)


def _roots(program) -> List[str]:
    g = build_call_graph(program)
    called = {c for n in g.nodes for c in g.callees(n)}
    return [f.name for f in program.functions if f.name not in called]


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _file_result(path: str, a: Analysis) -> FileResult:
    name = Path(path).name
    r = FileResult(path)
    r.findings = [finding_json(f, name) for f in a.findings] + [missing_json(m, name) for m in a.problems]
    r.latent = latent_json(a.summaries, _roots(a.program))
    r.diagnostics = list(a.diagnostics)
    return r


def run_analyze(paths: Sequence[str], config: Optional[AnalysisConfig] = None) -> Tuple[Report, int]:
    cfg = config or AnalysisConfig()
    report = Report("analyze", cfg)
    timer = Timer()
    start = time.perf_counter()
    code = EXIT_CLEAN
    for path in paths:
        try:
            text = _read(path)
            a = analyze_text(text, Path(path).name, cfg, timer)
        except (OSError, MiniCSyntaxError, ResolveError) as e:
            report.files.append(FileResult(str(path), error=f"{type(e).__name__}: {e}"))
            code = EXIT_USAGE
            continue
        r = _file_result(str(path), a)
        report.files.append(r)
        if r.findings and code == EXIT_CLEAN:
            code = EXIT_BUGS
    timer.add("total", time.perf_counter() - start)
    report.timings = timer.as_ms()
    return report, code


# -- sanitization ---------------------------------------------------------------

@dataclass
class SanitizeOutcome:
    text: str
    patches: List[dict]
    unsanitized: Dict[tuple, str]
    final: Analysis


def sanitize_text(text: str, filename: str, cfg: AnalysisConfig, timer: Optional[Timer] = None) -> SanitizeOutcome:
    """Repeatedly analyse, patch one culprit call, and reparse until no
    sanitizable integration finding remains."""
    timer = timer or Timer()
    patches: List[dict] = []
    failed: Dict[tuple, str] = {}
    a = analyze_text(text, filename, cfg, timer)
    for _ in range(MAX_PATCHES):
        groups = [g for g in group_by_culprit(a.findings)
                  if not any(finding_key(f) in failed for f in g)]
        if not groups:
            break
        group = groups[0]
        t0 = time.perf_counter()
        try:
            plan = extract_path_condition(group, a.summaries, a.program, cfg)
            src = generate_sanitizer(plan, a.program)
            new_text, diff = rewrite_call_site(a.program, src)
            parse(new_text, filename)
        except (UnscopedCondition, PatchConflict, MiniCSyntaxError, ResolveError) as e:
            for f in group:
                failed[finding_key(f)] = f"{type(e).__name__}: {e}"
            timer.add("sanitize", time.perf_counter() - t0)
            continue
        timer.add("sanitize", time.perf_counter() - t0)
        patches.append({"name": src.name, "keys": [finding_key(f) for f in group],
                        "condition": plan.condition, "template": plan.template,
                        "diff": diff, "wrapper": src.wrapper})
        text = new_text
        a = analyze_text(text, filename, cfg, timer)
    return SanitizeOutcome(text, patches, failed, a)


def run_sanitize(paths: Sequence[str], config: Optional[AnalysisConfig] = None,
                 out_dir: Optional[str] = None) -> Tuple[Report, int]:
    cfg = config or AnalysisConfig()
    report = Report("sanitize", cfg)
    timer = Timer()
    start = time.perf_counter()
    code = EXIT_CLEAN
    out = Path(out_dir) if out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for path in paths:
        name = Path(path).name
        try:
            text = _read(path)
            first = analyze_text(text, name, cfg, timer)
        except (OSError, MiniCSyntaxError, ResolveError) as e:
            report.files.append(FileResult(str(path), error=f"{type(e).__name__}: {e}"))
            code = EXIT_USAGE
            continue
        r = _file_result(str(path), first)
        res = sanitize_text(text, name, cfg, timer)
        for fj, f in zip(r.findings, first.findings):
            key = finding_key(f)
            patch = next((p for p in res.patches if key in p["keys"]), None)
            if patch is not None:
                fj["sanitized"] = True
                fj["path_condition"] = patch["condition"]
                fj["sanitizer"] = {"name": patch["name"], "template": patch["template"],
                                   "diff": patch["diff"]}
            elif key in res.unsanitized:
                fj["unsanitized_reason"] = res.unsanitized[key]
        r.patched = res.text
        r.diff = "".join(difflib.unified_diff(text.splitlines(True), res.text.splitlines(True),
                                              f"a/{name}", f"b/{name}"))
        r.residual = [finding_json(f, name) for f in res.final.findings if f.is_integration]
        report.files.append(r)
        if out is not None:
            (out / name).write_text(res.text, encoding="utf-8")
            (out / (name + ".diff")).write_text(r.diff, encoding="utf-8")
        if code == EXIT_CLEAN and (r.residual or any(f["integration"] and not f["sanitized"]
                                                     for f in r.findings)):
            code = EXIT_BUGS
        if code == EXIT_CLEAN and any(not f["integration"] for f in r.findings):
            code = EXIT_BUGS
    timer.add("total", time.perf_counter() - start)
    report.timings = timer.as_ms()
    if out is not None:
        (out / "report.json").write_text(report.dumps(), encoding="utf-8")
    return report, code


# -- corpus -------------------------------------------------------------------------

def bundled_corpus() -> Path:
    from importlib.resources import files
    return Path(str(files("silc") / "corpus"))


@dataclass
class ScenarioResult:
    name: str
    expected: List[dict]
    found: List[dict]
    sanitizable: bool
    sanitized: int
    integration: int
    clean: bool
    match: bool
    millis: float
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        if not self.match:
            return False
        return self.clean if self.sanitizable else True

    def to_json(self) -> dict:
        return {"scenario": self.name, "expected": len(self.expected), "found": len(self.found),
                "match": self.match, "integration": self.integration, "sanitized": self.sanitized,
                "sanitizable": self.sanitizable, "clean": self.clean, "ok": self.ok,
                "notes": self.notes, "ms": self.millis}


def _summarize(f: IntegrationFinding) -> dict:
    return {"kind": f.kind, "status": f.status, "function": f.function,
            "blamed": f.blamed.kind, "blamed_function": f.blamed.function}


def _expected_match(expected: List[dict], found: List[dict]) -> bool:
    rest = list(found)
    for e in expected:
        hit = next((f for f in rest if all(f.get(k) == v for k, v in e.items())), None)
        if hit is None:
            return False
        rest.remove(hit)
    return not rest


def run_scenario(directory: Path, config: Optional[AnalysisConfig] = None) -> ScenarioResult:
    spec = json.loads((directory / "expected.json").read_text(encoding="utf-8"))
    cfg = config or AnalysisConfig()
    if (directory / "config.json").exists():
        cfg = cfg.merged(json.loads((directory / "config.json").read_text(encoding="utf-8")))
    start = time.perf_counter()
    found, notes = [], []
    sanitized = integ = 0
    clean = True
    for src in sorted(directory.glob("*.mc")):
        text = src.read_text(encoding="utf-8")
        a = analyze_text(text, src.name, cfg)
        found += [_summarize(f) for f in a.findings]
        found += [{"kind": m.triple.err.kind, "status": "MissingBlame", "function": m.function}
                  for m in a.problems]
        integ += sum(1 for f in a.findings if f.is_integration)
        res = sanitize_text(text, src.name, cfg)
        done = {k for p in res.patches for k in p["keys"]}
        sanitized += sum(1 for f in a.findings if f.is_integration and finding_key(f) in done)
        notes += sorted(set(res.unsanitized.values()))
        residual = [f for f in res.final.findings if f.is_integration]
        if residual or any(f.is_integration and finding_key(f) not in done for f in a.findings):
            clean = False
    expected = spec.get("findings", [])
    return ScenarioResult(directory.name, expected, found, spec.get("sanitizable", True),
                          sanitized, integ, clean, _expected_match(expected, found),
                          _ms(time.perf_counter() - start), notes)


def run_corpus(corpus_dir=None, config: Optional[AnalysisConfig] = None) -> Tuple[dict, int]:
    root = Path(corpus_dir) if corpus_dir else bundled_corpus()
    start = time.perf_counter()
    rows = []
    for d in sorted(p for p in root.iterdir() if p.is_dir() and (p / "expected.json").exists()):
        rows.append(run_scenario(d, config))
    table = {"corpus": str(root) if corpus_dir else "bundled",
             "scenarios": [r.to_json() for r in rows],
             "totals": {"scenarios": len(rows),
                        "ok": sum(1 for r in rows if r.ok),
                        "integration": sum(r.integration for r in rows),
                        "sanitized": sum(r.sanitized for r in rows)},
             "timings": {"total": _ms(time.perf_counter() - start)}}
    code = EXIT_CLEAN if all(r.ok for r in rows) else EXIT_BUGS
    return table, code


def render_corpus(table: dict) -> str:
    head = f"{'scenario':<28} {'found/exp':>9} {'integ':>5} {'sanit':>5} {'clean':>5} {'ok':>3} {'ms':>9}"
    lines = [head, "-" * len(head)]
    for r in table["scenarios"]:
        lines.append(f"{r['scenario']:<28} {str(r['found']) + '/' + str(r['expected']):>9} "
                     f"{r['integration']:>5} {r['sanitized']:>5} {str(r['clean']):>5} "
                     f"{'yes' if r['ok'] else 'NO':>3} {r['ms']:>9.1f}")
    t = table["totals"]
    lines.append(f"{t['ok']}/{t['scenarios']} scenarios ok, {t['sanitized']}/{t['integration']} "
                 f"integration findings sanitized")
    return "\n".join(lines) + "\n"


def strip_timings(obj):
    """Drop timing fields so two reports can be compared byte for byte."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in ("timings", "ms")}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj

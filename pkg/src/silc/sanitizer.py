"""Sanitizer synthesis: path conditions, wrapper generation and call-site patching.

A Plus flow faults inside the vendor, so the wrapper refuses the call when
the callee's error precondition holds. A Minus flow leaks memory the vendor
orphaned, so the wrapper saves the doomed pointers before the call and frees
them after it.
"""
from __future__ import annotations

import difflib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .blame import IntegrationFinding
from .config import AnalysisConfig
from .executor.engine import Summary
from .frontend.ast import (
    Assign, Call, Compare, FieldLoad, Free, FuncDef, If, IntLit, Load, Location, MiniType,
    NullLit, Program, Return, Var,
)
from .frontend.printer import print_function
from .isl import (
    NIL, NOLEAK, PLUS, STOP, CallSite, Const, Eq, Invalid, LVar, Not, PointsToField,
    PointsToLoc, PointsToVar, SymbolicState, Triple, literal_terms, normalize_pure, pure_vars,
)
from .solver import is_satisfiable

TEMP = "silc_t"
FLAG = "silc_g"
RET_TEMP = "silc_ret"


class UnscopedCondition(Exception):
    pass


class PatchConflict(Exception):
    pass


# -- access paths ---------------------------------------------------------------

# a path is (formal, step, step, ...) where a step is "*" or a field name
Path = Tuple[str, ...]


def access_paths(s: SymbolicState, roots: Sequence[str]) -> Dict[object, Path]:
    """Shortest program access path denoting each logical value of ``s``."""
    out: Dict[object, Path] = {}
    frontier = []
    for r in roots:
        v = s.var_value(r)
        if v is not None and v not in out:
            out[v] = (r,)
            frontier.append(v)
    cells = [a for a in s.heap if isinstance(a, (PointsToLoc, PointsToField))]
    cells.sort(key=lambda a: (0 if isinstance(a, PointsToLoc) else 1, getattr(a, "field", "")))
    while frontier:
        nxt = []
        for v in frontier:
            for a in cells:
                if a.loc != v or a.value in out:
                    continue
                step = "*" if isinstance(a, PointsToLoc) else a.field
                out[a.value] = out[v] + (step,)
                nxt.append(a.value)
        frontier = nxt
    return out


def render_path(p: Path) -> str:
    text = p[0]
    for step in p[1:]:
        text = f"*{text}" if step == "*" else f"{text}->{step}"
    return text


def _render_term(t, paths) -> str:
    if t == NIL:
        return "NULL"
    if isinstance(t, Const):
        return str(t.value)
    if t in paths:
        return render_path(paths[t])
    raise UnscopedCondition(f"{t} has no program-variable witness")


def _lit_order(lit, paths) -> tuple:
    depth = max((len(paths[v]) for v in literal_terms(lit) if v in paths), default=1)
    return (depth, 0 if isinstance(lit, Not) else 1, str(lit))


def collapse_to_program_condition(pi0, call_state: SymbolicState, roots=None) -> str:
    """Render a conjunction of literals over the program variables of ``call_state``."""
    lits = normalize_pure(pi0)
    if not lits:
        return "true"
    if roots is None:
        roots = [a.var for a in call_state.heap if isinstance(a, PointsToVar)]
    paths = access_paths(call_state, roots)
    parts = []
    for lit in sorted(lits, key=lambda l: _lit_order(l, paths)):
        if isinstance(lit, Not):
            a, b = lit.arg.lhs, lit.arg.rhs
            op = "!="
        elif isinstance(lit, Eq):
            a, b, op = lit.lhs, lit.rhs, "=="
        else:
            return "false"
        if a in (NIL,) or isinstance(a, Const):
            a, b = b, a
        parts.append(f"{_render_term(a, paths)} {op} {_render_term(b, paths)}")
    return " && ".join(parts)


# -- plans ----------------------------------------------------------------------

@dataclass
class SanitizerPlan:
    culprit: CallSite
    callee: str
    direction: str
    template: str
    params: Tuple[Tuple[str, MiniType], ...]
    return_type: MiniType
    paths: Tuple[Tuple[object, ...], ...]  # disjunction of conjunctions over the callee pre
    states: Tuple[SymbolicState, ...]  # the callee state each path is rendered against
    condition: str  # human-readable rendering
    rescues: Tuple[Tuple[Path, int], ...] = ()  # (access path, index into paths or -1 for always)
    error_value: Optional[str] = None
    findings: Tuple[IntegrationFinding, ...] = ()


@dataclass(frozen=True)
class SanitizerSource:
    name: str
    wrapper: str
    caller: str
    culprit: CallSite
    original: str  # text of the call statement being replaced
    replacement: str


def _approximate(t: Triple) -> tuple:
    """Drop spatial atoms, keeping the validity facts they imply."""
    lits = list(t.pre.pure)
    for a in t.pre.heap:
        if isinstance(a, (PointsToLoc, PointsToField, Invalid)):
            lits.append(Not(Eq(a.loc, NIL)))
    return normalize_pure(tuple(lits))


def _matches(t: Triple, f: IntegrationFinding) -> bool:
    e, g = t.err, f.triple.err
    return (t.is_err and e.latent and e.kind == g.kind and e.fault == g.fault
            and (e.world.kind, e.world.function, e.world.line)
            == (g.world.kind, g.world.function, g.world.line))


def _check_scope(lits, s: SymbolicState, params) -> None:
    paths = access_paths(s, params)
    for v in sorted(pure_vars(lits), key=lambda v: v.name):
        if v not in paths:
            raise UnscopedCondition(f"{v} is not reachable from the parameters of the call")


def extract_path_condition(findings, summaries: Dict[str, Summary], program: Program,
                           cfg: Optional[AnalysisConfig] = None) -> SanitizerPlan:
    """Build the plan for one culprit call. ``findings`` share that culprit."""
    if isinstance(findings, IntegrationFinding):
        findings = [findings]
    findings = list(findings)
    cfg = cfg or AnalysisConfig()
    first = findings[0]
    if not first.is_integration:
        raise ValueError("only integration findings are sanitized")
    culprit = first.culprit
    if culprit is None:
        raise UnscopedCondition("no vendor call to sanitize")
    callee = summaries[culprit.callee]
    fdef = program.function(culprit.callee)
    params = callee.params
    paths: List[tuple] = []
    states: List[SymbolicState] = []
    rescues: List[Tuple[Path, int]] = []
    if first.sign == PLUS:
        picked = sorted({f.triple.err.vendor_triple for f in findings
                         if f.triple.err.vendor_triple is not None})
        chosen = [callee.triples[i] for i in picked] or \
            [t for t in callee.triples if any(_matches(t, f) for f in findings)]
        for t in chosen:
            lits = _approximate(t)
            _check_scope(lits, t.pre, params)
            if (lits, t.pre) not in zip(paths, states):
                paths.append(lits)
                states.append(t.pre)
        if not paths:
            raise UnscopedCondition(f"no error triple of {callee.name} introduces the fault")
        template = STOP
    else:
        for f in findings:
            origin = f.blamed.origin
            t = callee.triples[origin.triple_index]
            lits = tuple(l for l in normalize_pure(t.post.path))
            # keep only what the entry state can decide
            _check_scope(lits, t.pre, params)
            aps = access_paths(t.pre, params)
            res = LVar(origin.resource)
            if res not in aps:
                raise UnscopedCondition(f"{res} is not reachable from the parameters of the call")
            edge = f.triple.err.edge or "*"
            key = (lits, t.pre)
            if key in zip(paths, states):
                idx = list(zip(paths, states)).index(key)
            else:
                paths.append(lits)
                states.append(t.pre)
                idx = len(paths) - 1
            ap = aps[res] + (edge,)
            rescue = (ap, -1 if not lits else idx)
            if rescue not in rescues:
                rescues.append(rescue)
        # a rescue needed unconditionally subsumes the guarded copies
        always = {ap for ap, i in rescues if i == -1}
        rescues = [(ap, i) for ap, i in rescues if i == -1 or ap not in always]
        template = NOLEAK
    texts = []
    for lits, s in zip(paths, states):
        texts.append(collapse_to_program_condition(lits, s, params))
    cond = " || ".join(f"({c})" if len(texts) > 1 else c for c in texts) or "true"
    rt = fdef.return_type
    return SanitizerPlan(culprit, culprit.callee, first.sign, template, fdef.params, rt,
                         tuple(paths), tuple(states), cond, tuple(rescues),
                         cfg.error_return(rt.kind), tuple(findings))


# -- code generation --------------------------------------------------------------

class _Lowerer:
    """Turns access paths and literals into MiniC statements using temporaries."""

    def __init__(self):
        self.n = 0

    def temp(self) -> str:
        self.n += 1
        return f"{TEMP}{self.n}"

    def load(self, path: Path, names: Dict[Path, str], out: list) -> str:
        if path in names:
            return names[path]
        if len(path) == 1:
            return path[0]
        base = self.load(path[:-1], names, out)
        t = self.temp()
        step = path[-1]
        out.append(Load(t, base) if step == "*" else FieldLoad(t, base, step))
        names[path] = t
        return t

    def nest(self, lits, state: SymbolicState, params, body: tuple) -> tuple:
        """Nested ifs testing each literal; loads happen once their base is known valid."""
        paths = access_paths(state, params)

        ordered = sorted(normalize_pure(lits), key=lambda l: _lit_order(l, paths))
        names: Dict[Path, str] = {}

        def build(i: int) -> tuple:
            if i == len(ordered):
                return body
            lit = ordered[i]
            pre: list = []
            neg = isinstance(lit, Not)
            e = lit.arg if neg else lit
            terms = []
            for t in (e.lhs, e.rhs):
                if t == NIL:
                    terms.append(NullLit())
                elif isinstance(t, Const):
                    terms.append(IntLit(t.value))
                else:
                    terms.append(Var(self.load(paths[t], names, pre)))
            if isinstance(terms[0], (NullLit, IntLit)):
                terms.reverse()
            cond = Compare("!=" if neg else "==", terms[0], terms[1])
            return tuple(pre) + (If(cond, build(i + 1)),)

        return build(0)


def _call_args(params) -> tuple:
    return tuple(Var(n) for n, _ in params)


def _fresh_name(program: Program, callee: str, taken=()) -> str:
    n = 1
    while program.has_function(f"sanitise_{callee}_{n}") or f"sanitise_{callee}_{n}" in taken:
        n += 1
    return f"sanitise_{callee}_{n}"


def generate_sanitizer(plan: SanitizerPlan, program: Optional[Program] = None,
                       name: Optional[str] = None) -> SanitizerSource:
    name = name or (_fresh_name(program, plan.callee) if program else f"sanitise_{plan.callee}_1")
    names = {n for n, _ in plan.params}
    lw = _Lowerer()
    while f"{TEMP}{lw.n + 1}" in names:
        lw.n += 1
    params = tuple(n for n, _ in plan.params)
    void = plan.return_type.kind == "void"
    call = Call(None if void else RET_TEMP, plan.callee, _call_args(plan.params))
    finish = (Return(),) if void else (Return(Var(RET_TEMP)),)
    body: list = []
    if plan.template == STOP:
        stop = (Return(),) if plan.error_value is None else (Return(_literal(plan.error_value)),)
        for lits, st in zip(plan.paths, plan.states):
            if not is_satisfiable(lits):
                continue
            body.extend(lw.nest(lits, st, params, stop))
        body.append(call)
        body.extend(finish)
    else:
        flags: Dict[int, str] = {}
        for ap, idx in plan.rescues:
            if idx >= 0 and idx not in flags:
                flags[idx] = f"{FLAG}{len(flags) + 1}"
                body.append(Assign(flags[idx], IntLit(0)))
                body.extend(lw.nest(plan.paths[idx], plan.states[idx], params,
                                    (Assign(flags[idx], IntLit(1)),)))
        saved = []
        for ap, idx in plan.rescues:
            pre: list = []
            load_names: Dict[Path, str] = {}
            base = lw.load(ap[:-1], load_names, pre)
            t = lw.temp()
            step = ap[-1]
            grab = pre + [Load(t, base) if step == "*" else FieldLoad(t, base, step)]
            if idx < 0:
                body.extend(grab)
            else:
                body.append(Assign(t, NullLit()))
                body.append(If(Compare("!=", Var(flags[idx]), IntLit(0)), tuple(grab)))
            saved.append(t)
        body.append(call)
        for t in saved:
            body.append(If(Compare("!=", Var(t), NullLit()), (Free(t),)))
        body.extend(finish)
    wrapper = FuncDef(name, plan.params, plan.return_type, tuple(body), "Client",
                      Location("<generated>", 0, 0))
    text = print_function(wrapper)
    caller = plan.culprit.caller
    original = ""
    if program is not None:
        original = program.source[plan.culprit.offset:plan.culprit.end]
    replacement = _retarget(original, plan.callee, name) if original else ""
    return SanitizerSource(name, text, caller, plan.culprit, original, replacement)


def _literal(text: str):
    if text.strip() == "NULL":
        return NullLit()
    return IntLit(int(text))


def _retarget(stmt_text: str, callee: str, name: str) -> str:
    i = stmt_text.find(callee + "(")
    while i > 0 and (stmt_text[i - 1].isalnum() or stmt_text[i - 1] == "_"):
        i = stmt_text.find(callee + "(", i + 1)
    if i < 0:
        raise PatchConflict(f"call to {callee} not found in {stmt_text!r}")
    return stmt_text[:i] + name + stmt_text[i + len(callee):]


def rewrite_call_site(p: Program, src: SanitizerSource) -> Tuple[str, str]:
    """Insert the wrapper above the caller and redirect the one call. Returns
    (patched text, unified diff)."""
    text = p.source
    site = src.culprit
    if p.has_function(src.name):
        raise PatchConflict(f"{src.name} already exists")
    if text[site.offset:site.end] != src.original or not src.original:
        raise PatchConflict(f"call at {site.file}:{site.line} no longer matches")
    patched = text[:site.offset] + src.replacement + text[site.end:]
    caller = p.function(src.caller)
    at = caller.loc.offset
    line_start = text.rfind("\n", 0, at) + 1
    patched = patched[:line_start] + src.wrapper + "\n\n" + patched[line_start:]
    name = p.filename or "input.mc"
    diff = "".join(difflib.unified_diff(text.splitlines(True), patched.splitlines(True),
                                        f"a/{name}", f"b/{name}"))
    return patched, diff


def group_by_culprit(findings: Sequence[IntegrationFinding]) -> List[List[IntegrationFinding]]:
    groups: Dict[tuple, List[IntegrationFinding]] = {}
    for f in findings:
        if not f.sanitizable:
            continue
        c = f.culprit
        groups.setdefault((c.caller, c.callee, c.offset, c.end, f.sign), []).append(f)
    return list(groups.values())

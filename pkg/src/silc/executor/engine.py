"""Compositional symbolic execution producing blame-carrying summaries.

Each path is an ``ExecState``: the precondition inferred so far (parameters
plus back-propagated missing resource) and the current state. Statements are
evaluated against the predefined triples by biabduction; calls apply callee
summaries. Functions are analysed callee-first along the call graph.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from ..biabduction import BiabductionResult, Inconsistent, SearchExhausted, biabduce
from ..blame import BugCatalog, init_worlds, world_entity
from ..config import AnalysisConfig
from ..frontend.ast import (
    INT, VENDOR, Assign, Call, FieldLoad, FieldStore, Free, FuncDef, If,
    IntLit, Load, Malloc, NullLit, Program, Return, Store, Truthy, Var, While,
    assigned_vars,
)
from ..frontend.callgraph import build_call_graph
from ..frontend.parser import BUILTINS
from ..isl import (
    CLIENT, ERR, MEMLEAK, NIL, NPD, OK, Blame, CallSite, Const, Entity, Eq,
    ErrInfo, FreshVars, Invalid, LVar, Not, Origin, PointsToField, PointsToLoc,
    PointsToVar, SeparationViolation, Severed, SymbolicState, Triple, World, _subst,
    head, normalize, normalize_pure, pure_vars, state_vars, subst_atom,
)
from ..solver import entails_pure, solver_for, state_satisfiable
from .leaks import detect_leaks_at_exit
from .rules import Rule, RuleTable, world_blames

RET = "$ret"


class NoRuleApplies(Exception):
    pass


@dataclass(frozen=True)
class ExecState:
    pre: SymbolicState
    cur: SymbolicState


@dataclass(frozen=True)
class EvalOutcome:
    exit: str
    missing: SymbolicState
    post: SymbolicState
    err: Optional[ErrInfo] = None
    rule: str = ""
    receipt: Optional[BiabductionResult] = None
    required: Optional[SymbolicState] = None  # the rule precondition that was matched


@dataclass(frozen=True)
class RuleEvent:
    """Trace record of one rule or summary application (for property checks)."""
    function: str
    rule: str
    exit: str
    world: Entity
    before: SymbolicState  # p * m
    after: SymbolicState
    shifted: Tuple[object, ...] = ()
    applied_summary: Optional[str] = None


@dataclass
class Summary:
    name: str
    world_tag: str
    params: Tuple[str, ...]
    triples: Tuple[Triple, ...] = ()
    diagnostics: Tuple[str, ...] = ()
    file: str = "<input>"
    return_type: str = "void"

    def ok_triples(self) -> Tuple[Triple, ...]:
        return tuple(t for t in self.triples if not t.is_err)

    def err_triples(self, latent: Optional[bool] = None) -> Tuple[Triple, ...]:
        return tuple(t for t in self.triples if t.is_err
                     and (latent is None or t.err.latent == latent))


# -- small helpers ----------------------------------------------------------

def set_var(s: SymbolicState, name: str, value) -> SymbolicState:
    heap = tuple(a for a in s.heap if not (isinstance(a, PointsToVar) and a.var == name))
    return replace(s, heap=heap + (PointsToVar(name, value),))


def drop_vars(s: SymbolicState, names) -> SymbolicState:
    names = set(names)
    return replace(s, heap=tuple(a for a in s.heap
                                 if not (isinstance(a, PointsToVar) and a.var in names)))


def strip_worlds(s: SymbolicState) -> SymbolicState:
    return replace(s, heap=tuple(a for a in s.heap if not isinstance(a, World)))


def find_blame(s: SymbolicState, resource, ref: str) -> Optional[Blame]:
    """Blame for ``resource``: syntactic match first, then variable aliasing
    (equalities through constants such as nil do not count)."""
    b = s.blame_for(resource, ref)
    if b is not None:
        return b
    var_eqs = tuple(l for l in s.pure if isinstance(l, Eq)
                    and isinstance(l.lhs, LVar) and isinstance(l.rhs, LVar))
    cs = solver_for(var_eqs)
    for a in s.heap:
        if isinstance(a, Blame) and a.ref == ref and cs.are_equal(a.resource, resource):
            return a
    return None


def is_latent(pre: SymbolicState, kind: str, resource) -> bool:
    """An error is latent when the precondition alone forces its trigger."""
    if resource is None or kind == MEMLEAK:
        return False
    if kind == NPD:
        return entails_pure(pre.pure, normalize_pure(Eq(resource, NIL)))
    cs = solver_for(pre.pure)
    return any(isinstance(a, Invalid) and cs.are_equal(a.loc, resource) for a in pre.heap)


def gc_state(s: SymbolicState) -> SymbolicState:
    """Drop Blame atoms on existential values nothing else mentions."""
    used = pure_vars(s.pure) | pure_vars(s.path)
    for a in s.heap:
        if not isinstance(a, Blame):
            used |= {v for v in _atom_terms(a) if isinstance(v, LVar)}
    heap = tuple(a for a in s.heap if not (isinstance(a, Blame) and a.resource in s.existentials
                                            and a.resource not in used))
    return normalize(replace(s, heap=heap))


def _atom_terms(a):
    if isinstance(a, PointsToVar):
        return (a.value,)
    if isinstance(a, (PointsToLoc, PointsToField)):
        return (a.loc, a.value)
    if isinstance(a, Invalid):
        return (a.loc,)
    return ()


def _int_vars(func: FuncDef) -> set:
    out = {n for n, t in func.params if t == INT}
    from ..frontend.ast import iter_stmts
    for s in iter_stmts(func.body):
        if isinstance(s, Assign) and isinstance(s.expr, IntLit):
            out.add(s.target)
        if isinstance(s, Call) and s.func == "strlen" and s.target:
            out.add(s.target)
    return out


# -- per-function analysis --------------------------------------------------

class FunctionAnalyzer:
    def __init__(self, func: FuncDef, program: Program, env: Dict[str, Summary],
                 cfg: AnalysisConfig, catalog: BugCatalog, fresh: FreshVars,
                 scc: Sequence[str] = (), trace: Optional[list] = None):
        self.func = func
        self.program = program
        self.env = env
        self.cfg = cfg
        self.catalog = catalog
        self.fresh = fresh
        self.scc = set(scc)
        self.trace = trace
        self.file = program.filename
        self.worlds = init_worlds(func, catalog, self.file).heap
        self.entity = world_entity(func, self.file)
        self.rules = RuleTable(self.worlds, fresh)
        self.diagnostics: List[str] = []
        self.int_vars = _int_vars(func)
        self.params = func.param_names
        self.locals = tuple(v for v in assigned_vars(func.body) if v not in self.params)

    def diag(self, msg: str) -> None:
        if msg not in self.diagnostics:
            self.diagnostics.append(msg)

    def site(self, stmt, what: str) -> CallSite:
        loc = stmt.loc
        return CallSite(self.func.name, what, self.file, loc.line, loc.col, loc.offset, loc.end)

    # initial state ---------------------------------------------------------

    def skeleton_name(self, param: str) -> str:
        name = param[:1].upper() + param[1:]
        return name + "_" if name[-1].isdigit() else name

    def initial(self) -> Tuple[ExecState, Dict[str, LVar]]:
        pvals = {p: LVar(self.skeleton_name(p)) for p in self.params}
        self.fresh.reserve(v.name for v in pvals.values())
        pre_heap = tuple(PointsToVar(p, v) for p, v in pvals.items())
        local_vals = {l: self.fresh("U") for l in self.locals}
        cur_heap = pre_heap + tuple(PointsToVar(l, v) for l, v in local_vals.items()) + self.worlds
        pre = normalize(SymbolicState(pre_heap))
        cur = normalize(SymbolicState(cur_heap, existentials=frozenset(local_vals.values())))
        return ExecState(pre, cur), pvals

    # expression evaluation -------------------------------------------------

    def value_of(self, es: ExecState, name: str):
        v = es.cur.var_value(name)
        if v is None:
            raise KeyError(f"{self.func.name}: no value for {name}")
        return v

    def eval_expr(self, es: ExecState, e, line) -> Tuple[ExecState, object]:
        if isinstance(e, Var):
            return es, self.value_of(es, e.name)
        if isinstance(e, IntLit):
            return es, Const(e.value)
        if isinstance(e, NullLit):
            v = self.fresh("N")
            cur = es.cur
            cur = normalize(SymbolicState(
                cur.heap + world_blames(v, self.worlds, line), cur.pure + normalize_pure(Eq(v, NIL)),
                cur.path, cur.existentials | {v}, cur.severed))
            return ExecState(es.pre, cur), v
        raise TypeError(e)

    def cond_literal(self, es: ExecState, cond):
        def term(e):
            if isinstance(e, Var):
                return self.value_of(es, e.name)
            if isinstance(e, IntLit):
                return Const(e.value)
            return NIL
        if isinstance(cond, Truthy):
            zero = Const(0) if cond.var.name in self.int_vars else NIL
            return Not(Eq(term(cond.var), zero))
        lit = Eq(term(cond.lhs), term(cond.rhs))
        return lit if cond.op == "==" else Not(lit)

    def assume(self, es: ExecState, lit) -> Optional[ExecState]:
        lits = normalize_pure(lit)
        cur = es.cur
        cur = replace(cur, pure=normalize_pure(cur.pure + lits), path=normalize_pure(cur.path + lits))
        if not state_satisfiable(cur):
            return None
        pre = es.pre
        if pure_vars(lits) <= state_vars(pre):
            pre = replace(pre, pure=normalize_pure(pre.pure + lits))
            if not state_satisfiable(pre):
                return None
        return ExecState(pre, cur)

    # rule firing -----------------------------------------------------------

    def _admit_missing(self, es: ExecState, m: SymbolicState):
        """Split ``m`` into what goes to the precondition and what is
        materialised locally. Returns None if the outcome must be dropped."""
        ex = es.cur.existentials
        keep, local_ex = [], set()
        locally_owned = {a.loc for a in es.cur.heap if isinstance(a, PointsToLoc)}
        for a in m.heap:
            h = head(a)
            if h is not None and h in ex:
                if isinstance(a, Blame):
                    continue
                if isinstance(a, PointsToField) and h in locally_owned:
                    if isinstance(a.value, LVar):
                        local_ex.add(a.value)
                    continue
                return None
            keep.append(a)
        kept = SymbolicState(tuple(keep), m.pure)
        if state_vars(kept) & ex:
            return None
        return kept, local_ex

    def fire(self, es: ExecState, rule: Rule, stmt, extra_post=()) -> Optional[Tuple[ExecState, EvalOutcome]]:
        try:
            res = biabduce(es.cur, rule.pre)
        except SearchExhausted:
            self.diag(f"{self.func.name}: {rule.name} at line {stmt.loc.line} skipped (search budget)")
            return None
        except Inconsistent:
            return None
        admitted = self._admit_missing(es, res.missing)
        if admitted is None:
            return None
        m, local_ex = admitted
        post_rule = _subst(rule.post, res.bindings, False)
        frame = res.frame
        try:
            cur = normalize(self.sever_fields_of_invalid(SymbolicState(
                frame.heap + post_rule.heap, frame.pure + res.missing.pure + post_rule.pure,
                frame.path, es.cur.existentials | post_rule.existentials | local_ex, es.cur.severed)))
            pre = normalize(SymbolicState(es.pre.heap + m.heap, es.pre.pure + m.pure))
        except SeparationViolation:
            return None
        if not state_satisfiable(cur) or not state_satisfiable(pre):
            return None
        new = ExecState(pre, cur)
        err = None
        if rule.exit == ERR:
            resource = _subst_term(rule.resource, res.bindings)
            err = ErrInfo(rule.kind, resource, self.entity.at(stmt.loc.line),
                          find_blame(cur, resource, rule.kind), None, False,
                          self.site(stmt, rule.name.split(".")[0]), rule.name)
        out = EvalOutcome(rule.exit, m, cur, err, rule.name, res, rule.pre)
        if self.trace is not None:
            before = normalize(SymbolicState(es.cur.heap + m.heap, es.cur.pure + m.pure, es.cur.path))
            shifted = tuple(_subst_term(r, res.bindings) for r in rule.shifts)
            self.trace.append(RuleEvent(self.func.name, rule.name, rule.exit,
                                        self.entity.at(stmt.loc.line), before, cur, shifted))
        return new, out

    def run_rules(self, es, rules, stmt):
        """Fire each rule; returns (ok (state, outcome, rule) list, err terminals)."""
        oks, errs = [], []
        for rule in rules:
            r = self.fire(es, rule, stmt)
            if r is None:
                continue
            new, out = r
            if rule.exit == OK:
                oks.append((new, out, rule))
            else:
                errs.append((ERR, new, out.err))
        return oks, errs

    # severing --------------------------------------------------------------

    def _blames_of(self, s: SymbolicState, base) -> tuple:
        return tuple(a for a in s.heap if isinstance(a, Blame) and a.resource == base)

    def sever_fields_of_invalid(self, cur: SymbolicState) -> SymbolicState:
        """Drop cells whose base is freed, remembering the cut edges (unnormalised in/out)."""
        invalid = {a.loc for a in cur.heap if isinstance(a, Invalid)}
        dropped = [a for a in cur.heap if isinstance(a, (PointsToField, PointsToLoc)) and a.loc in invalid]
        if not dropped:
            return cur
        sev = tuple(Severed(a.loc, getattr(a, "field", None), a.value, self._blames_of(cur, a.loc))
                    for a in dropped)
        heap = tuple(a for a in cur.heap if a not in dropped)
        return replace(cur, heap=heap, severed=cur.severed + sev)

    def record_overwrite(self, cur: SymbolicState, base, fld, old) -> SymbolicState:
        if old is None:
            return cur
        s = Severed(base, fld, old, self._blames_of(cur, base))
        return replace(cur, severed=cur.severed + (s,))

    # statements ------------------------------------------------------------

    def exec_stmt(self, es: ExecState, s) -> Tuple[List[ExecState], list]:
        line = s.loc.line
        if isinstance(s, Assign):
            es, t = self.eval_expr(es, s.expr, line)
            return [ExecState(es.pre, set_var(es.cur, s.target, t))], []
        if isinstance(s, Malloc):
            oks, _ = self.run_rules(es, self.rules.malloc(line), s)
            return [ExecState(n.pre, set_var(n.cur, s.target, r.resource)) for n, _, r in oks], []
        if isinstance(s, Free):
            x = self.value_of(es, s.var)
            oks, errs = self.run_rules(es, self.rules.free(x, line), s)
            return [n for n, _, _ in oks], errs
        if isinstance(s, (Store, FieldStore)):
            es, t = self.eval_expr(es, s.expr, line)
            x = self.value_of(es, s.ptr)
            fld = s.field if isinstance(s, FieldStore) else None
            oks, errs = self.run_rules(es, self.rules.access("store", x, line, fld, t), s)
            out = []
            for n, o, r in oks:
                old = _subst_term(r.fresh[0], o.receipt.bindings)
                base = _subst_term(x, o.receipt.bindings)
                out.append(ExecState(n.pre, normalize(self.record_overwrite(n.cur, base, fld, old))))
            return out, errs
        if isinstance(s, (Load, FieldLoad)):
            y = self.value_of(es, s.ptr)
            fld = s.field if isinstance(s, FieldLoad) else None
            oks, errs = self.run_rules(es, self.rules.access("load", y, line, fld), s)
            out = []
            for n, o, r in oks:
                v = _subst_term(r.fresh[0], o.receipt.bindings)
                out.append(ExecState(n.pre, set_var(n.cur, s.target, v)))
            return out, errs
        if isinstance(s, Call):
            return self.exec_call(es, s)
        if isinstance(s, If):
            lit = self.cond_literal(es, s.cond)
            states, terms = [], []
            for positive, block in ((True, s.then), (False, s.orelse or ())):
                b = self.assume(es, lit if positive else _negate(lit))
                if b is None:
                    continue
                st, te = self.exec_block([b], block)
                states += st
                terms += te
            return states, terms
        if isinstance(s, While):
            return self.exec_while(es, s)
        if isinstance(s, Return):
            if s.expr is not None:
                es, t = self.eval_expr(es, s.expr, line)
                es = ExecState(es.pre, set_var(es.cur, RET, t))
            return [], [(OK, es, None)]
        raise NoRuleApplies(f"unsupported statement {s!r}")

    def exec_while(self, es: ExecState, s: While):
        bound = self.cfg.unroll_bound
        current, exits, terms = [es], [], []
        for k in range(bound + 1):
            entering = []
            for st in current:
                lit = self.cond_literal(st, s.cond)
                done = self.assume(st, _negate(lit))
                if done is not None:
                    exits.append(done)
                again = self.assume(st, lit)
                if again is None:
                    continue
                if k == bound:
                    self.diag(f"{self.func.name}: loop at line {s.loc.line} cut after "
                              f"{bound} iterations")
                else:
                    entering.append(again)
            if not entering:
                break
            current, te = self.exec_block(entering, s.body)
            terms += te
        return exits, terms

    def exec_block(self, states: List[ExecState], stmts) -> Tuple[List[ExecState], list]:
        terms: list = []
        for s in stmts:
            nxt: List[ExecState] = []
            for es in states:
                st, te = self.exec_stmt(es, s)
                nxt += st
                terms += te
            states = self.cap(nxt, s)
            if not states:
                break
        return states, terms

    def cap(self, states: List[ExecState], stmt) -> List[ExecState]:
        uniq = list(dict.fromkeys(states))
        limit = self.cfg.max_disjuncts
        if len(uniq) > limit:
            self.diag(f"{self.func.name}: {len(uniq) - limit} states dropped at line "
                      f"{stmt.loc.line} (limit {limit})")
            uniq = uniq[:limit]
        return uniq

    # calls -----------------------------------------------------------------

    def exec_call(self, es: ExecState, s: Call):
        line = s.loc.line
        if s.func in BUILTINS:
            return self.exec_builtin(es, s)
        if s.func in self.scc or s.func not in self.env:
            reason = "recursive call" if s.func in self.scc else "no summary"
            self.diag(f"{self.func.name}: {reason} to {s.func} at line {line} skipped")
            for a in s.args:
                es, _ = self.eval_expr(es, a, line)
            if s.target:
                v = self.fresh("R")
                es = ExecState(es.pre, replace(set_var(es.cur, s.target, v),
                                               existentials=es.cur.existentials | {v}))
            return [es], []
        actuals = []
        for a in s.args:
            es, t = self.eval_expr(es, a, line)
            actuals.append(t)
        return self.apply_summary(es, s, self.env[s.func], actuals)

    def exec_builtin(self, es: ExecState, s: Call):
        line = s.loc.line
        actuals = []
        for a in s.args:
            es, t = self.eval_expr(es, a, line)
            actuals.append(t)
        if s.func == "memcpy":
            dst, src = actuals[0], actuals[1]
            rules = self.rules.copy(src, dst, line)
        else:
            rules = self.rules.access("strlen", actuals[0], line)
        oks, errs = self.run_rules(es, rules, s)
        out = []
        for n, o, r in oks:
            cur = n.cur
            if s.func == "memcpy" and r.name == "memcpy.ok" and len(r.fresh) > 1:
                b = o.receipt.bindings
                cur = normalize(self.record_overwrite(cur, _subst_term(dst, b), None,
                                                      _subst_term(r.fresh[1], b)))
            if s.target:
                v = actuals[0] if s.func == "memcpy" else self.fresh("N")
                cur = set_var(cur, s.target, v)
                if s.func != "memcpy":
                    cur = replace(cur, existentials=cur.existentials | {v})
            out.append(ExecState(n.pre, cur))
        return out, errs

    def apply_summary(self, es: ExecState, call: Call, callee: Summary, actuals):
        """Apply every usable callee triple at this call; see module docs."""
        states, terms = [], []
        csite = self.site(call, callee.name)
        crossing = self.entity.kind == CLIENT and callee.world_tag == VENDOR
        for idx, t in enumerate(callee.triples):
            if t.is_err and (not t.err.latent or t.err.kind == MEMLEAK):
                continue
            r = self._apply_triple(es, call, callee, idx, t, actuals, csite, crossing)
            if r is None:
                continue
            new, exit_, err = r
            if exit_ == OK:
                states.append(new)
            else:
                terms.append((ERR, new, err))
        return states, terms

    def _apply_triple(self, es, call, callee, idx, t: Triple, actuals, csite, crossing):
        line = call.loc.line
        # 1. rename the callee triple apart
        names = sorted(state_vars(t.pre) | state_vars(t.post) | set(t.post.existentials)
                       | _err_vars(t.err), key=lambda v: v.name)
        ren = {v: self.fresh(v.name) for v in names}
        back = {nv.name: ov.name for ov, nv in ren.items()}
        pre = _subst(t.pre, ren, False)
        post = _subst(t.post, ren, False)
        # 2. stamp the call boundary on vendor-held blames
        if crossing:
            post = _stamp_origin(post, csite, idx, back)
        # 3. bind formals to actuals
        fm = {}
        for formal, actual in zip(callee.params, actuals):
            fv = pre.var_value(formal)
            if isinstance(fv, LVar) and fv not in fm:
                fm[fv] = actual
            elif fv is not None and fv != actual:
                fm_lit = Eq(_subst_term(fv, fm), actual)
                pre = replace(pre, pure=pre.pure + normalize_pure(fm_lit))
        try:
            q = normalize(drop_vars(_subst(pre, fm, False), callee.params))
            post = normalize(_subst(post, fm, False))
        except SeparationViolation:
            return None
        ret = post.var_value(RET)
        post = drop_vars(post, tuple(callee.params) + (RET,))
        # 4. biabduce the callee precondition against the caller state
        try:
            res = biabduce(es.cur, q)
        except SearchExhausted:
            self.diag(f"{self.func.name}: triple {idx} of {callee.name} at line {line} skipped "
                      f"(search budget)")
            return None
        except Inconsistent:
            return None
        admitted = self._admit_missing(es, res.missing)
        if admitted is None:
            return None
        m, local_ex = admitted
        b = res.bindings
        post_b = _subst(post, b, False)
        ret = _subst_term(ret, b) if ret is not None else None
        # 5. vendor-sticky: inside Vendor code, client-held blames become Vendor's
        if self.entity.kind == VENDOR:
            post_b = _sticky(post_b, self.entity.at(line))
        frame = res.frame
        exist = es.cur.existentials | post_b.existentials | local_ex
        try:
            cur = normalize(self.sever_fields_of_invalid(SymbolicState(
                frame.heap + post_b.heap,
                frame.pure + res.missing.pure + post_b.pure + post_b.path,
                frame.path + post_b.path, exist, es.cur.severed + post_b.severed)))
            new_pre = normalize(SymbolicState(es.pre.heap + m.heap, es.pre.pure + m.pure))
        except SeparationViolation:
            return None
        if not state_satisfiable(cur) or not state_satisfiable(new_pre):
            return None
        before = normalize(SymbolicState(es.cur.heap + m.heap, es.cur.pure + m.pure, es.cur.path))
        if self.trace is not None:
            self.trace.append(RuleEvent(self.func.name, f"call:{callee.name}#{idx}", t.exit,
                                        self.entity.at(line), before, cur,
                                        applied_summary=callee.world_tag))
        if t.is_err:
            e = t.err
            resource = _subst_term(_subst_term(_subst_term(e.resource, ren), fm), b)
            blame = find_blame(before, resource, e.kind)
            if blame is None and e.blame is not None:
                blame = subst_atom(subst_atom(subst_atom(e.blame, ren), fm), b)
            vcall, vidx = e.vendor_call, e.vendor_triple
            if vcall is None and crossing:
                vcall, vidx = csite, idx
            err = ErrInfo(e.kind, resource, e.world, blame, vcall, False, csite, e.fault, e.edge, vidx)
            return ExecState(new_pre, cur), ERR, err
        if call.target:
            if ret is None:
                ret = self.fresh("R")
                cur = replace(cur, existentials=cur.existentials | {ret})
            cur = set_var(cur, call.target, ret)
        return ExecState(new_pre, cur), OK, None

    # function level ----------------------------------------------------------

    def analyze(self) -> Summary:
        start, pvals = self.initial()
        finals, terms = self.exec_block([start], self.func.body)
        terms = terms + [(OK, es, None) for es in finals]
        roots = tuple(pvals.values())
        triples: List[Triple] = []
        for exit_, es, err in terms:
            triples.extend(self.finish(exit_, es, err, roots))
        triples = list(dict.fromkeys(triples))
        return Summary(self.func.name, self.func.world_tag, self.params, tuple(triples),
                       tuple(self.diagnostics), self.file, self.func.return_type.kind)

    def _clean_post(self, cur: SymbolicState) -> SymbolicState:
        return gc_state(strip_worlds(drop_vars(cur, self.locals)))

    def finish(self, exit_, es: ExecState, err: Optional[ErrInfo], roots) -> List[Triple]:
        pre = normalize(es.pre)
        code = self.func.name
        if exit_ == ERR:
            err = replace(err, latent=is_latent(pre, err.kind, err.resource))
            return [Triple(pre, code, ERR, self._clean_post(es.cur), err)]
        out = []
        cur = es.cur
        if MEMLEAK in self.catalog.kinds:
            ret = cur.var_value(RET)
            leak_roots = roots + ((ret,) if ret is not None else ())
            leaks = detect_leaks_at_exit(cur, leak_roots, MEMLEAK,
                                         only=lambda h: h in cur.existentials)
            if leaks:
                end = self.func.end.line if self.func.end.line else self.func.loc.line
                for lk in leaks:
                    edge = None
                    if lk.severed is not None:
                        edge = lk.severed.field or "*"
                    info = ErrInfo(MEMLEAK, lk.loc, self.entity.at(end), lk.blame, None, False,
                                   CallSite(code, "exit", self.file, end), "leak", edge)
                    out.append(Triple(pre, code, ERR, self._clean_post(cur), info))
                leaked = {a for lk in leaks for a in lk.cells}
                cur = normalize(replace(cur, heap=tuple(a for a in cur.heap if a not in leaked)))
        out.append(Triple(pre, code, OK, self._clean_post(cur)))
        return out


def _negate(lit):
    return lit.arg if isinstance(lit, Not) else Not(lit)


def _subst_term(t, m):
    if isinstance(t, LVar) and t in m:
        v = m[t]
        return v if not isinstance(v, Entity) else t
    return t


def _err_vars(err: Optional[ErrInfo]) -> set:
    if err is None:
        return set()
    out = set()
    if isinstance(err.resource, LVar):
        out.add(err.resource)
    if err.blame is not None:
        out |= {v for v in (err.blame.resource,) if isinstance(v, LVar)}
        if err.blame.entity.var is not None:
            out.add(err.blame.entity.var)
    return out


def _stamp(b: Blame, csite, idx, back) -> Blame:
    if b.entity.kind != VENDOR or b.entity.origin is not None:
        return b
    res = b.resource.name if isinstance(b.resource, LVar) else str(b.resource)
    origin = Origin(csite, idx, back.get(res, res))
    return replace(b, entity=replace(b.entity, origin=origin))


def _stamp_origin(s: SymbolicState, csite, idx, back) -> SymbolicState:
    heap = tuple(_stamp(a, csite, idx, back) if isinstance(a, Blame) else a for a in s.heap)
    sev = tuple(replace(x, blames=tuple(_stamp(b, csite, idx, back) for b in x.blames))
                for x in s.severed)
    return replace(s, heap=heap, severed=sev)


def _sticky(s: SymbolicState, vendor: Entity) -> SymbolicState:
    def fix(b):
        if isinstance(b, Blame) and b.entity.kind == CLIENT:
            return replace(b, entity=vendor)
        return b
    heap = tuple(fix(a) for a in s.heap)
    sev = tuple(replace(x, blames=tuple(fix(b) for b in x.blames)) for x in s.severed)
    return replace(s, heap=heap, severed=sev)


# -- program level ------------------------------------------------------------

@dataclass
class ProgramAnalysis:
    summaries: Dict[str, Summary]
    diagnostics: Tuple[str, ...] = ()
    trace: Optional[list] = None


def analyze_function(f: FuncDef, env: Dict[str, Summary], cfg: AnalysisConfig,
                     program: Optional[Program] = None, catalog: Optional[BugCatalog] = None,
                     fresh: Optional[FreshVars] = None, scc=(), trace=None) -> Summary:
    program = program or Program((), (f,))
    catalog = catalog or BugCatalog.from_config(cfg)
    fresh = fresh or FreshVars(cfg.seed)
    return FunctionAnalyzer(f, program, env, cfg, catalog, fresh, scc or (f.name,), trace).analyze()


def analyze_program(p: Program, cfg: Optional[AnalysisConfig] = None, trace=None) -> Dict[str, Summary]:
    return run_program(p, cfg, trace).summaries


def run_program(p: Program, cfg: Optional[AnalysisConfig] = None, trace=None) -> ProgramAnalysis:
    """Summarise every function of ``p`` in callee-first SCC order."""
    cfg = cfg or AnalysisConfig()
    catalog = BugCatalog.from_config(cfg)
    fresh = FreshVars(cfg.seed)
    graph = build_call_graph(p)
    env: Dict[str, Summary] = {}
    diags: List[str] = []
    for scc in graph.sccs:
        if len(scc) > 1 or scc[0] in graph.callees(scc[0]):
            diags.append(f"recursion among {', '.join(scc)}: recursive calls are skipped")
        for name in scc:
            f = p.function(name)
            try:
                s = FunctionAnalyzer(f, p, env, cfg, catalog, fresh, scc, trace).analyze()
            except Exception as e:  # keep going with the remaining functions
                diags.append(f"{name}: analysis failed: {type(e).__name__}: {e}")
                s = Summary(name, f.world_tag, f.param_names, (), (f"analysis failed: {e}",),
                            p.filename, f.return_type.kind)
            env[name] = s
            diags.extend(s.diagnostics)
    ordered = {f.name: env[f.name] for f in p.functions if f.name in env}
    return ProgramAnalysis(ordered, tuple(diags), trace)

"""Blame-carrying ISL assertions: terms, pure literals, spatial atoms, states, triples.

Everything here is an immutable value. ``normalize`` puts a state in canonical
form (flat, sorted, duplicate-free) and rejects heaps that violate separation.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple, Union


class CaptureError(Exception):
    pass


class SeparationViolation(Exception):
    pass


class UnsupportedAtom(Exception):
    pass


# -- terms ------------------------------------------------------------------

@dataclass(frozen=True)
class LVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class NilTerm:
    def __str__(self) -> str:
        return "nil"


NIL = NilTerm()
Term = Union[LVar, PVar, Const, NilTerm]


def term_key(t) -> tuple:
    if isinstance(t, NilTerm):
        return (0, 0, "")
    if isinstance(t, Const):
        return (1, t.value, "")
    if isinstance(t, PVar):
        return (2, 0, t.name)
    return (3, 0, t.name)


# -- pure formulas ----------------------------------------------------------

@dataclass(frozen=True)
class BoolLit:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = BoolLit(True)
FALSE = BoolLit(False)


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs}={self.rhs}"


@dataclass(frozen=True)
class Not:
    arg: "PureTerm"

    def __str__(self) -> str:
        if isinstance(self.arg, Eq):
            return f"{self.arg.lhs}!={self.arg.rhs}"
        return f"~({self.arg})"


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self) -> str:
        return " /\\ ".join(str(a) for a in self.args) or "true"


PureTerm = Union[BoolLit, Eq, Not, And]
Literal = Union[Eq, Not, BoolLit]


def Neq(a, b) -> Not:
    return Not(Eq(a, b))


def _eq(a, b) -> Eq:
    return Eq(a, b) if term_key(a) <= term_key(b) else Eq(b, a)


def _literal_key(lit) -> tuple:
    if isinstance(lit, BoolLit):
        return (0,)
    e = lit.arg if isinstance(lit, Not) else lit
    return (1 if isinstance(lit, Eq) else 2, term_key(e.lhs), term_key(e.rhs))


def _flatten(p, positive: bool, out: list) -> None:
    if isinstance(p, (tuple, list)):
        for q in p:
            _flatten(q, positive, out)
    elif isinstance(p, BoolLit):
        if p.value != positive:
            out.append(FALSE)
    elif isinstance(p, Eq):
        if p.lhs == p.rhs:
            if not positive:
                out.append(FALSE)
        else:
            e = _eq(p.lhs, p.rhs)
            out.append(e if positive else Not(e))
    elif isinstance(p, Not):
        _flatten(p.arg, not positive, out)
    elif isinstance(p, And):
        if not positive and len(p.args) > 1:
            raise UnsupportedAtom(f"negated conjunction {p}")
        for q in p.args:
            _flatten(q, positive, out)
    else:
        raise UnsupportedAtom(f"not a pure term: {p!r}")


def normalize_pure(p) -> Tuple[Literal, ...]:
    """Literal normal form: a sorted, duplicate-free tuple of Eq / Not(Eq) literals.

    An unsatisfiable-by-construction input collapses to ``(FALSE,)``.
    """
    out: list = []
    _flatten(p, True, out)
    if FALSE in out:
        return (FALSE,)
    return tuple(sorted(set(out), key=_literal_key))


def conj(literals: Iterable) -> PureTerm:
    lits = normalize_pure(tuple(literals))
    if not lits:
        return TRUE
    return lits[0] if len(lits) == 1 else And(lits)


def literal_terms(lit) -> Tuple[Term, ...]:
    if isinstance(lit, BoolLit):
        return ()
    e = lit.arg if isinstance(lit, Not) else lit
    return (e.lhs, e.rhs)


# -- bug kinds, sanitisation, entities -------------------------------------

NPD, MEMLEAK, UAF = "NPD", "MemLeak", "UAF"
BUG_KINDS = (NPD, MEMLEAK, UAF)
PLUS, MINUS = "+", "-"
STOP, NOLEAK = "stop", "noLeak"
FLOW_SIGN = {NPD: PLUS, MEMLEAK: MINUS, UAF: PLUS}

CLIENT, VENDOR, UNKNOWN = "Client", "Vendor", "Unknown"


@dataclass(frozen=True)
class BugApp:
    """Instantiated bug predicate P(X)."""
    ref: str
    arg: Term

    def __str__(self) -> str:
        return f"{self.ref}({self.arg})"


@dataclass(frozen=True)
class Sanitization:
    template: str
    path: tuple = ()
    sign: str = PLUS

    def __str__(self) -> str:
        guard = " /\\ ".join(str(l) for l in self.path) or "true"
        return f"{guard}?{self.template}[{self.sign}]"


@dataclass(frozen=True)
class CallSite:
    caller: str
    callee: str
    file: str
    line: int
    col: int = 0
    offset: int = 0
    end: int = 0

    def __str__(self) -> str:
        return f"{self.caller}->{self.callee}@{self.file}:{self.line}"


@dataclass(frozen=True)
class Origin:
    """Where a vendor-held blame crossed into client code.

    ``resource`` names the logical variable in the callee's own triple
    ``triple_index`` that the blame was attached to.
    """
    call: CallSite
    triple_index: int
    resource: str

    def __str__(self) -> str:
        return f"{self.call}#{self.triple_index}:{self.resource}"


@dataclass(frozen=True)
class Entity:
    kind: str
    var: Optional[LVar] = None
    file: Optional[str] = None
    function: Optional[str] = None
    line: Optional[int] = None
    origin: Optional[Origin] = None

    def __post_init__(self):
        if self.kind == UNKNOWN and self.var is None:
            raise ValueError("Unknown entity needs a logical variable")
        if self.kind not in (CLIENT, VENDOR, UNKNOWN):
            raise ValueError(f"bad entity kind {self.kind!r}")

    @property
    def known(self) -> bool:
        return self.kind != UNKNOWN

    def at(self, line: Optional[int]) -> "Entity":
        return replace(self, line=line)

    def __str__(self) -> str:
        if self.kind == UNKNOWN:
            return str(self.var)
        where = f"{self.function}:{self.line}" if self.function else ""
        via = f" via {self.origin}" if self.origin else ""
        return f"{self.kind}@{where}{via}" if where else f"{self.kind}{via}"


def unknown_entity(var: LVar) -> Entity:
    return Entity(UNKNOWN, var)


# -- spatial atoms ----------------------------------------------------------

@dataclass(frozen=True)
class PointsToVar:
    var: str
    value: Term

    def __str__(self) -> str:
        return f"{self.var}|->{self.value}"


@dataclass(frozen=True)
class PointsToLoc:
    loc: Term
    value: Term

    def __str__(self) -> str:
        return f"{self.loc}|->{self.value}"


@dataclass(frozen=True)
class PointsToField:
    loc: Term
    field: str
    value: Term

    def __str__(self) -> str:
        return f"{self.loc}.{self.field}|->{self.value}"


@dataclass(frozen=True)
class Invalid:
    loc: Term

    def __str__(self) -> str:
        return f"{self.loc}!"


@dataclass(frozen=True)
class Blame:
    resource: Term
    entity: Entity
    bug: object  # BugApp or a raw SymbolicState
    san: Optional[Sanitization] = None
    ctx: Optional[str] = None

    @property
    def ref(self) -> str:
        return self.bug.ref if isinstance(self.bug, BugApp) else "raw"

    def __str__(self) -> str:
        san = str(self.san) if self.san else "_"
        return f"Blame({self.resource}, {self.entity}, {self.bug}, {san}, {self.ctx or '_'})"


@dataclass(frozen=True)
class World:
    entity: Entity
    bug_ref: str
    san: Optional[Sanitization] = None
    ctx: Optional[str] = None

    def __str__(self) -> str:
        san = str(self.san) if self.san else "_"
        return f"World({self.entity}, {self.bug_ref}, {san}, {self.ctx or '_'})"


Atom = Union[PointsToVar, PointsToLoc, PointsToField, Invalid, Blame, World]
EMP: Tuple[Atom, ...] = ()
_RANK = {PointsToVar: 0, PointsToLoc: 1, PointsToField: 2, Invalid: 3, Blame: 4, World: 5}


def SepConj(*parts) -> Tuple[Atom, ...]:
    out: list = []
    for p in parts:
        if isinstance(p, (tuple, list)):
            out.extend(SepConj(*p))
        elif p is not None:
            out.append(p)
    return tuple(out)


def atom_key(a) -> tuple:
    return (_RANK[type(a)], str(a))


def sep_key(a):
    """Ownership key: two atoms with the same key may not coexist."""
    if isinstance(a, PointsToVar):
        return ("var", a.var)
    if isinstance(a, PointsToLoc):
        return ("cell", a.loc, None)
    if isinstance(a, PointsToField):
        return ("cell", a.loc, a.field)
    if isinstance(a, Invalid):
        return ("invalid", a.loc)
    if isinstance(a, Blame):
        return ("blame", a.resource, a.ref)
    return ("world", a.bug_ref)


def head(a) -> Optional[Term]:
    """Logical location an atom describes (None for variable and World atoms)."""
    if isinstance(a, (PointsToLoc, PointsToField, Invalid)):
        return a.loc
    if isinstance(a, Blame):
        return a.resource
    return None


def is_cell(a) -> bool:
    return isinstance(a, (PointsToLoc, PointsToField, Invalid))


# -- states and triples -----------------------------------------------------

@dataclass(frozen=True)
class Severed:
    """A heap edge dropped because its base was freed or overwritten."""
    base: Term
    field: Optional[str]
    target: Term
    blames: tuple = ()


@dataclass(frozen=True)
class SymbolicState:
    heap: Tuple[Atom, ...] = ()
    pure: Tuple[Literal, ...] = ()
    path: Tuple[Literal, ...] = ()
    existentials: FrozenSet[LVar] = frozenset()
    severed: Tuple[Severed, ...] = field(default=(), compare=False)

    def __str__(self) -> str:
        return render_state(self)

    def atoms(self, kind) -> Tuple[Atom, ...]:
        return tuple(a for a in self.heap if isinstance(a, kind))

    def var_value(self, name: str) -> Optional[Term]:
        for a in self.heap:
            if isinstance(a, PointsToVar) and a.var == name:
                return a.value
        return None

    def blame_for(self, resource, ref: str) -> Optional[Blame]:
        for a in self.heap:
            if isinstance(a, Blame) and a.resource == resource and a.ref == ref:
                return a
        return None

    def with_heap(self, heap) -> "SymbolicState":
        return replace(self, heap=tuple(heap))


def state(*atoms, pure=(), path=(), existentials=()) -> SymbolicState:
    """Convenience constructor; result is normalized."""
    return normalize(SymbolicState(SepConj(*atoms), normalize_pure(pure),
                                   normalize_pure(path), frozenset(existentials)))


OK = "ok"
ERR = "err"


@dataclass(frozen=True)
class ErrInfo:
    kind: str
    resource: Optional[Term]
    world: Entity
    blame: Optional[Blame] = None
    vendor_call: Optional[CallSite] = None
    latent: bool = False
    site: Optional[CallSite] = None
    fault: Optional[str] = None  # name of the faulting rule
    edge: Optional[str] = None  # for leaks: field (or "*") of the severed edge
    vendor_triple: Optional[int] = None  # index of the vendor callee's triple behind vendor_call


@dataclass(frozen=True)
class Triple:
    pre: SymbolicState
    code: str
    exit: str
    post: SymbolicState
    err: Optional[ErrInfo] = None

    @property
    def world(self) -> Optional[Entity]:
        return self.err.world if self.err else None

    @property
    def is_err(self) -> bool:
        return self.exit == ERR

    def __str__(self) -> str:
        if self.exit == OK:
            tag = "ok"
        else:
            tag = f"{self.err.world.kind}:err" if self.err else "err"
        return f"[{render_state(self.pre)}] {self.code} [{tag}: {render_state(self.post)}]"


# -- rendering --------------------------------------------------------------

def render_pure(lits) -> str:
    return " /\\ ".join(str(l) for l in lits)


def render_state(s: SymbolicState) -> str:
    body = " * ".join(str(a) for a in s.heap) or "emp"
    if s.pure:
        body += " /\\ " + render_pure(s.pure)
    if s.existentials:
        names = ",".join(sorted(v.name for v in s.existentials))
        body = f"exists {names}. {body}"
    if s.path:
        body = f"({render_pure(s.path)}; {body})"
    return body


# -- variables --------------------------------------------------------------

def _term_vars(t, out: set) -> None:
    if isinstance(t, LVar):
        out.add(t)


def atom_vars(a, entities: bool = True) -> set:
    out: set = set()
    if isinstance(a, PointsToVar):
        _term_vars(a.value, out)
    elif isinstance(a, (PointsToLoc, PointsToField)):
        _term_vars(a.loc, out)
        _term_vars(a.value, out)
    elif isinstance(a, Invalid):
        _term_vars(a.loc, out)
    elif isinstance(a, Blame):
        _term_vars(a.resource, out)
        if isinstance(a.bug, BugApp):
            _term_vars(a.bug.arg, out)
        if entities and a.entity.var is not None:
            out.add(a.entity.var)
        if a.san:
            for lit in a.san.path:
                for t in literal_terms(lit):
                    _term_vars(t, out)
    elif isinstance(a, World):
        if entities and a.entity.var is not None:
            out.add(a.entity.var)
    return out


def pure_vars(lits) -> set:
    out: set = set()
    for lit in lits:
        for t in literal_terms(lit):
            _term_vars(t, out)
    return out


def state_vars(s: SymbolicState, path: bool = True) -> set:
    out = pure_vars(s.pure)
    if path:
        out |= pure_vars(s.path)
    for a in s.heap:
        out |= atom_vars(a)
    return out


# -- substitution -----------------------------------------------------------

Mapping_ = Mapping[LVar, object]


def _sub_term(t, m: Mapping_):
    if isinstance(t, LVar) and t in m:
        v = m[t]
        if isinstance(v, Entity):
            raise TypeError(f"{t} is an entity variable")
        return v
    return t


def _sub_entity(e: Entity, m: Mapping_) -> Entity:
    if e.var is not None and e.var in m:
        v = m[e.var]
        if isinstance(v, Entity):
            return v
        if isinstance(v, LVar):
            return replace(e, var=v)
    return e


def _sub_lits(lits, m: Mapping_) -> tuple:
    out = []
    for lit in lits:
        if isinstance(lit, Eq):
            out.append(Eq(_sub_term(lit.lhs, m), _sub_term(lit.rhs, m)))
        elif isinstance(lit, Not):
            e = lit.arg
            out.append(Not(Eq(_sub_term(e.lhs, m), _sub_term(e.rhs, m))))
        else:
            out.append(lit)
    return tuple(out)


def subst_atom(a, m: Mapping_):
    if isinstance(a, PointsToVar):
        return PointsToVar(a.var, _sub_term(a.value, m))
    if isinstance(a, PointsToLoc):
        return PointsToLoc(_sub_term(a.loc, m), _sub_term(a.value, m))
    if isinstance(a, PointsToField):
        return PointsToField(_sub_term(a.loc, m), a.field, _sub_term(a.value, m))
    if isinstance(a, Invalid):
        return Invalid(_sub_term(a.loc, m))
    if isinstance(a, Blame):
        bug = a.bug
        if isinstance(bug, BugApp):
            bug = BugApp(bug.ref, _sub_term(bug.arg, m))
        san = a.san
        if san is not None and san.path:
            san = replace(san, path=normalize_pure(_sub_lits(san.path, m)))
        return Blame(_sub_term(a.resource, m), _sub_entity(a.entity, m), bug, san, a.ctx)
    if isinstance(a, World):
        return World(_sub_entity(a.entity, m), a.bug_ref, a.san, a.ctx)
    raise UnsupportedAtom(repr(a))


def _sub_severed(s: Severed, m: Mapping_) -> Severed:
    return Severed(_sub_term(s.base, m), s.field, _sub_term(s.target, m),
                   tuple(subst_atom(b, m) for b in s.blames))


def _subst(s: SymbolicState, m: Mapping_, do_normalize: bool = True) -> SymbolicState:
    """Unchecked simultaneous substitution (may touch existentials)."""
    if not m:
        return s
    ex = set()
    for v in s.existentials:
        t = m.get(v, v)
        if isinstance(t, LVar):
            ex.add(t)
    out = SymbolicState(
        tuple(subst_atom(a, m) for a in s.heap),
        normalize_pure(_sub_lits(s.pure, m)),
        normalize_pure(_sub_lits(s.path, m)),
        frozenset(ex),
        tuple(_sub_severed(x, m) for x in s.severed),
    )
    return normalize(out) if do_normalize else out


def substitute(s: SymbolicState, mapping: Mapping_) -> SymbolicState:
    """Capture-avoiding substitution of free logical variables."""
    for k, v in mapping.items():
        if k in s.existentials:
            raise CaptureError(f"{k} is bound in {render_state(s)}")
        if isinstance(v, LVar) and v in s.existentials:
            raise CaptureError(f"target {v} collides with a bound variable")
    return _subst(s, mapping)


# -- normalization ----------------------------------------------------------

def normalize_heap(atoms) -> Tuple[Atom, ...]:
    flat = SepConj(atoms)
    seen: Dict[object, Atom] = {}
    invalid: set = set()
    cell_heads: set = set()
    for a in flat:
        k = sep_key(a)
        if k in seen:
            raise SeparationViolation(f"{a} overlaps {seen[k]}")
        seen[k] = a
        if isinstance(a, Invalid):
            invalid.add(a.loc)
        elif isinstance(a, (PointsToLoc, PointsToField)):
            cell_heads.add(a.loc)
    clash = invalid & cell_heads
    if clash:
        raise SeparationViolation(f"{sorted(map(str, clash))[0]} is both freed and owned")
    return tuple(sorted(flat, key=atom_key))


def normalize(s: SymbolicState) -> SymbolicState:
    heap = normalize_heap(s.heap)
    pure = normalize_pure(s.pure)
    path = normalize_pure(s.path)
    tmp = SymbolicState(heap, pure, path)
    live = state_vars(tmp)
    ex = frozenset(v for v in s.existentials if v in live)
    sev = tuple(dict.fromkeys(s.severed))  # keep order: latest severing last
    return SymbolicState(heap, pure, path, ex, sev)


def star(a: SymbolicState, b: SymbolicState) -> SymbolicState:
    """Separating conjunction of two states (pure parts and paths conjoined)."""
    return normalize(SymbolicState(
        a.heap + b.heap, a.pure + b.pure, a.path + b.path,
        a.existentials | b.existentials, a.severed + b.severed))


# -- fresh names ------------------------------------------------------------

def _env_seed() -> int:
    try:
        return int(os.environ.get("SILC_SEED", "0"))
    except ValueError:
        return 0


class FreshVars:
    """Deterministic supply of logical variable names: hint followed by a counter."""

    def __init__(self, seed: Optional[int] = None):
        self.seed = _env_seed() if seed is None else seed
        self.counter = self.seed
        self.reserved: set = set()

    def reserve(self, names: Iterable[str]) -> None:
        self.reserved.update(names)

    def __call__(self, hint: str = "V") -> LVar:
        hint = hint.rstrip("0123456789") or "V"
        while True:
            self.counter += 1
            name = f"{hint}{self.counter}"
            if name not in self.reserved:
                self.reserved.add(name)
                return LVar(name)


_supply = FreshVars()


def fresh_var(hint: str = "V") -> LVar:
    return _supply(hint)


def reset_fresh(seed: Optional[int] = None) -> FreshVars:
    global _supply
    _supply = FreshVars(seed)
    return _supply


def current_supply() -> FreshVars:
    return _supply


def rename_fresh(s: SymbolicState, keep: Iterable[LVar] = (), supply=None) -> Tuple[SymbolicState, Dict]:
    supply = supply or _supply
    keep = set(keep)
    m = {v: supply(v.name) for v in sorted(state_vars(s), key=lambda v: v.name) if v not in keep}
    return _subst(s, m), m

"""Satisfiability of equality/disequality conjunctions over variables, ints and nil.

The fragment has no function symbols, so union-find plus a disequality set is
a complete decision procedure.
"""
from __future__ import annotations

from typing import Dict, List, Tuple

from .isl import (
    FALSE, BoolLit, Const, Eq, Invalid, NilTerm, Not, PointsToField, PointsToLoc,
    SymbolicState, NIL, UnsupportedAtom, normalize_pure,
)


def _is_const(t) -> bool:
    return isinstance(t, (Const, NilTerm))


class CongruenceState:
    def __init__(self):
        self.parent: Dict[object, object] = {}
        self.const: Dict[object, object] = {}
        self.diseq: List[Tuple[object, object]] = []
        self.unsat = False

    def find(self, t):
        p = self.parent.setdefault(t, t)
        if _is_const(t):
            self.const.setdefault(t, t)
        if p is t or p == t:
            return t
        root = self.find(p)
        self.parent[t] = root
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        ca, cb = self.const.get(ra), self.const.get(rb)
        if ca is not None and cb is not None and ca != cb:
            self.unsat = True
            return
        self.parent[ra] = rb
        if ca is not None:
            self.const[rb] = ca

    def add(self, lit) -> None:
        if isinstance(lit, BoolLit):
            if not lit.value:
                self.unsat = True
        elif isinstance(lit, Eq):
            self.union(lit.lhs, lit.rhs)
        elif isinstance(lit, Not) and isinstance(lit.arg, Eq):
            self.find(lit.arg.lhs)
            self.find(lit.arg.rhs)
            self.diseq.append((lit.arg.lhs, lit.arg.rhs))
        else:
            raise UnsupportedAtom(f"not a literal: {lit!r}")

    def are_equal(self, a, b) -> bool:
        if a == b:
            return True
        return self.find(a) == self.find(b)

    def are_distinct(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        ca, cb = self.const.get(ra), self.const.get(rb)
        if ca is not None and cb is not None:
            return True
        return any({self.find(x), self.find(y)} == {ra, rb} for x, y in self.diseq)

    def satisfiable(self) -> bool:
        if self.unsat:
            return False
        return not any(self.find(x) == self.find(y) for x, y in self.diseq)

    def representative(self, t):
        """Constant of t's class if it has one, else the class root."""
        r = self.find(t)
        return self.const.get(r, r)


def _literals(pi) -> tuple:
    if isinstance(pi, tuple) and all(isinstance(l, (Eq, Not, BoolLit)) for l in pi):
        for l in pi:
            if isinstance(l, Not) and not isinstance(l.arg, Eq):
                raise UnsupportedAtom(f"not a literal: {l}")
        return pi
    return normalize_pure(pi)


def solver_for(*pures) -> CongruenceState:
    cs = CongruenceState()
    for pi in pures:
        for lit in _literals(pi):
            cs.add(lit)
    return cs


def is_satisfiable(pi) -> bool:
    """True iff the conjunction of literals in ``pi`` has a model."""
    return solver_for(pi).satisfiable()


def entails_pure(pi1, pi2) -> bool:
    """pi1 |= pi2, decided literal by literal."""
    base = _literals(pi1)
    for lit in _literals(pi2):
        if isinstance(lit, BoolLit):
            neg = () if not lit.value else (FALSE,)
        elif isinstance(lit, Eq):
            neg = (Not(lit),)
        else:
            neg = (lit.arg,)
        if is_satisfiable(base + tuple(neg)):
            return False
    return True


def spatial_facts(heap) -> tuple:
    """Pure consequences of a heap: owned locations are non-nil, and cells that
    would overlap if their heads were equal have distinct heads.

    Blame atoms contribute nothing: distinct nil-valued resources may coincide.
    """
    lits = []
    cells = []
    for a in heap:
        if isinstance(a, (PointsToLoc, PointsToField, Invalid)):
            lits.append(FALSE if isinstance(a.loc, NilTerm) else Not(Eq(NIL, a.loc)))
            tag = a.field if isinstance(a, PointsToField) else None
            cells.append((a.loc, tag, isinstance(a, Invalid)))
    for i, (h1, f1, inv1) in enumerate(cells):
        for h2, f2, inv2 in cells[i + 1:]:
            # distinct fields of one block may share a base
            if not inv1 and not inv2 and f1 != f2:
                continue
            lits.append(FALSE if h1 == h2 else Not(Eq(h1, h2)))
    return tuple(lits)


def state_satisfiable(s: SymbolicState, spatial: bool = True) -> bool:
    extra = spatial_facts(s.heap) if spatial else ()
    return solver_for(s.pure, s.path, normalize_pure(extra)).satisfiable()

"""Predefined blame-carrying triples for the primitive statements.

Rules are instantiated per statement: the engine resolves the program
variables involved to the logical terms they hold in the current state, and
the rule is stated over those terms. World atoms are persistent, so rule
preconditions list them for documentation but the engine reads the world from
the state instead of matching it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from ..isl import (
    ERR, NIL, OK, NPD, UAF, Blame, BugApp, Eq, Invalid, LVar, PointsToField,
    PointsToLoc, SymbolicState, Triple, World, normalize, normalize_pure,
    unknown_entity,
)


@dataclass(frozen=True)
class Rule:
    name: str
    exit: str
    pre: SymbolicState
    post: SymbolicState
    kind: Optional[str] = None  # bug kind for err rules
    resource: object = None  # the dereferenced / freed / allocated term
    shifts: Tuple[object, ...] = ()  # resources whose blame moves to the world
    fresh: Tuple[LVar, ...] = ()  # schematic variables not fixed by the statement

    def triple(self, worlds: Sequence[World] = ()) -> Triple:
        pre = normalize(SymbolicState(self.pre.heap + tuple(worlds), self.pre.pure))
        post = normalize(SymbolicState(self.post.heap + tuple(worlds), self.post.pure,
                                       existentials=self.post.existentials))
        return Triple(pre, self.name, self.exit, post)


def world_blames(resource, worlds: Sequence[World], line: Optional[int]) -> Tuple[Blame, ...]:
    """One Blame per world, held by that world's entity at ``line``."""
    return tuple(Blame(resource, w.entity.at(line), BugApp(w.bug_ref, resource), w.san, w.ctx)
                 for w in worlds)


def unknown_blames(resource, worlds: Sequence[World], fresh) -> Tuple[Blame, ...]:
    return tuple(Blame(resource, unknown_entity(fresh("W")), BugApp(w.bug_ref, resource))
                 for w in worlds)


class RuleTable:
    """Factory for the predefined triples, parametrised by the enabled worlds."""

    def __init__(self, worlds: Sequence[World], fresh):
        self.worlds = tuple(worlds)
        self.fresh = fresh

    def _cell(self, loc, value, fld):
        return PointsToLoc(loc, value) if fld is None else PointsToField(loc, fld, value)

    def errors(self, op: str, x) -> Tuple[Rule, ...]:
        """The nil and dangling error triples for dereferencing ``x``."""
        npd = SymbolicState(pure=normalize_pure(Eq(x, NIL)))
        uaf = normalize(SymbolicState((Invalid(x),)))
        return (Rule(f"{op}.err.nil", ERR, npd, npd, NPD, x),
                Rule(f"{op}.err.dangling", ERR, uaf, uaf, UAF, x))

    def access(self, op: str, x, line, fld: Optional[str] = None, new_value=None) -> Tuple[Rule, ...]:
        """Load or store through ``x`` (optionally a field of it).

        ok: [X|->V * Blame(X, W, P(X))] op [X|->V' * Blame(X, E, P(X), S, C)]
        where V' is ``new_value`` for stores and V for loads.
        """
        v = self.fresh("V")
        pre = normalize(SymbolicState((self._cell(x, v, fld),) + unknown_blames(x, self.worlds, self.fresh)))
        out = v if new_value is None else new_value
        post = normalize(SymbolicState((self._cell(x, out, fld),) + world_blames(x, self.worlds, line)))
        ok = Rule(f"{op}.ok", OK, pre, post, None, x, (x,), (v,))
        return (ok,) + self.errors(op, x)

    def free(self, x, line) -> Tuple[Rule, ...]:
        v = self.fresh("V")
        pre = normalize(SymbolicState((PointsToLoc(x, v),) + unknown_blames(x, self.worlds, self.fresh)))
        post = normalize(SymbolicState((Invalid(x),) + world_blames(x, self.worlds, line)))
        return (Rule("free.ok", OK, pre, post, None, x, (x,), (v,)),) + self.errors("free", x)

    def malloc(self, line) -> Tuple[Rule, ...]:
        loc, val = self.fresh("L"), self.fresh("V")
        cell = normalize(SymbolicState(
            (PointsToLoc(loc, val),) + world_blames(loc, self.worlds, line)
            + world_blames(val, self.worlds, line),
            existentials=frozenset({loc, val})))
        loc2 = self.fresh("L")
        nil = normalize(SymbolicState(world_blames(loc2, self.worlds, line),
                                      normalize_pure(Eq(loc2, NIL)), existentials=frozenset({loc2})))
        empty = SymbolicState()
        return (Rule("malloc.ok", OK, empty, cell, None, loc, (), (loc, val)),
                Rule("malloc.ok.nil", OK, empty, nil, None, loc2, (), (loc2,)))

    def copy(self, src, dst, line) -> Tuple[Rule, ...]:
        """memcpy: both cells dereferenced, destination takes the source content."""
        if src == dst:
            return self.access("memcpy", src, line)
        vs, vd = self.fresh("V"), self.fresh("V")
        pre = normalize(SymbolicState(
            (PointsToLoc(src, vs), PointsToLoc(dst, vd))
            + unknown_blames(src, self.worlds, self.fresh) + unknown_blames(dst, self.worlds, self.fresh)))
        post = normalize(SymbolicState(
            (PointsToLoc(src, vs), PointsToLoc(dst, vs))
            + world_blames(src, self.worlds, line) + world_blames(dst, self.worlds, line)))
        return (Rule("memcpy.ok", OK, pre, post, None, dst, (dst, src), (vs, vd)),) \
            + self.errors("memcpy", dst) + self.errors("memcpy", src)


"""Exhaustive grid of (current, required) state pairs for the biabduction check.

Current states use program variables x, y and at most two cells over X, Y;
required states use x, z and at most one cell, so p * m never needs more than
three cells and three program variables.
"""
import itertools
from dataclasses import dataclass, field
from typing import List

from oracles import compatible, oracle_entails
from silc.biabduction import Inconsistent, biabduce
from silc.isl import (
    NIL, Eq, Invalid, LVar, Not, PointsToLoc, PointsToVar, SeparationViolation, SymbolicState,
    normalize, normalize_pure, star,
)

X, Y, Z, W = LVar("X"), LVar("Y"), LVar("Z"), LVar("W")


def _states(pvars, lvars, cells, max_cells, pures):
    choices = [[None] + [PointsToVar(x, v) for v in lvars] for x in pvars]
    for vs in itertools.product(*choices):
        vs = tuple(a for a in vs if a)
        for k in range(max_cells + 1):
            for cs in itertools.combinations(cells, k):
                for pu in pures:
                    try:
                        yield normalize(SymbolicState(vs + cs, normalize_pure(pu)))
                    except SeparationViolation:
                        continue


def current_states():
    cells = [PointsToLoc(X, Y), PointsToLoc(Y, NIL), PointsToLoc(X, NIL), Invalid(X), Invalid(Y)]
    return list(_states(["x", "y"], [X, Y], cells, 2, [(), (Eq(X, NIL),), (Not(Eq(X, Y)),)]))


def required_states():
    cells = [PointsToLoc(Z, W), PointsToLoc(X, W), Invalid(Z), PointsToLoc(Z, NIL)]
    return list(_states(["x", "z"], [X, Z], cells, 1, [(), (Eq(W, NIL),), (Not(Eq(Z, NIL)),)]))


@dataclass
class GridResult:
    pairs: int = 0
    solved: int = 0
    unsound: List[tuple] = field(default_factory=list)
    incomplete: List[tuple] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(self.unsound) + len(self.incomplete)


def run_grid(ps=None, qs=None) -> GridResult:
    ps = current_states() if ps is None else ps
    qs = required_states() if qs is None else qs
    out = GridResult()
    for p in ps:
        for q in qs:
            out.pairs += 1
            try:
                r = biabduce(p, q)
            except Inconsistent:
                if compatible(p, q):
                    out.incomplete.append((p, q))
                continue
            out.solved += 1
            if not oracle_entails(star(p, r.missing), star(r.required, r.frame)):
                out.unsound.append((p, q, r))
    return out

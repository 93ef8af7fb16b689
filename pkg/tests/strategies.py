"""Hypothesis strategies for terms, literals and small symbolic states."""
import random

from hypothesis import strategies as st

from silc.isl import (
    NIL, Const, Eq, Invalid, LVar, Not, PointsToField, PointsToLoc, PointsToVar,
    SeparationViolation, SymbolicState, normalize, normalize_pure,
)

LVARS = [LVar(n) for n in ("X", "Y", "Z", "U")]


def terms(nvars=4, consts=(NIL,)):
    return st.sampled_from(LVARS[:nvars] + list(consts))


def literals(nvars=4, consts=(NIL,)):
    eq = st.builds(Eq, terms(nvars, consts), terms(nvars, consts))
    return st.one_of(eq, eq.map(Not))


def conjunctions(nvars=4, consts=(NIL,), max_size=6):
    return st.lists(literals(nvars, consts), max_size=max_size).map(tuple)


@st.composite
def states(draw, max_cells=3):
    """Normalized states over x, y, z and logical X, Y, Z."""
    lv = st.sampled_from(LVARS[:3])
    vals = st.one_of(lv, st.just(NIL))
    atoms = []
    for x in draw(st.lists(st.sampled_from("xyz"), unique=True, max_size=3)):
        atoms.append(PointsToVar(x, draw(vals)))
    cell = st.one_of(st.builds(PointsToLoc, lv, vals),
                     st.builds(PointsToField, lv, st.sampled_from(["f", "g"]), vals),
                     st.builds(Invalid, lv))
    atoms += draw(st.lists(cell, max_size=max_cells))
    pure = draw(conjunctions(3, max_size=2))
    try:
        return normalize(SymbolicState(tuple(atoms), normalize_pure(pure)))
    except SeparationViolation:
        return normalize(SymbolicState(tuple(a for a in atoms if isinstance(a, PointsToVar)),
                                       normalize_pure(pure)))


def universe_values(consts):
    """A 5-value universe holding the constants, padded with opaque addresses."""
    vals = ["nil" if c == NIL else ("int", c.value) for c in consts]
    pad = ["a", "b", "c", "d", "e"]
    return vals + pad[:5 - len(vals)]


CONST_SETS = {"nil": (NIL,), "nil0": (NIL, Const(0))}


def sample_conjunction(rng: random.Random):
    """Plain random draw: ≤6 literals, ≤4 variables with nil or ≤3 with {nil, 0}."""
    key = rng.choice(sorted(CONST_SETS))
    consts = CONST_SETS[key]
    nvars = 4 if key == "nil" else 3
    pool = [LVar(n) for n in "XYZU"[:rng.randint(1, nvars)]] + list(consts)
    out = []
    for _ in range(rng.randint(0, 6)):
        a, b = rng.choice(pool), rng.choice(pool)
        out.append(Eq(a, b) if rng.random() < 0.5 else Not(Eq(a, b)))
    return tuple(out), universe_values(consts)

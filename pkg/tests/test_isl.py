import pytest
from hypothesis import given, settings

from strategies import states
from silc.isl import (
    NIL, Blame, BugApp, CaptureError, Entity, Eq, FreshVars, Invalid, LVar, Not,
    PointsToField, PointsToLoc, PointsToVar, Sanitization, SeparationViolation, SymbolicState,
    Triple, World, normalize, normalize_pure, render_state, state, state_vars, substitute,
)

X, Y, L, V = LVar("X"), LVar("Y"), LVar("L"), LVar("V")
VENDOR = Entity("Vendor", None, "v.mc", "set", 1)


def test_substitute_renames():
    s = state(PointsToVar("x", X), pure=[Eq(X, NIL)])
    assert substitute(s, {X: L}) == state(PointsToVar("x", L), pure=[Eq(L, NIL)])


def test_substitute_refuses_to_capture():
    s = state(PointsToVar("x", L), existentials=[L])
    with pytest.raises(CaptureError):
        substitute(s, {L: Y})
    with pytest.raises(CaptureError):
        substitute(state(PointsToVar("x", X), PointsToVar("y", L), existentials=[L]), {X: L})


def test_substitute_reaches_blame_arguments():
    san = Sanitization("stop", (Not(Eq(X, NIL)),), "+")
    b = Blame(X, VENDOR, BugApp("NPD", X), san, "set")
    got = substitute(state(b), {X: L})
    (a,) = got.heap
    assert a.resource == L and a.bug == BugApp("NPD", L)
    assert a.san.path == normalize_pure(Not(Eq(L, NIL)))
    assert a.entity == VENDOR and a.ctx == "set"


def test_substitute_renames_unknown_entities():
    w = LVar("W")
    b = Blame(X, Entity("Unknown", w), BugApp("UAF", X))
    (a,) = substitute(state(b), {w: V}).heap
    assert a.entity.var == V


def test_emp_is_unit():
    assert normalize(SymbolicState((PointsToVar("x", X),))) == state(PointsToVar("x", X))
    assert state() == SymbolicState()


@pytest.mark.parametrize("atoms", [
    (PointsToVar("x", X), PointsToVar("x", Y)),
    (PointsToLoc(X, Y), PointsToLoc(X, NIL)),
    (PointsToLoc(X, Y), Invalid(X)),
    (PointsToField(X, "f", Y), Invalid(X)),
    (Invalid(X), Invalid(X)),
])
def test_separation_violations(atoms):
    with pytest.raises(SeparationViolation):
        normalize(SymbolicState(atoms))


def test_fields_of_one_block_coexist():
    s = state(PointsToField(X, "f", Y), PointsToField(X, "g", NIL))
    assert len(s.heap) == 2


def test_one_blame_per_resource_and_bug():
    b1 = Blame(X, VENDOR, BugApp("NPD", X))
    b2 = Blame(X, VENDOR.at(2), BugApp("NPD", X))
    with pytest.raises(SeparationViolation):
        state(b1, b2)
    state(b1, Blame(X, VENDOR, BugApp("UAF", X)))


def test_one_world_per_bug_ref():
    w = World(VENDOR, "NPD")
    with pytest.raises(SeparationViolation):
        state(w, World(VENDOR.at(4), "NPD"))


def test_negation_normal_form():
    lits = normalize_pure(Not(Not(Eq(Y, X))))
    assert lits == (Eq(X, Y),)


def test_rendering():
    s = state(PointsToVar("x", X), PointsToField(X, "f", V), Invalid(Y), pure=[Not(Eq(Y, NIL))])
    assert render_state(s) == "x|->X * X.f|->V * Y! /\\ nil!=Y"
    t = Triple(s, "free(y)", "err", s, None)
    assert str(t).startswith("[x|->X")


@settings(max_examples=200, deadline=None)
@given(states())
def test_normalize_idempotent(s):
    assert normalize(normalize(s)) == normalize(s)


@settings(max_examples=100, deadline=None)
@given(states())
def test_substitution_round_trip(s):
    vs = sorted(state_vars(s), key=lambda v: v.name)
    there = {v: LVar(v.name + "_r") for v in vs}
    back = {LVar(v.name + "_r"): v for v in vs}
    assert substitute(substitute(s, there), back) == s


def test_fresh_names_are_distinct_and_replayable():
    a = FreshVars(0)
    names = [a("L"), a("L"), a("V")]
    assert names[0] == LVar("L1")
    assert len(set(names)) == 3
    b = FreshVars(0)
    assert [b("L"), b("L"), b("V")] == names


def test_fresh_names_skip_reserved():
    a = FreshVars(0)
    a.reserve(["L1"])
    assert a("L") == LVar("L2")

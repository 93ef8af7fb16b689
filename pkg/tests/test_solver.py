import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_satisfiable
from strategies import CONST_SETS, conjunctions, universe_values
from silc.isl import FALSE, NIL, TRUE, And, Const, Eq, LVar, Not, UnsupportedAtom, normalize_pure
from silc.solver import entails_pure, is_satisfiable, solver_for

X, Y, Z = LVar("X"), LVar("Y"), LVar("Z")


def lits(*xs):
    return normalize_pure(xs)


@pytest.mark.parametrize("pi, sat", [
    (lits(Eq(X, NIL), Not(Eq(X, NIL))), False),
    ((), True),
    (lits(TRUE), True),
    (lits(FALSE), False),
    (lits(Eq(X, Y), Eq(Y, NIL), Not(Eq(X, NIL))), False),
    (lits(Eq(X, Const(0)), Eq(X, Const(1))), False),
    (lits(Eq(X, Const(0)), Eq(Y, NIL), Not(Eq(X, Y))), True),
    (lits(Not(Eq(X, X))), False),
])
def test_is_satisfiable_examples(pi, sat):
    assert is_satisfiable(pi) is sat


def test_nil_differs_from_every_integer():
    assert not is_satisfiable(lits(Eq(X, NIL), Eq(X, Const(0))))


def test_entailment_examples():
    assert entails_pure(lits(Eq(X, NIL)), lits(Eq(X, NIL)))
    assert entails_pure(lits(Eq(X, Y), Eq(Y, NIL)), lits(Eq(X, NIL)))
    assert not entails_pure((), lits(Eq(X, NIL)))
    assert entails_pure(lits(Eq(X, NIL)), lits(Not(Eq(X, Const(3)))))


def test_representative_prefers_constants():
    cs = solver_for(lits(Eq(X, Y), Eq(Y, NIL)))
    assert cs.representative(X) == NIL
    assert cs.are_equal(X, Y) and cs.are_distinct(X, Const(1))


def test_rejects_non_literals():
    with pytest.raises(UnsupportedAtom):
        is_satisfiable((Not(And((Eq(X, Y), Eq(Y, Z)))),))


@settings(max_examples=400, deadline=None)
@given(st.sampled_from(sorted(CONST_SETS)).flatmap(
    lambda k: st.tuples(st.just(k), conjunctions(4 if k == "nil" else 3, CONST_SETS[k]))))
def test_agrees_with_brute_force(case):
    key, pi = case
    consts = CONST_SETS[key]
    assert is_satisfiable(pi) == brute_satisfiable(pi, universe_values(consts))


@settings(max_examples=200, deadline=None)
@given(conjunctions(4), conjunctions(4))
def test_monotone(p1, p2):
    if is_satisfiable(p1 + p2):
        assert is_satisfiable(p1)


@settings(max_examples=200, deadline=None)
@given(conjunctions(3), conjunctions(3, max_size=2))
def test_entailment_matches_semantics(p1, p2):
    vals = universe_values((NIL,))
    expect = not any(brute_satisfiable(p1 + (neg,), vals) for neg in _negations(p2))
    assert entails_pure(p1, p2) == expect


def _negations(pi):
    for lit in pi:
        yield lit.arg if isinstance(lit, Not) else Not(lit)


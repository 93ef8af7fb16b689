"""Entailment and biabduction over symbolic heaps.

Direction convention: ``entails(p, q)`` holds when every model of ``q`` is a
model of ``p``. Biabduction finds ``(m, f)`` with ``entails(p * m, q * f)``.

Both procedures match atoms syntactically up to the pure equalities known on
one side, unifying logical variables that occur on only one side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .isl import (
    UNKNOWN, Blame, BugApp, Entity, Eq, Invalid, LVar, PointsToField, PointsToLoc,
    PointsToVar, SeparationViolation, SymbolicState, World, _subst, atom_key,
    literal_terms, normalize, normalize_pure, sep_key, star, state_vars, subst_atom,
)
from .solver import entails_pure, solver_for, spatial_facts, state_satisfiable


class Inconsistent(Exception):
    """No matching makes the requirement compatible with the current state."""


class SearchExhausted(Inconsistent):
    """The matcher gave up before exploring every candidate."""


@dataclass(frozen=True)
class BiabductionResult:
    missing: SymbolicState
    frame: SymbolicState
    matched: Tuple[Tuple[object, object], ...]
    bindings: Dict = field(default_factory=dict, compare=False)
    required: Optional[SymbolicState] = None  # q with bindings and equalities applied


def _same_shape(qa, pa) -> bool:
    if type(qa) is not type(pa):
        return False
    if isinstance(qa, PointsToVar):
        return qa.var == pa.var
    if isinstance(qa, PointsToField):
        return qa.field == pa.field
    if isinstance(qa, Blame):
        return qa.ref == pa.ref
    if isinstance(qa, World):
        return qa.bug_ref == pa.bug_ref
    return True


def _head(a):
    if isinstance(a, PointsToVar):
        return None
    if isinstance(a, Blame):
        return a.resource
    if isinstance(a, World):
        return None
    return a.loc


def _values(a) -> tuple:
    if isinstance(a, (PointsToVar, PointsToLoc, PointsToField)):
        return (a.value,)
    if isinstance(a, Blame) and isinstance(a.bug, BugApp):
        return (a.bug.arg,)
    return ()


def _entity(a) -> Optional[Entity]:
    return a.entity if isinstance(a, (Blame, World)) else None


class _Matcher:
    """Depth-first search for a matching of ``q``'s atoms into ``p``'s.

    ``flexible`` are the variables of ``q`` that may be bound to terms of ``p``.
    When ``allow_missing`` is set, unmatched ``q`` atoms become missing
    resource; when ``allow_equalities`` is set, heads not known to differ may
    be unified by assuming an equality.
    """

    def __init__(self, p: SymbolicState, q: SymbolicState, flexible, allow_missing: bool,
                 allow_equalities: bool, solver_pure):
        self.p = p
        self.q = q
        self.flexible = set(flexible)
        self.allow_missing = allow_missing
        self.allow_equalities = allow_equalities
        self.solver_pure = solver_pure

    # term-level unification ------------------------------------------------

    def _unify_term(self, qt, pt, binds: dict, eqs: tuple):
        """Yield (binds, eqs, rank) extensions making qt and pt equal."""
        qt = binds.get(qt, qt) if isinstance(qt, LVar) else qt
        if isinstance(qt, LVar) and qt in self.flexible and qt not in binds:
            nb = dict(binds)
            nb[qt] = pt
            return [(nb, eqs, 1)]
        cs = solver_for(self.solver_pure, eqs)
        if cs.are_equal(qt, pt):
            return [(binds, eqs, 0)]
        if self.allow_equalities and not cs.are_distinct(qt, pt):
            return [(binds, eqs + (Eq(qt, pt),), 3)]
        return []

    def _unify_entity(self, qe: Entity, pe: Entity, binds: dict):
        if qe.kind == UNKNOWN:
            cur = binds.get(qe.var)
            if cur is None:
                if qe.var in self.flexible:
                    nb = dict(binds)
                    nb[qe.var] = pe
                    return nb
                return binds if pe.kind == UNKNOWN and pe.var == qe.var else None
            qe = cur if isinstance(cur, Entity) else Entity(UNKNOWN, cur)
            if qe.kind == UNKNOWN:
                return binds if pe == qe else None
        if pe.kind == UNKNOWN:
            return binds
        return binds if qe.kind == pe.kind else None

    def match_atom(self, qa, pa, binds: dict, eqs: tuple):
        """All ways of identifying q-atom ``qa`` with p-atom ``pa``, best first."""
        if not _same_shape(qa, pa):
            return []
        results = []
        qh, ph = _head(qa), _head(pa)
        heads = [(binds, eqs, 0)] if qh is None else self._unify_term(qh, ph, binds, eqs)
        for b, e, rank in heads:
            options = [(b, e)]
            for qv, pv in zip(_values(qa), _values(pa)):
                nxt = []
                for ob, oe in options:
                    nxt.extend((nb, ne) for nb, ne, _ in self._unify_term(qv, pv, ob, oe))
                options = nxt
            qe, pe = _entity(qa), _entity(pa)
            for ob, oe in options:
                if qe is not None:
                    ob = self._unify_entity(qe, pe, ob)
                    if ob is None:
                        continue
                results.append((rank, ob, oe))
        results.sort(key=lambda r: r[0])
        return results

    # search ----------------------------------------------------------------

    def _pick(self, remaining: List, binds: dict):
        def bound(a):
            h = _head(a)
            if h is None:
                return True
            return not (isinstance(h, LVar) and h in self.flexible and h not in binds)

        def key(a):
            return (0 if isinstance(a, PointsToVar) else 1 if bound(a) else 2, atom_key(a))
        return min(remaining, key=key)

    def _pure_ok(self, binds: dict, eqs: tuple) -> bool:
        """Prune: q's pure literals whose variables are all fixed must be consistent."""
        lits = []
        for lit in self.q_lits:
            vs = _lvars(lit)
            if any(v in self.flexible and v not in binds for v in vs):
                continue
            lits.append(lit)
        if not lits and not eqs:
            return True
        sub = _subst(SymbolicState(pure=tuple(lits)), binds, False).pure
        return solver_for(self.solver_pure, eqs, sub).satisfiable()

    def search(self, accept, budget: int = 20000):
        """Run the search, calling ``accept(binds, eqs, matched, missing)`` on
        each complete matching until it returns a non-None result."""
        q_atoms = list(self.q.heap)
        p_atoms = list(self.p.heap)
        self.q_lits = normalize_pure(self.q.pure + self.q.path)
        steps = [0]
        self.exhausted = False

        def go(remaining, used, binds, eqs, matched, missing):
            steps[0] += 1
            if steps[0] > budget:
                self.exhausted = True
                return None
            if not self._pure_ok(binds, eqs):
                return None
            if not remaining:
                return accept(binds, eqs, matched, missing)
            qa = self._pick(remaining, binds)
            rest = [a for a in remaining if a is not qa]
            cands = []
            for i, pa in enumerate(p_atoms):
                if i in used:
                    continue
                for rank, b, e in self.match_atom(qa, pa, binds, eqs):
                    cands.append((rank if rank < 3 else 4, i, b, e))
            if self.allow_missing and not self._clashes(qa, binds, eqs, p_atoms):
                cands.append((2, None, binds, eqs))
            cands.sort(key=lambda c: (c[0], -1 if c[1] is None else c[1]))
            for _, i, b, e in cands:
                if i is None:
                    r = go(rest, used, b, e, matched, missing + (qa,))
                else:
                    r = go(rest, used | {i}, b, e, matched + ((qa, p_atoms[i]),), missing)
                if r is not None:
                    return r
            return None

        return go(q_atoms, frozenset(), {}, (), (), ())

    def _clashes(self, qa, binds, eqs, p_atoms) -> bool:
        """A missing atom overlapping a p atom (modulo known equalities) can never be added."""
        try:
            a = subst_atom(qa, binds)
        except TypeError:
            return False
        h = _head(a)
        if isinstance(a, PointsToVar):
            return any(isinstance(b, PointsToVar) and b.var == a.var for b in p_atoms)
        if h is None or isinstance(a, (Blame, World)):
            return sep_key(a) in {sep_key(b) for b in p_atoms}
        rep = solver_for(self.solver_pure, eqs).representative
        rh = rep(h)
        for b in p_atoms:
            if isinstance(b, (Blame, World, PointsToVar)) or rep(b.loc) != rh:
                continue
            if isinstance(a, Invalid) or isinstance(b, Invalid):
                return True
            if getattr(a, "field", None) == getattr(b, "field", None):
                return True
        return False


def _flexible(p: SymbolicState, q: SymbolicState, extra=()) -> set:
    return (state_vars(q) - state_vars(p)) | set(extra)


def biabduce(p: SymbolicState, q: SymbolicState, flexible=None) -> BiabductionResult:
    """Infer missing resource ``m`` and frame ``f`` such that p * m |- q * f.

    ``flexible`` defaults to the variables of ``q`` not occurring in ``p``.
    Raises ``Inconsistent`` when no matching is satisfiable.
    """
    flex = _flexible(p, q) if flexible is None else set(flexible)
    matcher = _Matcher(p, q, flex, allow_missing=True, allow_equalities=True,
                       solver_pure=p.pure + p.path)

    def accept(binds, eqs, matched, missing):
        m_heap = tuple(subst_atom(a, binds) for a in missing)
        q_pure = normalize_pure(tuple(_subst(SymbolicState(pure=q.pure), binds, False).pure))
        base = p.pure + p.path + normalize_pure(eqs)
        needed = tuple(l for l in q_pure if not entails_pure(base, (l,)))
        m_pure = normalize_pure(needed + tuple(eqs))
        try:
            combined = normalize(SymbolicState(p.heap + m_heap, p.pure + m_pure, p.path))
        except SeparationViolation:
            return None
        if not state_satisfiable(combined):
            return None
        used = {id(pa) for _, pa in matched}
        f_heap = tuple(a for a in p.heap if id(a) not in used)
        missing_state = normalize(SymbolicState(m_heap, m_pure))
        frame = normalize(SymbolicState(f_heap, p.pure, p.path, p.existentials))
        required = normalize(SymbolicState(
            tuple(subst_atom(a, binds) for a in q.heap), normalize_pure(q_pure + tuple(eqs))))
        pairs = tuple((subst_atom(qa, binds), pa) for qa, pa in matched)
        return BiabductionResult(missing_state, frame, pairs, dict(binds), required)

    res = matcher.search(accept)
    if res is None:
        if matcher.exhausted:
            raise SearchExhausted("matching search budget exhausted")
        raise Inconsistent("no consistent matching")
    return res


def entails(p: SymbolicState, q: SymbolicState) -> bool:
    """Every model of ``q`` is a model of ``p``.

    Decided by a bijective atom matching modulo ``q``'s pure equalities, where
    variables private to ``p`` (and ``p``'s existentials) are unifiable, then a
    pure entailment check. An unsatisfiable ``q`` entails everything.
    """
    if not state_satisfiable(q):
        return True
    if len(p.heap) != len(q.heap):
        return False
    flex = (state_vars(p) - state_vars(q)) | set(p.existentials)
    q_facts = q.pure + q.path + normalize_pure(spatial_facts(q.heap))
    # match p's atoms into q's: p plays the "required" role
    matcher = _Matcher(q, p, flex, allow_missing=False, allow_equalities=False,
                       solver_pure=q_facts)

    def accept(binds, eqs, matched, missing):
        if missing or len(matched) != len(q.heap):
            return None
        p_pure = _subst(SymbolicState(pure=p.pure, path=p.path), binds, False)
        rest = [l for l in normalize_pure(p_pure.pure + p_pure.path)
                if not (set(_lvars(l)) & (flex - set(binds)))]
        return True if entails_pure(q_facts, tuple(rest)) else None

    return matcher.search(accept) is True


def _lvars(lit):
    return [t for t in literal_terms(lit) if isinstance(t, LVar)]


def check_biabduction(p: SymbolicState, q: SymbolicState, res: BiabductionResult) -> bool:
    """Receipt check: p * m |- q' * f where q' is q after unification."""
    try:
        lhs = star(p, res.missing)
        rhs = star(res.required, res.frame)
    except SeparationViolation:
        return False
    return entails(lhs, rhs)

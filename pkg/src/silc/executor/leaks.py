"""Exit-time leak detection by reachability over the symbolic heap."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Tuple

from ..isl import (
    MEMLEAK, Blame, PointsToField, PointsToLoc, Severed, SymbolicState, term_key,
)
from ..solver import solver_for


@dataclass(frozen=True)
class LeakFinding:
    loc: object
    blame: Optional[Blame]
    severed: Optional[Severed]
    cells: Tuple[object, ...]  # every allocated atom made unreachable with ``loc``


def detect_leaks_at_exit(q: SymbolicState, roots: Iterable, kind: str = MEMLEAK,
                         only: Optional[Callable[[object], bool]] = None) -> List[LeakFinding]:
    """Allocated cells of ``q`` unreachable from ``roots``.

    Roots may be logical terms or program variable names (looked up in ``q``).
    ``only`` filters which unreachable locations count (the executor keeps
    cells whose location is existential). Only the entry points of each
    unreachable region are reported.
    """
    cs = solver_for(q.pure)
    rep = cs.representative
    root_terms = []
    for r in roots:
        t = q.var_value(r) if isinstance(r, str) else r
        if t is not None:
            root_terms.append(t)

    cells = [a for a in q.heap if isinstance(a, (PointsToLoc, PointsToField))]
    edges = {}
    for a in cells:
        edges.setdefault(rep(a.loc), []).append(rep(a.value))

    def closure(starts) -> set:
        seen, todo = set(), list(starts)
        while todo:
            t = todo.pop()
            if t in seen:
                continue
            seen.add(t)
            todo.extend(edges.get(t, ()))
        return seen

    live = closure(rep(t) for t in root_terms)
    heads = {}
    for a in cells:
        heads.setdefault(rep(a.loc), a.loc)
    dead = {r: h for r, h in heads.items() if r not in live and (only is None or only(h))}
    if not dead:
        return []
    # entry points: dead heads not reachable from another dead head
    entry = []
    for r, h in sorted(dead.items(), key=lambda kv: term_key(kv[1])):
        others = closure(x for o in dead if o != r for x in edges.get(o, ()))
        if r not in others:
            entry.append((r, h))

    out = []
    claimed: set = set()

    def emit(r, h):
        region = (closure([r]) & set(dead)) - claimed
        claimed.update(region)
        atoms = tuple(a for a in cells if rep(a.loc) in region)
        sev = next((s for s in reversed(q.severed) if rep(s.target) == r), None)
        blame = None
        if sev is not None:
            blame = next((b for b in sev.blames if b.ref == kind), None)
        if blame is None:
            blame = next((b for b in q.heap if isinstance(b, Blame) and b.ref == kind
                          and rep(b.resource) == r), None)
        out.append(LeakFinding(h, blame, sev, atoms))

    for r, h in entry:
        emit(r, h)
    # whatever is left sits on dead cycles: report the smallest member of each
    while set(dead) - claimed:
        r = min(set(dead) - claimed, key=lambda x: term_key(dead[x]))
        emit(r, dead[r])
    return out

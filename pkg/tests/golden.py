"""Hand-written summary of ``set(ptr x, int v) { [x] = v; }``: one safe
triple and two latent errors. Unknown-entity blames in the safe
precondition say that whoever last touched X is not yet known."""
from silc.biabduction import entails
from silc.isl import (
    ERR, MEMLEAK, NIL, NOLEAK, NPD, OK, STOP, UAF, Blame, BugApp, Entity, Eq, Invalid, LVar,
    PointsToLoc, PointsToVar, Sanitization, state, unknown_entity,
)

SET_SRC = "void set(ptr x, int v){ [x] = v; }"
X, V, W = LVar("X"), LVar("V"), LVar("W")
SIGNS = {NPD: ("+", STOP), UAF: ("+", STOP), MEMLEAK: ("-", NOLEAK)}


def set_golden(filename="<input>"):
    me = Entity("Client", None, filename, "set", 1)
    unknown = [Blame(X, unknown_entity(LVar(f"B{k}")), BugApp(k, X)) for k in SIGNS]
    held = [Blame(X, me, BugApp(k, X), Sanitization(t, (), s), "set")
            for k, (s, t) in SIGNS.items()]
    base = (PointsToVar("x", X), PointsToVar("v", V))
    ok = (state(*base, PointsToLoc(X, W), *unknown), OK, state(*base, PointsToLoc(X, V), *held), None)
    nil = state(*base, pure=[Eq(X, NIL)])
    dangling = state(*base, Invalid(X))
    return [ok, (nil, ERR, nil, NPD), (dangling, ERR, dangling, UAF)]


def same_state(a, b) -> bool:
    return entails(a, b) and entails(b, a)


def matches_golden(triples, golden) -> bool:
    """Each golden triple is matched by exactly one analysed triple."""
    if len(triples) != len(golden):
        return False
    rest = list(triples)
    for pre, exit_, post, kind in golden:
        hit = next((t for t in rest if t.exit == exit_
                    and (t.err.kind if t.err else None) == kind
                    and (t.err is None or t.err.latent)
                    and same_state(t.pre, pre) and same_state(t.post, post)), None)
        if hit is None:
            return False
        rest.remove(hit)
    return True

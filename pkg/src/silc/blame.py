"""Bug catalog, world installation and integration-bug classification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .config import AnalysisConfig
from .isl import (
    FLOW_SIGN, MEMLEAK, NIL, NPD, PLUS, UAF, Blame, BugApp,
    CallSite, Entity, Eq, ErrInfo, Invalid, LVar, PointsToVar, Sanitization,
    SymbolicState, Triple, World, normalize, normalize_pure,
)
from .solver import entails_pure

LEAK_MARKER = "allocated and unreachable at exit"


@dataclass(frozen=True)
class BugDef:
    """P(X) := body. ``body`` is None for MemLeak, whose condition is checked at exit."""
    ref: str
    param: LVar
    body: Optional[SymbolicState]

    def instantiate(self, term) -> Optional[SymbolicState]:
        if self.body is None:
            return None
        from .isl import _subst
        return _subst(self.body, {self.param: term})

    def __str__(self) -> str:
        body = LEAK_MARKER if self.body is None else str(self.body)
        return f"{self.ref}({self.param}) := {body}"


def default_definitions() -> Dict[str, BugDef]:
    x = LVar("X")
    return {
        NPD: BugDef(NPD, x, normalize(SymbolicState(
            (PointsToVar("x", x),), normalize_pure(Eq(x, NIL)), existentials=frozenset()))),
        UAF: BugDef(UAF, x, normalize(SymbolicState((PointsToVar("x", x), Invalid(x))))),
        MEMLEAK: BugDef(MEMLEAK, x, None),
    }


@dataclass(frozen=True)
class BugCatalog:
    kinds: Tuple[str, ...]
    definitions: Dict[str, BugDef] = field(default_factory=default_definitions)
    sanitizations: Dict[str, Sanitization] = field(default_factory=dict)

    def __post_init__(self):
        for k in self.kinds:
            if k not in self.definitions:
                raise ValueError(f"no definition for bug kind {k}")
            if k not in self.sanitizations:
                raise ValueError(f"no sanitisation protocol for bug kind {k}")

    @classmethod
    def from_config(cls, cfg: AnalysisConfig) -> "BugCatalog":
        sans = {k: Sanitization(cfg.protocol(k), (), FLOW_SIGN[k]) for k in cfg.bugs}
        return cls(tuple(cfg.bugs), default_definitions(), sans)


def world_entity(func, filename: Optional[str] = None) -> Entity:
    loc = getattr(func, "loc", None)
    return Entity(func.world_tag, None, filename or (loc.file if loc else None), func.name,
                  loc.line if loc else None)


def init_worlds(func, catalog: BugCatalog, filename: Optional[str] = None) -> SymbolicState:
    """One World atom per enabled bug kind, owned by the function's side."""
    ent = world_entity(func, filename)
    atoms = tuple(World(ent, k, catalog.sanitizations[k], func.name) for k in catalog.kinds)
    return normalize(SymbolicState(atoms))


# -- classification -----------------------------------------------------------

SAME_WORLD = "SameWorld"
INTEGRATION = "Integration"


class MissingBlame(Exception):
    def __init__(self, function: str, triple: Triple):
        self.function = function
        self.triple = triple
        super().__init__(f"{function}: manifest {triple.err.kind} at {triple.err.site} has no blame")


@dataclass(frozen=True)
class IntegrationFinding:
    kind: str
    function: str  # where the bug manifests as a non-latent error
    triple: Triple
    world: Entity  # E': where the fault happens
    blamed: Entity  # E: last entity to touch the resource
    blame: Blame
    status: str
    culprit: Optional[CallSite] = None
    sign: str = PLUS
    triple_index: int = 0

    @property
    def is_integration(self) -> bool:
        return self.status == INTEGRATION

    @property
    def sanitizable(self) -> bool:
        return self.is_integration and self.culprit is not None

    def key(self) -> tuple:
        b = self.blamed
        c = self.culprit
        return (self.kind, self.function, str(self.triple.err.site),
                (c.caller, c.callee, c.line, c.col) if c else None,
                (b.kind, b.file, b.function, b.line))


def culprit_call(err: ErrInfo, blame: Blame, sign: str) -> Optional[CallSite]:
    """Plus flows fault inside the vendor: sanitize the call that entered it.
    Minus flows leave the vendor: sanitize the call the blame crossed."""
    if sign == PLUS:
        return err.vendor_call
    origin = blame.entity.origin
    return origin.call if origin is not None else None


def related(blame: Blame, triple: Triple, catalog: BugCatalog) -> bool:
    """The blame's bug condition must be about this finding's bug and resource."""
    err = triple.err
    if not isinstance(blame.bug, BugApp) or blame.bug.ref != err.kind:
        return False
    if err.kind == MEMLEAK or err.resource is None:
        return True
    facts = triple.post.pure + triple.pre.pure
    if blame.resource != err.resource and not entails_pure(facts, normalize_pure(Eq(blame.resource, err.resource))):
        return False
    d = catalog.definitions.get(err.kind)
    if d is None or d.body is None:
        return True
    inst = d.instantiate(err.resource)
    if err.kind == NPD:
        return entails_pure(facts, inst.pure)
    return any(isinstance(a, Invalid) for a in triple.post.heap + triple.pre.heap)


def classify_all(summaries, catalog: BugCatalog):
    """Classify every manifest error of ``summaries`` (a name->Summary map or
    an iterable of summaries). Returns (findings, problems)."""
    items = summaries.values() if isinstance(summaries, dict) else summaries
    findings: List[IntegrationFinding] = []
    problems: List[MissingBlame] = []
    seen = set()
    for s in items:
        for idx, t in enumerate(s.triples):
            if not t.is_err or t.err.latent or t.err.kind not in catalog.kinds:
                continue
            err = t.err
            b = err.blame
            if b is None or not b.entity.known or not related(b, t, catalog):
                problems.append(MissingBlame(s.name, t))
                continue
            status = INTEGRATION if b.entity.kind != err.world.kind else SAME_WORLD
            sign = catalog.sanitizations[err.kind].sign
            culprit = culprit_call(err, b, sign) if status == INTEGRATION else None
            f = IntegrationFinding(err.kind, s.name, t, err.world, b.entity, b, status,
                                   culprit, sign, idx)
            if f.key() in seen:
                continue
            seen.add(f.key())
            findings.append(f)
    return findings, problems


def classify(summaries, catalog: BugCatalog) -> List[IntegrationFinding]:
    return classify_all(summaries, catalog)[0]

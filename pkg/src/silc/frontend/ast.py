"""MiniC abstract syntax.

Nodes are frozen dataclasses. Source locations are excluded from equality so
that two parses of equivalent text compare equal structurally.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class Location:
    file: str
    line: int
    col: int
    offset: int = 0
    end: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


NOWHERE = Location("<none>", 0, 0)


def _loc() -> Location:
    return field(default=NOWHERE, compare=False, repr=False)


@dataclass(frozen=True)
class MiniType:
    kind: str  # "int" | "void" | "ptr" | "struct"
    struct: Optional[str] = None

    @property
    def is_pointer(self) -> bool:
        return self.kind in ("ptr", "struct")

    def __str__(self) -> str:
        if self.kind == "struct":
            return f"struct {self.struct} *"
        return self.kind


INT = MiniType("int")
VOID = MiniType("void")
PTR = MiniType("ptr")


# -- expressions and conditions ------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class NullLit:
    pass


Expr = Union[Var, IntLit, NullLit]


@dataclass(frozen=True)
class Compare:
    op: str  # "==" | "!="
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Truthy:
    var: Var


Cond = Union[Compare, Truthy]


# -- statements -----------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    loc: Location = _loc()


@dataclass(frozen=True)
class Malloc:
    target: str
    loc: Location = _loc()


@dataclass(frozen=True)
class Free:
    var: str
    loc: Location = _loc()


@dataclass(frozen=True)
class Store:
    """``[ptr] = expr``"""
    ptr: str
    expr: Expr
    loc: Location = _loc()


@dataclass(frozen=True)
class Load:
    """``target = [ptr]``"""
    target: str
    ptr: str
    loc: Location = _loc()


@dataclass(frozen=True)
class FieldStore:
    ptr: str
    field: str
    expr: Expr
    loc: Location = _loc()


@dataclass(frozen=True)
class FieldLoad:
    target: str
    ptr: str
    field: str
    loc: Location = _loc()


@dataclass(frozen=True)
class Call:
    target: Optional[str]
    func: str
    args: Tuple[Expr, ...]
    loc: Location = _loc()


@dataclass(frozen=True)
class If:
    cond: Cond
    then: Tuple["Stmt", ...]
    orelse: Optional[Tuple["Stmt", ...]] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class While:
    cond: Cond
    body: Tuple["Stmt", ...]
    loc: Location = _loc()


@dataclass(frozen=True)
class Return:
    expr: Optional[Expr] = None
    loc: Location = _loc()


Stmt = Union[Assign, Malloc, Free, Store, Load, FieldStore, FieldLoad, Call,
             If, While, Return]


# -- top level ------------------------------------------------------------

CLIENT = "Client"
VENDOR = "Vendor"


@dataclass(frozen=True)
class StructDef:
    name: str
    fields: Tuple[Tuple[str, MiniType], ...]
    loc: Location = _loc()

    def field_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.fields)


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: Tuple[Tuple[str, MiniType], ...]
    return_type: MiniType
    body: Tuple[Stmt, ...]
    world_tag: str = CLIENT
    loc: Location = _loc()
    end: Location = _loc()

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.params)


@dataclass(frozen=True)
class Program:
    structs: Tuple[StructDef, ...]
    functions: Tuple[FuncDef, ...]
    filename: str = field(default="<input>", compare=False)
    source: str = field(default="", compare=False, repr=False)

    def function(self, name: str) -> FuncDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def struct(self, name: str) -> StructDef:
        for s in self.structs:
            if s.name == name:
                return s
        raise KeyError(name)

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)


def iter_stmts(stmts):
    """Yield every statement in ``stmts`` depth first, including nested blocks."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from iter_stmts(s.then)
            if s.orelse:
                yield from iter_stmts(s.orelse)
        elif isinstance(s, While):
            yield from iter_stmts(s.body)


def assigned_vars(stmts) -> Tuple[str, ...]:
    """Variables written by ``stmts``, in first-occurrence order."""
    seen = {}
    for s in iter_stmts(stmts):
        target = getattr(s, "target", None)
        if target is not None:
            seen.setdefault(target, None)
    return tuple(seen)


def expr_vars(e: Expr) -> Tuple[str, ...]:
    return (e.name,) if isinstance(e, Var) else ()

"""Pretty printer producing parseable MiniC text."""
from __future__ import annotations

from .ast import (
    VENDOR, Assign, Call, FieldLoad, FieldStore, Free, FuncDef, If, IntLit,
    Load, Malloc, NullLit, Program, Return, Store, StructDef, Truthy, Var, While,
)

INDENT = "    "


def print_expr(e) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, NullLit):
        return "NULL"
    raise TypeError(f"not an expression: {e!r}")


def print_cond(c) -> str:
    if isinstance(c, Truthy):
        return c.var.name
    return f"{print_expr(c.lhs)} {c.op} {print_expr(c.rhs)}"


def print_stmt(s, depth: int = 0) -> str:
    pad = INDENT * depth
    if isinstance(s, Assign):
        return f"{pad}{s.target} = {print_expr(s.expr)};"
    if isinstance(s, Malloc):
        return f"{pad}{s.target} = malloc();"
    if isinstance(s, Free):
        return f"{pad}free({s.var});"
    if isinstance(s, Store):
        return f"{pad}[{s.ptr}] = {print_expr(s.expr)};"
    if isinstance(s, Load):
        return f"{pad}{s.target} = [{s.ptr}];"
    if isinstance(s, FieldStore):
        return f"{pad}{s.ptr}->{s.field} = {print_expr(s.expr)};"
    if isinstance(s, FieldLoad):
        return f"{pad}{s.target} = {s.ptr}->{s.field};"
    if isinstance(s, Call):
        call = f"{s.func}({', '.join(print_expr(a) for a in s.args)})"
        return f"{pad}{s.target} = {call};" if s.target else f"{pad}{call};"
    if isinstance(s, Return):
        return f"{pad}return;" if s.expr is None else f"{pad}return {print_expr(s.expr)};"
    if isinstance(s, If):
        text = f"{pad}if ({print_cond(s.cond)}) {print_block(s.then, depth)}"
        if s.orelse is not None:
            text += f" else {print_block(s.orelse, depth)}"
        return text
    if isinstance(s, While):
        return f"{pad}while ({print_cond(s.cond)}) {print_block(s.body, depth)}"
    raise TypeError(f"not a statement: {s!r}")


def print_block(stmts, depth: int = 0) -> str:
    if not stmts:
        return "{ }"
    inner = "\n".join(print_stmt(s, depth + 1) for s in stmts)
    return "{\n" + inner + "\n" + INDENT * depth + "}"


def print_struct(s: StructDef) -> str:
    fields = "".join(f"{INDENT}{t} {n};\n" if t.kind != "struct" else f"{INDENT}{t}{n};\n"
                     for n, t in s.fields)
    return f"struct {s.name} {{\n{fields}}};"


def _param(name, t) -> str:
    return f"{t}{name}" if t.kind == "struct" else f"{t} {name}"


def print_function(f: FuncDef) -> str:
    params = ", ".join(_param(n, t) for n, t in f.params)
    head = f"{f.return_type}{f.name}" if f.return_type.kind == "struct" else f"{f.return_type} {f.name}"
    text = f"{head}({params}) {print_block(f.body)}"
    if f.world_tag == VENDOR:
        text = "// @vendor\n" + text
    return text


def print_program(p: Program) -> str:
    parts = [print_struct(s) for s in p.structs] + [print_function(f) for f in p.functions]
    return "\n\n".join(parts) + "\n"

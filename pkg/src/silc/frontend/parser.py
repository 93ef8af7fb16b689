"""Recursive descent parser for MiniC.

Grammar (informal)::

    program   := (structdef | funcdef)*
    structdef := "struct" ID "{" (type ID ";")+ "}" ";"
    type      := "int" | "void" | "ptr" | "struct" ID "*"
    funcdef   := ["// @vendor" NEWLINE] type ID "(" [param ("," param)*] ")" block
    stmt      := ID "=" expr ";" | ID "=" "malloc" "(" ")" ";" | "free" "(" ID ")" ";"
               | "[" ID "]" "=" expr ";" | ID "=" "[" ID "]" ";"
               | ID "->" ID "=" expr ";" | ID "=" ID "->" ID ";"
               | [ID "="] ID "(" [expr ("," expr)*] ")" ";"
               | "if" "(" cond ")" block ["else" block]
               | "while" "(" cond ")" block | "return" [expr] ";"
    expr      := ID | INT | "NULL"
    cond      := expr ("==" | "!=") expr | ID
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .ast import (
    CLIENT, INT, PTR, VENDOR, VOID, Assign, Call, Compare, FieldLoad, FieldStore,
    Free, FuncDef, If, IntLit, Load, Location, Malloc, MiniType, NullLit, Program,
    Return, Store, StructDef, Truthy, Var, While, iter_stmts,
)

BUILTINS = {"memcpy": 3, "strlen": 1}
KEYWORDS = {"struct", "int", "void", "ptr", "if", "else", "while", "return",
            "malloc", "free", "NULL"}


class MiniCSyntaxError(SyntaxError):
    def __init__(self, msg: str, filename: str, line: int, col: int):
        super().__init__(f"{filename}:{line}:{col}: {msg}")
        self.filename = filename
        self.lineno = line
        self.offset = col
        self.line = line
        self.col = col


class ResolveError(Exception):
    def __init__(self, msg: str, loc: Optional[Location] = None):
        super().__init__(f"{loc}: {msg}" if loc else msg)
        self.loc = loc


@dataclass(frozen=True)
class Token:
    kind: str  # "id" | "int" | "op" | "kw" | "vendor" | "eof"
    text: str
    line: int
    col: int
    offset: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<block>/\*.*?\*/)
  | (?P<int>-?\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|==|!=|[{}()\[\];,=*])
""", re.VERBOSE | re.DOTALL)


def tokenize(text: str, filename: str = "<input>") -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MiniCSyntaxError(f"unexpected character {text[pos]!r}", filename,
                                   line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        col = pos - line_start + 1
        if kind == "comment":
            if chunk[2:].strip() == "@vendor":
                tokens.append(Token("vendor", chunk, line, col, pos))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, chunk, line, col, pos))
        elif kind == "id":
            tokens.append(Token("kw" if chunk in KEYWORDS else "id", chunk, line, col, pos))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, pos))
    return tokens


class Parser:
    def __init__(self, text: str, filename: str):
        self.text = text
        self.filename = filename
        self.toks = tokenize(text, filename)
        self.i = 0

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise MiniCSyntaxError(f"{msg}, found {found!r}", self.filename, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self) -> Token:
        if self.tok.kind != "id":
            self.error("expected identifier")
        tok = self.tok
        self.i += 1
        return tok

    def loc(self, start: Token) -> Location:
        prev = self.toks[self.i - 1]
        return Location(self.filename, start.line, start.col, start.offset,
                        prev.offset + len(prev.text))

    # -- top level --------------------------------------------------------

    def program(self) -> Program:
        structs, funcs = [], []
        while self.tok.kind != "eof":
            vendor_tok = None
            if self.tok.kind == "vendor":
                vendor_tok = self.tok
                self.i += 1
                if self.tok.kind == "eof":
                    break
            if self.at("struct") and self.peek(2).text == "{":
                structs.append(self.structdef())
                continue
            funcs.append(self.funcdef(vendor_tok))
        return Program(tuple(structs), tuple(funcs), self.filename, self.text)

    def structdef(self) -> StructDef:
        start = self.expect("struct")
        name = self.ident().text
        self.expect("{")
        fields = []
        while not self.at("}"):
            ftype = self.type_()
            fields.append((self.ident().text, ftype))
            self.expect(";")
        if not fields:
            self.error("struct needs at least one field")
        self.expect("}")
        self.expect(";")
        return StructDef(name, tuple(fields), self.loc(start))

    def type_(self) -> MiniType:
        tok = self.tok
        if self.at("int"):
            self.i += 1
            return INT
        if self.at("void"):
            self.i += 1
            return VOID
        if self.at("ptr"):
            self.i += 1
            return PTR
        if self.at("struct"):
            self.i += 1
            name = self.ident().text
            self.expect("*")
            return MiniType("struct", name)
        self.error("expected type", tok)

    def funcdef(self, vendor_tok: Optional[Token]) -> FuncDef:
        start = self.tok
        rtype = self.type_()
        name = self.ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptype = self.type_()
                params.append((self.ident().text, ptype))
                if not self.at(","):
                    break
                self.i += 1
        self.expect(")")
        body = self.block()
        close = self.toks[self.i - 1]
        tag = VENDOR if vendor_tok is not None and vendor_tok.line == start.line - 1 else CLIENT
        end = Location(self.filename, close.line, close.col, close.offset, close.offset + 1)
        return FuncDef(name, tuple(params), rtype, body, tag, self.loc(start), end)

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    # -- statements -------------------------------------------------------

    def stmt(self):
        start = self.tok
        if self.at("if"):
            self.i += 1
            self.expect("(")
            cond = self.cond()
            self.expect(")")
            then = self.block()
            orelse = None
            if self.at("else"):
                self.i += 1
                orelse = self.block()
            return If(cond, then, orelse, self.loc(start))
        if self.at("while"):
            self.i += 1
            self.expect("(")
            cond = self.cond()
            self.expect(")")
            body = self.block()
            return While(cond, body, self.loc(start))
        if self.at("return"):
            self.i += 1
            expr = None if self.at(";") else self.expr()
            self.expect(";")
            return Return(expr, self.loc(start))
        if self.at("free"):
            self.i += 1
            self.expect("(")
            var = self.ident().text
            self.expect(")")
            self.expect(";")
            return Free(var, self.loc(start))
        if self.at("["):
            self.i += 1
            ptr = self.ident().text
            self.expect("]")
            self.expect("=")
            expr = self.expr()
            self.expect(";")
            return Store(ptr, expr, self.loc(start))
        if self.tok.kind != "id":
            self.error("expected statement")
        name = self.ident().text
        if self.at("->"):
            self.i += 1
            fld = self.ident().text
            self.expect("=")
            expr = self.expr()
            self.expect(";")
            return FieldStore(name, fld, expr, self.loc(start))
        if self.at("("):
            args = self.args()
            self.expect(";")
            return Call(None, name, args, self.loc(start))
        self.expect("=")
        if self.at("malloc"):
            self.i += 1
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return Malloc(name, self.loc(start))
        if self.at("["):
            self.i += 1
            ptr = self.ident().text
            self.expect("]")
            self.expect(";")
            return Load(name, ptr, self.loc(start))
        if self.tok.kind == "id" and self.peek().text == "->":
            ptr = self.ident().text
            self.expect("->")
            fld = self.ident().text
            self.expect(";")
            return FieldLoad(name, ptr, fld, self.loc(start))
        if self.tok.kind == "id" and self.peek().text == "(":
            func = self.ident().text
            args = self.args()
            self.expect(";")
            return Call(name, func, args, self.loc(start))
        expr = self.expr()
        self.expect(";")
        return Assign(name, expr, self.loc(start))

    def args(self):
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expr())
                if not self.at(","):
                    break
                self.i += 1
        self.expect(")")
        return tuple(args)

    def expr(self):
        tok = self.tok
        if tok.kind == "id":
            self.i += 1
            return Var(tok.text)
        if tok.kind == "int":
            self.i += 1
            return IntLit(int(tok.text))
        if self.at("NULL"):
            self.i += 1
            return NullLit()
        self.error("expected expression")

    def cond(self):
        if self.tok.kind == "id" and self.peek().text not in ("==", "!="):
            return Truthy(Var(self.ident().text))
        lhs = self.expr()
        if not (self.at("==") or self.at("!=")):
            self.error("expected '==' or '!='")
        op = self.tok.text
        self.i += 1
        return Compare(op, lhs, self.expr())


def parse(source_text: str, filename: str = "<input>") -> Program:
    """Parse MiniC text and resolve names. Raises ``MiniCSyntaxError`` or ``ResolveError``."""
    program = Parser(source_text, filename).program()
    resolve(program)
    return program


def resolve(program: Program) -> None:
    names = [f.name for f in program.functions]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ResolveError(f"duplicate function {sorted(dup)[0]!r}")
    for name in names:
        if name in BUILTINS:
            raise ResolveError(f"function {name!r} shadows a builtin")
    structs = {}
    for s in program.structs:
        if s.name in structs:
            raise ResolveError(f"duplicate struct {s.name!r}", s.loc)
        fnames = s.field_names()
        if len(set(fnames)) != len(fnames):
            raise ResolveError(f"duplicate field in struct {s.name!r}", s.loc)
        structs[s.name] = s
    all_fields = {f for s in program.structs for f in s.field_names()}
    arity = {f.name: len(f.params) for f in program.functions}
    arity.update(BUILTINS)

    def check_type(t: MiniType, loc):
        if t.kind == "struct" and t.struct not in structs:
            raise ResolveError(f"unknown struct {t.struct!r}", loc)

    for s in program.structs:
        for _, t in s.fields:
            check_type(t, s.loc)
    for f in program.functions:
        check_type(f.return_type, f.loc)
        pnames = f.param_names
        if len(set(pnames)) != len(pnames):
            raise ResolveError(f"duplicate parameter in {f.name!r}", f.loc)
        ptypes = dict(f.params)
        for _, t in f.params:
            check_type(t, f.loc)
        for s in iter_stmts(f.body):
            if isinstance(s, Call):
                if s.func not in arity:
                    raise ResolveError(f"unknown function {s.func!r}", s.loc)
                if len(s.args) != arity[s.func]:
                    raise ResolveError(f"{s.func!r} expects {arity[s.func]} arguments", s.loc)
            ptr = getattr(s, "ptr", None)
            if isinstance(s, Free):
                ptr = s.var
            if ptr is not None and ptr in ptypes and not ptypes[ptr].is_pointer:
                raise ResolveError(f"{ptr!r} is not pointer-typed", s.loc)
            if isinstance(s, (FieldLoad, FieldStore)):
                t = ptypes.get(s.ptr)
                if t is not None and t.kind == "struct":
                    if s.field not in structs[t.struct].field_names():
                        raise ResolveError(f"struct {t.struct!r} has no field {s.field!r}", s.loc)
                elif s.field not in all_fields:
                    raise ResolveError(f"unknown field {s.field!r}", s.loc)

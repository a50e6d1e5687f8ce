"""Lexer and recursive-descent parser for kernel source text.

The grammar follows Lua/Terra conventions: newlines are insignificant,
blocks close with ``end``, ``--`` starts a comment, and kernels look like::

    ebb kernel initLen( e : dragon.edges )
      var diff   = e.head.pos - e.tail.pos
      e.rest_len = L.len(diff)
    end
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import KernelSyntaxError, SchemaError, Span
from .nodes import (
    Affine, Apply, Assign, Bool, Builtin, ExprStmt, ForLoop, Index, Kernel, Member,
    MethodCall, Name, Number, Reduce, UnOp, VarDecl, VecLit, Where, BinOp,
)

BUILTINS = {
    "dot": (2,), "len": (1,), "length": (1,), "normalize": (1,), "cross": (2,),
    "sqrt": (1,), "abs": (1,), "floor": (1,), "fmod": (1, 2), "frac": (1,),
}
BUILTIN_ALIASES = {"length": "len"}
KEYWORDS = {"ebb", "kernel", "var", "for", "in", "do", "end", "and", "or", "not", "true", "false"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?f?)
  | (?P<redop>(?:\+=|\*=|max=(?!=)|min=(?!=)))
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|~=|!=|<=|>=|[-+*/(){}\[\],.:;=<>])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # name, kw, num, op, redop, eof
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise KernelSyntaxError(f"unexpected character {text[pos]!r}",
                                    span=Span(line, pos - line_start + 1))
        kind = m.lastgroup
        span = Span(line, pos - line_start + 1)
        tok = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "name":
            toks.append(Token("kw" if tok in KEYWORDS else "name", tok, span))
        elif kind == "redop":
            toks.append(Token("redop", tok[:-1], span))
        elif kind in ("num", "op"):
            toks.append(Token(kind, tok, span))
        pos = m.end()
    toks.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return toks


_BINARY_LEVELS = [
    ("or",),
    ("and",),
    ("==", "!=", "~=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/"),
]


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.scopes: list[set[str]] = []

    # -- token helpers ---------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.text == text and t.kind in ((kind,) if kind else ("op", "kw"))

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            self.error("expected a name")
        return self.advance()

    def error(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise KernelSyntaxError(f"{msg}, found {found}", span=t.span)

    def bound(self, name: str) -> bool:
        return any(name in s for s in self.scopes)

    # -- kernels and statements ------------------------------------

    def parse_kernels(self) -> list[Kernel]:
        out = []
        while self.tok.kind != "eof":
            out.append(self.parse_kernel())
        return out

    def parse_kernel(self) -> Kernel:
        start = self.tok.span
        if self.at("ebb"):
            self.advance()
        self.expect("kernel")
        name = self.expect_name().text
        self.expect("(")
        param = self.expect_name().text
        self.expect(":")
        rel = self.dotted()
        self.expect(")")
        self.scopes = [{param}]
        body = self.block()
        self.expect("end")
        return Kernel(name, param, rel, body, span=start)

    def dotted(self) -> str:
        parts = [self.expect_name().text]
        while self.at("."):
            self.advance()
            parts.append(self.expect_name().text)
        return ".".join(parts)

    def block(self) -> tuple:
        stmts = []
        while not (self.at("end") or self.tok.kind == "eof"):
            if self.at(";"):
                self.advance()
                continue
            stmts.append(self.statement())
        return tuple(stmts)

    def statement(self):
        start = self.tok.span
        if self.at("var"):
            self.advance()
            name = self.expect_name().text
            self.expect("=")
            init = self.expr()
            self.scopes[-1].add(name)
            return VarDecl(name, init, span=start)
        if self.at("for"):
            self.advance()
            var = self.expect_name().text
            self.expect("in")
            it = self.expr()
            self.expect("do")
            self.scopes.append({var})
            body = self.block()
            self.scopes.pop()
            self.expect("end")
            return ForLoop(var, it, body, span=start)
        if self.tok.kind == "kw":
            self.error("expected a statement")
        e = self.expr()
        if self.at("="):
            self.advance()
            self._check_lvalue(e)
            return Assign(e, self.expr(), span=start)
        if self.tok.kind == "redop":
            op = self.advance().text
            self._check_lvalue(e)
            return Reduce(op, e, self.expr(), span=start)
        return ExprStmt(e, span=start)

    def _check_lvalue(self, e) -> None:
        if not isinstance(e, (Name, Member)):
            raise KernelSyntaxError("left-hand side must be a variable or a field access",
                                    span=e.span)

    # -- expressions -----------------------------------------------

    def expr(self, level: int = 0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        lhs = self.expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind in ("op", "kw") and self.tok.text in ops:
            t = self.advance()
            op = "!=" if t.text == "~=" else t.text
            lhs = BinOp(op, lhs, self.expr(level + 1), span=t.span)
        return lhs

    def unary(self):
        if self.at("-") or self.at("not"):
            t = self.advance()
            return UnOp(t.text, self.unary(), span=t.span)
        return self.postfix(self.primary())

    def postfix(self, e):
        while True:
            if self.at("."):
                self.advance()
                t = self.expect_name()
                if self.at("("):
                    args = self.call_args()
                    e = MethodCall(e, t.text, args, span=t.span)
                else:
                    e = Member(e, t.text, span=t.span)
            elif self.at("["):
                t = self.advance()
                neg = False
                if self.at("-"):
                    neg = True
                    self.advance()
                if self.tok.kind != "num" or not self.tok.text.isdigit():
                    self.error("index must be an integer literal")
                idx = int(self.advance().text)
                self.expect("]")
                e = Index(e, -idx if neg else idx, span=t.span)
            elif self.at("("):
                t = self.tok
                e = Apply(e, self.call_args(), span=t.span)
            else:
                return e

    def call_args(self) -> tuple:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        return tuple(args)

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return _number(t)
        if self.at("true") or self.at("false"):
            self.advance()
            return Bool(t.text == "true", span=t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("{"):
            self.advance()
            items = [self.expr()]
            while self.at(","):
                self.advance()
                items.append(self.expr())
            self.expect("}")
            return VecLit(tuple(items), span=t.span)
        if t.kind == "name":
            if t.text == "L" and not self.bound("L") and self.peek().text == ".":
                return self.namespaced()
            self.advance()
            if t.text in BUILTINS and not self.bound(t.text) and self.at("("):
                return self._builtin(t.text, t.span)
            return Name(t.text, span=t.span)
        self.error("expected an expression")

    def namespaced(self):
        start = self.advance().span
        self.expect(".")
        t = self.expect_name()
        if t.text == "Where":
            self.expect("(")
            path = self.dotted()
            self.expect(",")
            key = self.expr()
            self.expect(")")
            if "." not in path:
                raise KernelSyntaxError("L.Where needs a relation.field argument", span=t.span)
            rel, fld = path.rsplit(".", 1)
            return Where(rel, fld, key, span=start)
        if t.text == "Affine":
            self.expect("(")
            rel = self.dotted()
            self.expect(",")
            rows = self.int_matrix()
            self.expect(",")
            key = self.expr()
            self.expect(")")
            return Affine(rel, rows, key, span=start)
        if t.text in BUILTINS:
            if not self.at("("):
                self.error(f"L.{t.text} must be called")
            return self._builtin(t.text, start)
        raise KernelSyntaxError(f"unknown builtin L.{t.text}", span=t.span)

    def _builtin(self, name: str, span: Span):
        args = self.call_args()
        if len(args) not in BUILTINS[name]:
            raise KernelSyntaxError(f"{name} takes {' or '.join(map(str, BUILTINS[name]))} "
                                    f"argument(s), got {len(args)}", span=span)
        return Builtin(BUILTIN_ALIASES.get(name, name), args, span=span)

    def int_matrix(self) -> tuple:
        self.expect("{")
        rows = [self.int_row()]
        while self.at(","):
            self.advance()
            rows.append(self.int_row())
        self.expect("}")
        if len({len(r) for r in rows}) != 1:
            self.error("affine matrix rows must have equal length")
        return tuple(rows)

    def int_row(self) -> tuple:
        self.expect("{")
        vals = [self.int_lit()]
        while self.at(","):
            self.advance()
            vals.append(self.int_lit())
        self.expect("}")
        return tuple(vals)

    def int_lit(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        if self.tok.kind != "num" or not self.tok.text.isdigit():
            self.error("affine matrix entries must be integer literals")
        v = int(self.advance().text)
        return -v if neg else v


def _number(t: Token) -> Number:
    s = t.text
    if s.endswith("f"):
        return Number(float(s[:-1]), "float32", span=t.span)
    if s.isdigit():
        return Number(int(s), "int64", span=t.span)
    return Number(float(s), "float64", span=t.span)


def parse_kernels(text: str, env=None) -> list[Kernel]:
    """Parse every kernel in ``text``. With ``env``, parameter relations must resolve."""
    kernels = Parser(text).parse_kernels()
    if env is not None:
        for k in kernels:
            _check_relation(k, env)
    return kernels


def parse_kernel(text: str, env=None) -> Kernel:
    p = Parser(text)
    k = p.parse_kernel()
    if p.tok.kind != "eof":
        p.error("expected end of input after kernel")
    if env is not None:
        _check_relation(k, env)
    return k


def _check_relation(k: Kernel, env) -> None:
    try:
        env.relation(k.relation)
    except SchemaError:
        raise KernelSyntaxError(f"kernel {k.name}: unknown parameter relation {k.relation!r}",
                                span=k.span) from None

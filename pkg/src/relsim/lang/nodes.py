"""Kernel syntax tree.

Nodes are frozen dataclasses, so ``==`` is structural equality. Source spans
are carried along but excluded from comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Union

from ..errors import Span

REDUCE_OPS = ("+", "*", "max", "min")


def _span():
    return field(default=None, compare=False, repr=False)


class Node:
    __slots__ = ()

    def children(self) -> Iterator["Node"]:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Node):
                yield v
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, Node):
                        yield x

    def walk(self) -> Iterator["Node"]:
        yield self
        for c in self.children():
            yield from c.walk()


# -- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Name(Node):
    id: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Number(Node):
    value: Union[int, float]
    kind: str  # "int64" | "float64" | "float32"
    span: Span | None = _span()


@dataclass(frozen=True)
class Bool(Node):
    value: bool
    span: Span | None = _span()


@dataclass(frozen=True)
class Member(Node):
    """``obj.name``: a field access, or an accessor before expansion."""

    obj: Node
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class MethodCall(Node):
    """``obj.name(args)``: a parameterized accessor such as ``cell(1, 0)``."""

    obj: Node
    name: str
    args: tuple[Node, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Apply(Node):
    """``c(1, 2)``: call syntax on a key, resolved through the ``__apply__`` accessor."""

    obj: Node
    args: tuple[Node, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Index(Node):
    obj: Node
    index: int
    span: Span | None = _span()


@dataclass(frozen=True)
class VecLit(Node):
    items: tuple[Node, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    lhs: Node
    rhs: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class UnOp(Node):
    op: str  # "-" | "not"
    operand: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class Builtin(Node):
    name: str
    args: tuple[Node, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Where(Node):
    """Query over ``relation`` rows whose key field ``field`` equals ``key``."""

    relation: str
    field: str
    key: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class Affine(Node):
    """Grid neighbor ``relation[A @ index(key) + b]``; ``rows`` is ``[A | b]``."""

    relation: str
    rows: tuple[tuple[int, ...], ...]
    key: Node
    span: Span | None = _span()


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl(Node):
    name: str
    init: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class Assign(Node):
    target: Node
    value: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class Reduce(Node):
    op: str
    target: Node
    value: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class ForLoop(Node):
    var: str
    iterable: Node
    body: tuple[Node, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class ExprStmt(Node):
    expr: Node
    span: Span | None = _span()


@dataclass(frozen=True)
class Kernel(Node):
    name: str
    param: str
    relation: str
    body: tuple[Node, ...]
    span: Span | None = _span()


__all__ = [
    "Node", "Name", "Number", "Bool", "Member", "MethodCall", "Apply", "Index", "VecLit",
    "BinOp", "UnOp", "Builtin", "Where", "Affine", "VarDecl", "Assign", "Reduce",
    "ForLoop", "ExprStmt", "Kernel", "REDUCE_OPS", "replace",
]

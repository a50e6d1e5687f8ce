"""Render a kernel syntax tree back to parseable source."""

from __future__ import annotations

from .nodes import (
    Affine, Apply, Assign, BinOp, Bool, Builtin, ExprStmt, ForLoop, Index, Kernel, Member,
    MethodCall, Name, Number, Reduce, UnOp, VarDecl, VecLit, Where,
)

_PREC = {"or": 0, "and": 1, "==": 2, "!=": 2, "<": 2, "<=": 2, ">": 2, ">=": 2,
         "+": 3, "-": 3, "*": 4, "/": 4}
_UNARY = 5
_POSTFIX = 6


def pretty_print(node, indent: str = "  ") -> str:
    if isinstance(node, Kernel):
        lines = [f"ebb kernel {node.name}( {node.param} : {node.relation} )"]
        _block(node.body, 1, indent, lines)
        lines.append("end")
        return "\n".join(lines) + "\n"
    if hasattr(node, "body") or isinstance(node, (VarDecl, Assign, Reduce, ExprStmt)):
        lines: list[str] = []
        _stmt(node, 0, indent, lines)
        return "\n".join(lines)
    return expr_str(node)


def _block(stmts, depth, indent, lines) -> None:
    for s in stmts:
        _stmt(s, depth, indent, lines)


def _stmt(s, depth, indent, lines) -> None:
    pad = indent * depth
    if isinstance(s, VarDecl):
        lines.append(f"{pad}var {s.name} = {expr_str(s.init)}")
    elif isinstance(s, Assign):
        lines.append(f"{pad}{expr_str(s.target)} = {expr_str(s.value)}")
    elif isinstance(s, Reduce):
        lines.append(f"{pad}{expr_str(s.target)} {s.op}= {expr_str(s.value)}")
    elif isinstance(s, ForLoop):
        lines.append(f"{pad}for {s.var} in {expr_str(s.iterable)} do")
        _block(s.body, depth + 1, indent, lines)
        lines.append(f"{pad}end")
    elif isinstance(s, ExprStmt):
        lines.append(f"{pad}{expr_str(s.expr)}")
    else:
        raise TypeError(f"not a statement: {s!r}")


def _args(args) -> str:
    return ", ".join(expr_str(a) for a in args)


def expr_str(e, min_prec: int = 0) -> str:
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{expr_str(e.lhs, p)} {e.op} {expr_str(e.rhs, p + 1)}"
        return f"({s})" if p < min_prec else s
    if isinstance(e, UnOp):
        inner = expr_str(e.operand, _UNARY)
        s = f"not {inner}" if e.op == "not" else ("- " + inner if inner.startswith("-") else "-" + inner)
        return f"({s})" if _UNARY < min_prec else s
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Number):
        if e.kind == "int64":
            return str(e.value)
        text = repr(float(e.value))
        return text + "f" if e.kind == "float32" else text
    if isinstance(e, Bool):
        return "true" if e.value else "false"
    if isinstance(e, VecLit):
        return "{" + _args(e.items) + "}"
    if isinstance(e, Builtin):
        return f"L.{e.name}({_args(e.args)})"
    if isinstance(e, Where):
        return f"L.Where({e.relation}.{e.field}, {expr_str(e.key)})"
    if isinstance(e, Affine):
        rows = ",".join("{" + ",".join(str(v) for v in r) + "}" for r in e.rows)
        return f"L.Affine({e.relation}, {{{rows}}}, {expr_str(e.key)})"
    if isinstance(e, Member):
        return f"{expr_str(e.obj, _POSTFIX)}.{e.name}"
    if isinstance(e, MethodCall):
        return f"{expr_str(e.obj, _POSTFIX)}.{e.name}({_args(e.args)})"
    if isinstance(e, Apply):
        return f"{expr_str(e.obj, _POSTFIX)}({_args(e.args)})"
    if isinstance(e, Index):
        return f"{expr_str(e.obj, _POSTFIX)}[{e.index}]"
    raise TypeError(f"not an expression: {e!r}")

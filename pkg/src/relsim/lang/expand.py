"""Neighbor-accessor expansion.

Accessors are macros declared on relations. Expansion rewrites each use into
one of three primitive forms: a key-field access (``Member``), a query
(``Where``) or a grid offset (``Affine``). Already expanded trees pass
through unchanged.
"""

from __future__ import annotations

from ..errors import ExpansionError, SchemaError
from .nodes import (
    Affine, Apply, Assign, BinOp, Builtin, ExprStmt, ForLoop, Index, Kernel, Member,
    MethodCall, Name, Number, Reduce, UnOp, VarDecl, VecLit, Where,
)

APPLY_ACCESSOR = "__apply__"


def _literal_int(e) -> int | None:
    if isinstance(e, Number) and e.kind == "int64":
        return int(e.value)
    if isinstance(e, UnOp) and e.op == "-":
        v = _literal_int(e.operand)
        return None if v is None else -v
    return None


class _Expander:
    def __init__(self, env, kernel: Kernel):
        self.env = env
        self.kernel = kernel
        # name -> relation the (key-typed) variable points into, or None
        self.scopes: list[dict] = []

    def lookup(self, name: str):
        for s in reversed(self.scopes):
            if name in s:
                return s[name]
        return None

    def relation(self, path: str, span=None):
        try:
            return self.env.relation(path)
        except SchemaError as exc:
            raise ExpansionError(str(exc.message), span=span) from None

    # Returns the relation a key-valued expression points into, else None.
    def key_rel(self, e):
        if isinstance(e, Name):
            return self.lookup(e.id)
        if isinstance(e, Affine):
            return self.relation(e.relation, e.span)
        if isinstance(e, (Member, Index)):
            base = e if isinstance(e, Member) else e.obj
            while isinstance(base, Index):
                base = base.obj
            if not isinstance(base, Member):
                return None
            owner = self.key_rel(base.obj)
            if owner is None:
                return None
            fld = owner.fields.get(base.name)
            if fld is None or not fld.type.is_key:
                return None
            if isinstance(e, Member) and fld.type.shape:
                return None
            return self.env.relations[fld.type.target]
        return None

    def run(self) -> Kernel:
        k = self.kernel
        rel = self.relation(k.relation, k.span)
        self.scopes = [{k.param: rel}]
        body = self.block(k.body)
        return Kernel(k.name, k.param, k.relation, body, span=k.span)

    def block(self, stmts):
        return tuple(self.stmt(s) for s in stmts)

    def stmt(self, s):
        if isinstance(s, VarDecl):
            init = self.expr(s.init)
            self.scopes[-1][s.name] = self.key_rel(init)
            return VarDecl(s.name, init, span=s.span)
        if isinstance(s, Assign):
            return Assign(self.expr(s.target), self.expr(s.value), span=s.span)
        if isinstance(s, Reduce):
            return Reduce(s.op, self.expr(s.target), self.expr(s.value), span=s.span)
        if isinstance(s, ExprStmt):
            return ExprStmt(self.expr(s.expr), span=s.span)
        if isinstance(s, ForLoop):
            it = self.expr(s.iterable)
            elem = self.relation(it.relation, it.span) if isinstance(it, Where) else None
            self.scopes.append({s.var: elem})
            body = self.block(s.body)
            self.scopes.pop()
            return ForLoop(s.var, it, body, span=s.span)
        raise TypeError(f"not a statement: {s!r}")

    def expr(self, e):
        if isinstance(e, Member):
            obj = self.expr(e.obj)
            rel = self.key_rel(obj)
            if rel is None:
                return Member(obj, e.name, span=e.span)
            if e.name in rel.fields:
                return Member(obj, e.name, span=e.span)
            acc = rel.accessors.get(e.name)
            if acc is None:
                raise ExpansionError(f"{rel.name} has no field or accessor {e.name!r}", span=e.span)
            return self.apply_accessor(acc, obj, (), e.span)
        if isinstance(e, MethodCall):
            obj = self.expr(e.obj)
            rel = self.key_rel(obj)
            if rel is None:
                raise ExpansionError(f"cannot call {e.name!r} on a non-key value", span=e.span)
            acc = rel.accessors.get(e.name)
            if acc is None:
                raise ExpansionError(f"{rel.name} has no accessor {e.name!r}", span=e.span)
            return self.apply_accessor(acc, obj, e.args, e.span)
        if isinstance(e, Apply):
            obj = self.expr(e.obj)
            rel = self.key_rel(obj)
            acc = None if rel is None else rel.accessors.get(APPLY_ACCESSOR)
            if acc is None:
                what = "a non-key value" if rel is None else f"keys of {rel.name}"
                raise ExpansionError(f"call syntax is not defined for {what}", span=e.span)
            return self.apply_accessor(acc, obj, e.args, e.span)
        if isinstance(e, Where):
            self.relation(e.relation, e.span)
            return Where(e.relation, e.field, self.expr(e.key), span=e.span)
        if isinstance(e, Affine):
            self.relation(e.relation, e.span)
            return Affine(e.relation, e.rows, self.expr(e.key), span=e.span)
        if isinstance(e, BinOp):
            return BinOp(e.op, self.expr(e.lhs), self.expr(e.rhs), span=e.span)
        if isinstance(e, UnOp):
            return UnOp(e.op, self.expr(e.operand), span=e.span)
        if isinstance(e, Index):
            return Index(self.expr(e.obj), e.index, span=e.span)
        if isinstance(e, VecLit):
            return VecLit(tuple(self.expr(x) for x in e.items), span=e.span)
        if isinstance(e, Builtin):
            return Builtin(e.name, tuple(self.expr(x) for x in e.args), span=e.span)
        return e

    def apply_accessor(self, acc, obj, args, span):
        if acc.kind == "alias":
            if args:
                raise ExpansionError(f"accessor {acc.name!r} takes no arguments", span=span)
            return Member(obj, acc.field_name, span=span)
        if acc.kind == "where":
            if args:
                raise ExpansionError(f"accessor {acc.name!r} takes no arguments", span=span)
            return Where(acc.target.name, acc.field_name, obj, span=span)
        amap = acc.amap
        if len(args) != acc.params:
            raise ExpansionError(
                f"accessor {acc.name!r} takes {acc.params} argument(s), got {len(args)}", span=span)
        offs = []
        for a in args:
            v = _literal_int(a)
            if v is None:
                raise ExpansionError(
                    f"accessor {acc.name!r} needs integer literal arguments", span=a.span or span)
            offs.append(v)
        if offs:
            amap = amap.shifted(offs)
        rows = tuple(tuple(int(x) for x in list(a) + [c]) for a, c in zip(amap.A, amap.b))
        return Affine(amap.dest.name, rows, obj, span=span)


def expand_accessors(kernel: Kernel, env) -> Kernel:
    return _Expander(env, kernel).run()

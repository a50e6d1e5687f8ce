"""Static typing of expanded kernels.

Besides assigning a :class:`~relsim.types.FieldType` to every expression, the
checker resolves names, field accesses, queries and affine maps against the
runtime, and records every field/global access site for phase analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .. import types as T
from ..errors import KernelTypeError, SchemaError, Span
from ..lang.nodes import (
    REDUCE_OPS, Affine, Apply, Assign, BinOp, Bool, Builtin, ExprStmt, ForLoop, Index, Kernel,
    Member, MethodCall, Name, Number, Reduce, UnOp, VarDecl, VecLit, Where,
)
from ..relational import AffineMap, Field, Relation
from ..types import FieldType

_ARITH = ("+", "-", "*", "/")
_ORDER = ("<", "<=", ">", ">=")
_EQUALITY = ("==", "!=")


@dataclass(frozen=True)
class QueryType:
    """Type of a ``Where`` expression: an iterable of keys into ``target``."""

    target: str

    def __str__(self) -> str:
        return f"query({self.target})"


@dataclass(frozen=True)
class Access:
    """One syntactic field or global access."""

    name: str  # qualified field name, or global name
    kind: str  # "read" | "write" | "reduce"
    span: Span | None
    op: str | None = None
    centered: bool = False
    in_loop: bool = False
    is_global: bool = False
    node_id: int | None = None


@dataclass
class Binding:
    kind: str  # "param" | "local" | "loop" | "global"
    type: FieldType
    depth: int = 0  # loop nesting depth of the declaration


@dataclass
class TypedKernel:
    ast: Kernel
    relation: Relation
    types: dict = dc_field(default_factory=dict)      # id(node) -> type
    names: dict = dc_field(default_factory=dict)      # id(Name) -> Binding
    fields: dict = dc_field(default_factory=dict)     # id(Member) -> Field
    groups: dict = dc_field(default_factory=dict)     # id(Where) -> GroupIndex
    maps: dict = dc_field(default_factory=dict)       # id(Affine) -> AffineMap
    accesses: list = dc_field(default_factory=list)
    locals: dict = dc_field(default_factory=dict)     # name -> type of declared locals
    field_objs: dict = dc_field(default_factory=dict)  # qualname -> Field
    globals: dict = dc_field(default_factory=dict)    # name -> Global
    vector_blockers: list = dc_field(default_factory=list)

    @property
    def name(self) -> str:
        return self.ast.name

    def type_of(self, node):
        return self.types[id(node)]

    def signature(self) -> str:
        lines = [f"kernel {self.name}({self.ast.param} : {self.relation.name})"]
        for n, t in self.locals.items():
            lines.append(f"  var {n} : {t}")
        return "\n".join(lines)


def _err(msg: str, node) -> KernelTypeError:
    return KernelTypeError(msg, span=getattr(node, "span", None))


class _Checker:
    def __init__(self, env, kernel: Kernel):
        self.env = env
        try:
            rel = env.relation(kernel.relation)
        except SchemaError as exc:
            raise KernelTypeError(exc.message, span=kernel.span) from None
        self.tk = TypedKernel(kernel, rel)
        self.scopes: list[dict[str, Binding]] = [{kernel.param: Binding("param", T.key(rel.name))}]
        self.depth = 0

    def lookup(self, node: Name) -> Binding:
        for s in reversed(self.scopes):
            if node.id in s:
                return s[node.id]
        g = self.env.globals.get(node.id)
        if g is not None:
            self.tk.globals[g.name] = g
            return Binding("global", g.type)
        raise _err(f"unknown name {node.id!r}", node)

    def run(self) -> TypedKernel:
        self.block(self.tk.ast.body)
        return self.tk

    def block(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    # -- statements ----------------------------------------------------

    def stmt(self, s) -> None:
        if isinstance(s, VarDecl):
            t = self.expr(s.init)
            if isinstance(t, QueryType):
                raise _err("queries can only be used as loop ranges", s.init)
            if s.name in self.scopes[-1]:
                raise _err(f"variable {s.name!r} is already declared in this scope", s)
            self.scopes[-1][s.name] = Binding("local", t, self.depth)
            self.tk.locals[s.name] = t
        elif isinstance(s, Assign):
            self.store(s, s.target, s.value, None)
        elif isinstance(s, Reduce):
            if s.op not in REDUCE_OPS:
                raise _err(f"unknown reduction {s.op}=", s)
            self.store(s, s.target, s.value, s.op)
        elif isinstance(s, ExprStmt):
            t = self.expr(s.expr)
            if isinstance(t, QueryType):
                raise _err("queries can only be used as loop ranges", s.expr)
        elif isinstance(s, ForLoop):
            it = s.iterable
            if not isinstance(it, Where):
                raise _err("for-loops must range over a query (L.Where or a where accessor)", it)
            qt = self.expr(it)
            self.depth += 1
            self.scopes.append({s.var: Binding("loop", T.key(qt.target), self.depth)})
            self.block(s.body)
            self.scopes.pop()
            self.depth -= 1
        else:
            raise _err(f"unsupported statement {type(s).__name__}", s)

    def store(self, stmt, target, value, op) -> None:
        vt = self.expr(value)
        if isinstance(vt, QueryType):
            raise _err("queries can only be used as loop ranges", value)
        what = "reduce into" if op else "assign to"
        if isinstance(target, Name):
            b = self.lookup(target)
            self.tk.names[id(target)] = b
            self.tk.types[id(target)] = b.type
            if b.kind == "global":
                g = self.env.globals[target.id]
                if not g.mutable:
                    raise _err(f"assignment to constant {target.id!r}", target)
                if op is None:
                    raise _err(f"global {target.id!r} can only be reduced inside a kernel", target)
                self._check_reduce_type(g.type, vt, op, target)
                self.tk.accesses.append(Access(g.name, "reduce", stmt.span, op=op,
                                               in_loop=self.depth > 0, is_global=True,
                                               node_id=id(stmt)))
                return
            if b.kind != "local":
                raise _err(f"cannot {what} {b.kind} variable {target.id!r}", target)
            if op is not None:
                self._check_reduce_type(b.type, vt, op, target)
            elif not T.assignable(vt, b.type):
                raise _err(f"cannot assign {vt} to variable {target.id!r} of type {b.type}", stmt)
            if b.depth < self.depth:
                self.tk.vector_blockers.append(
                    f"variable {target.id!r} is updated inside a loop it was declared outside of")
            return
        assert isinstance(target, Member)
        fld = self.member(target, lvalue=True)
        if op is not None:
            self._check_reduce_type(fld.type, vt, op, stmt)
        elif not T.assignable(vt, fld.type):
            raise _err(f"cannot assign {vt} to field {fld.qualname} of type {fld.type}", stmt)
        centered = self.is_centered(target.obj)
        self.tk.accesses.append(Access(fld.qualname, "reduce" if op else "write", stmt.span,
                                       op=op, centered=centered, in_loop=self.depth > 0,
                                       node_id=id(stmt)))
        if op is None and self.depth > 0:
            self.tk.vector_blockers.append(f"field {fld.qualname} is assigned inside a loop")

    def _check_reduce_type(self, tt: FieldType, vt, op, node) -> None:
        if not tt.is_numeric:
            raise _err(f"cannot reduce ({op}=) into a value of type {tt}", node)
        if not T.assignable(vt, tt):
            raise _err(f"cannot reduce {vt} into {tt}", node)

    def is_centered(self, obj) -> bool:
        if not isinstance(obj, Name):
            return False
        b = self.tk.names.get(id(obj))
        return b is not None and b.kind == "param"

    # -- expressions -----------------------------------------------------

    def expr(self, e):
        t = self._expr(e)
        self.tk.types[id(e)] = t
        return t

    def member(self, e: Member, lvalue: bool = False) -> Field:
        ot = self.expr(e.obj)
        if not (isinstance(ot, FieldType) and ot.is_key and ot.is_scalar):
            raise _err(f"cannot access .{e.name} on a value of type {ot}", e)
        rel = self.env.relations[ot.target]
        fld = rel.fields.get(e.name)
        if fld is None:
            raise _err(f"relation {rel.name} has no field {e.name!r}", e)
        self.tk.fields[id(e)] = fld
        self.tk.field_objs[fld.qualname] = fld
        self.tk.types[id(e)] = fld.type
        if not lvalue:
            self.tk.accesses.append(Access(fld.qualname, "read", e.span,
                                           centered=self.is_centered(e.obj),
                                           in_loop=self.depth > 0, node_id=id(e)))
        return fld

    def _expr(self, e):
        if isinstance(e, Number):
            return FieldType(e.kind)
        if isinstance(e, Bool):
            return T.boolean
        if isinstance(e, Name):
            b = self.lookup(e)
            self.tk.names[id(e)] = b
            if b.kind == "global":
                g = self.env.globals[e.id]
                if g.mutable:
                    self.tk.accesses.append(Access(g.name, "read", e.span, is_global=True,
                                                   in_loop=self.depth > 0, node_id=id(e)))
            return b.type
        if isinstance(e, Member):
            return self.member(e).type
        if isinstance(e, (MethodCall, Apply)):
            raise _err("unexpanded accessor call; run expand_accessors first", e)
        if isinstance(e, Index):
            ot = self.expr(e.obj)
            if isinstance(ot, QueryType) or ot.is_scalar:
                raise _err(f"cannot index a value of type {ot}", e)
            if not 0 <= e.index < ot.shape[0]:
                raise _err(f"index {e.index} out of range for {ot}", e)
            return ot.with_shape(ot.shape[1:])
        if isinstance(e, VecLit):
            return self.veclit(e)
        if isinstance(e, UnOp):
            t = self.expr(e.operand)
            if e.op == "not":
                if t != T.boolean:
                    raise _err(f"'not' needs a bool, got {t}", e)
                return t
            self._numeric(t, e, "negate")
            return t
        if isinstance(e, BinOp):
            return self.binop(e)
        if isinstance(e, Builtin):
            return self.builtin(e)
        if isinstance(e, Where):
            return self.where(e)
        if isinstance(e, Affine):
            return self.affine(e)
        raise _err(f"unsupported expression {type(e).__name__}", e)

    def _numeric(self, t, node, what) -> None:
        if isinstance(t, QueryType):
            raise _err(f"cannot {what} a query", node)
        if t.is_key:
            raise _err(f"arithmetic on key values of {t.target} is not allowed", node)
        if not t.is_numeric:
            raise _err(f"cannot {what} a value of type {t}", node)

    def veclit(self, e: VecLit):
        ts = [self.expr(x) for x in e.items]
        if len(ts) > T.MAX_EXTENT:
            raise _err(f"vector literals hold at most {T.MAX_EXTENT} entries", e)
        if any(isinstance(t, QueryType) for t in ts):
            raise _err("queries cannot appear in vector literals", e)
        shapes = {t.shape for t in ts}
        if len(shapes) != 1 or len(next(iter(shapes))) > 1:
            raise _err("vector literal entries must be scalars or equal-length vectors", e)
        inner = ts[0].shape
        if all(t.is_numeric for t in ts):
            base = ts[0].base
            for t in ts[1:]:
                base = T.promote(base, t.base)
            return FieldType(base, (len(ts),) + inner)
        if all(t == ts[0] for t in ts) and (ts[0].base == "bool" or ts[0].is_key):
            return FieldType(ts[0].base, (len(ts),) + inner, ts[0].target)
        raise _err("vector literal entries have incompatible types", e)

    def binop(self, e: BinOp):
        lt, rt = self.expr(e.lhs), self.expr(e.rhs)
        op = e.op
        if op in ("and", "or"):
            if lt != T.boolean or rt != T.boolean:
                raise _err(f"'{op}' needs bool operands, got {lt} and {rt}", e)
            return T.boolean
        if op in _EQUALITY:
            if isinstance(lt, QueryType) or isinstance(rt, QueryType):
                raise _err("queries cannot be compared", e)
            if not (lt.is_scalar and rt.is_scalar):
                raise _err(f"'{op}' compares scalars, got {lt} and {rt}", e)
            if lt.is_key or rt.is_key:
                if lt != rt:
                    raise _err(f"cannot compare {lt} with {rt}", e)
            elif (lt.base == "bool") != (rt.base == "bool"):
                raise _err(f"cannot compare {lt} with {rt}", e)
            return T.boolean
        self._numeric(lt, e.lhs, f"apply '{op}' to")
        self._numeric(rt, e.rhs, f"apply '{op}' to")
        if op in _ORDER:
            if not (lt.is_scalar and rt.is_scalar):
                raise _err(f"'{op}' compares scalars, got {lt} and {rt}", e)
            return T.boolean
        base = T.promote(lt.base, rt.base)
        if op == "/" and base == "int64":
            base = "float64"
        if op in ("+", "-"):
            if lt.shape != rt.shape:
                raise _err(f"shape mismatch: {lt} {op} {rt}", e)
            return FieldType(base, lt.shape)
        if op == "*":
            if lt.is_scalar or rt.is_scalar:
                return FieldType(base, lt.shape or rt.shape)
            if len(lt.shape) == 2 and lt.shape[1] == rt.shape[0]:
                return FieldType(base, lt.shape[:1] + rt.shape[1:])
            raise _err(f"shape mismatch: {lt} * {rt} (use L.dot for vectors)", e)
        if op == "/":
            if not rt.is_scalar:
                raise _err(f"can only divide by a scalar, got {rt}", e)
            return FieldType(base, lt.shape)
        raise _err(f"unknown operator {op!r}", e)

    def builtin(self, e: Builtin):
        ts = [self.expr(a) for a in e.args]
        for a, t in zip(e.args, ts):
            self._numeric(t, a, f"pass to {e.name}")
        n = e.name
        fbase = lambda t: t.base if t.is_float else "float64"  # noqa: E731
        if n == "dot":
            a, b = ts
            if len(a.shape) != 1 or a.shape != b.shape:
                raise _err(f"dot needs two vectors of equal length, got {a} and {b}", e)
            return FieldType(T.promote(a.base, b.base))
        if n in ("len", "normalize"):
            (a,) = ts
            if len(a.shape) != 1:
                raise _err(f"{n} needs a vector, got {a}", e)
            return FieldType(fbase(a)) if n == "len" else FieldType(fbase(a), a.shape)
        if n == "cross":
            a, b = ts
            if a.shape != (3,) or b.shape != (3,):
                raise _err(f"cross needs two 3-vectors, got {a} and {b}", e)
            return FieldType(T.promote(a.base, b.base), (3,))
        if n in ("sqrt", "floor", "frac") or (n == "fmod" and len(ts) == 1):
            return FieldType(fbase(ts[0]), ts[0].shape)
        if n == "abs":
            return ts[0]
        if n == "fmod":
            a, b = ts
            if not b.is_scalar and b.shape != a.shape:
                raise _err(f"fmod divisor must be a scalar or match {a}", e)
            return FieldType(fbase(FieldType(T.promote(a.base, b.base))), a.shape)
        raise _err(f"unknown builtin {n!r}", e)

    def where(self, e: Where):
        try:
            rel = self.env.relation(e.relation)
        except SchemaError as exc:
            raise _err(exc.message, e) from None
        fld = rel.fields.get(e.field)
        if fld is None:
            raise _err(f"relation {rel.name} has no field {e.field!r}", e)
        if not (fld.type.is_key and fld.type.is_scalar):
            raise _err(f"{fld.qualname} is not a scalar key field", e)
        if rel.group is None or rel.group.field_name != e.field:
            raise _err(f"cannot loop over {fld.qualname}: {rel.name} is not grouped by {e.field}", e)
        kt = self.expr(e.key)
        if kt != T.key(fld.type.target):
            raise _err(f"query over {fld.qualname} needs a key of {fld.type.target}, got {kt}", e.key)
        self.tk.groups[id(e)] = rel.group
        self.tk.field_objs[fld.qualname] = fld
        self.tk.accesses.append(Access(fld.qualname, "read", e.span, in_loop=self.depth > 0,
                                       node_id=id(e)))
        return QueryType(rel.name)

    def affine(self, e: Affine):
        try:
            dest = self.env.relation(e.relation)
        except SchemaError as exc:
            raise _err(exc.message, e) from None
        kt = self.expr(e.key)
        if not (isinstance(kt, FieldType) and kt.is_key and kt.is_scalar):
            raise _err(f"affine indexing needs a key, got {kt}", e.key)
        src = self.env.relations[kt.target]
        if not (src.is_grid and dest.is_grid):
            raise _err("affine indexing connects grid relations", e)
        try:
            amap = AffineMap.from_rows(src, dest, e.rows)
        except SchemaError as exc:
            raise _err(exc.message, e) from None
        self.tk.maps[id(e)] = amap
        return T.key(dest.name)


def typecheck(kernel: Kernel, env) -> TypedKernel:
    """Type and resolve an accessor-expanded kernel against ``env``."""
    for node in kernel.walk():
        if isinstance(node, (MethodCall, Apply)):
            raise _err("unexpanded accessor call; run expand_accessors first", node)
    return _Checker(env, kernel).run()

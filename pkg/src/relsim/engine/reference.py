"""Scalar reference interpreter.

Runs a kernel one element at a time in ascending row order and applies every
write and reduction immediately. It is slow but obviously sequential, so the
vectorized and parallel paths are tested against it.
"""

from __future__ import annotations

import numpy as np

from ..errors import AffineBoundsError
from ..lang.nodes import (
    Affine, Assign, BinOp, Bool, Builtin, ExprStmt, ForLoop, Index, Member, Name, Number,
    Reduce, UnOp, VarDecl, VecLit, Where,
)
from . import ops
from .phases import PhaseMap
from .typecheck import TypedKernel


def affine_error(tk: TypedKernel, amap, element: int, key: int) -> AffineBoundsError:
    idx = amap.source.index_of(key)
    return AffineBoundsError(
        f"kernel {tk.name}: element {element}: {amap.describe()} maps {amap.source.name}{idx} "
        f"outside {amap.dest.name}{amap.dest.dims}",
        kernel=tk.name, element=element, map_desc=amap.describe())


class ReferenceInterpreter:
    """Tree-walking evaluator. ``trace(kind, qualname, row, element)`` observes field accesses."""

    def __init__(self, tk: TypedKernel, phases: PhaseMap, trace=None):
        self.tk = tk
        self.phases = phases
        self.trace = trace
        self.types = tk.types
        self.element = -1
        self.scopes: list[dict] = []

    def run(self, rows) -> None:
        body = self.tk.ast.body
        param = self.tk.ast.param
        with np.errstate(all="ignore"):
            for r in rows:
                self.element = int(r)
                self.scopes = [{param: int(r)}]
                self.block(body)

    # -- statements ----------------------------------------------------

    def block(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    def stmt(self, s) -> None:
        if isinstance(s, VarDecl):
            self.scopes[-1][s.name] = self.eval(s.init)
        elif isinstance(s, Assign):
            self.store(s.target, self.eval(s.value), None)
        elif isinstance(s, Reduce):
            self.store(s.target, self.eval(s.value), s.op)
        elif isinstance(s, ExprStmt):
            self.eval(s.expr)
        elif isinstance(s, ForLoop):
            it = s.iterable
            grp = self.tk.groups[id(it)]
            k = self.eval(it.key)
            lo, hi = int(grp.offsets[k]), int(grp.offsets[k + 1])
            if self.trace:
                self.trace("read", f"{it.relation}.{it.field}", None, self.element)
            for row in range(lo, hi):
                self.scopes.append({s.var: row})
                self.block(s.body)
                self.scopes.pop()

    def store(self, target, value, op) -> None:
        if isinstance(target, Name):
            b = self.tk.names[id(target)]
            if b.kind == "global":
                g = self.tk.globals[target.id]
                g._value = np.asarray(ops.REDUCE_UFUNCS[op](g._value, ops.cast(value, g.type.dtype)))
                return
            for sc in reversed(self.scopes):
                if target.id in sc:
                    if op is not None:
                        value = ops.REDUCE_UFUNCS[op](sc[target.id], ops.cast(value, b.type.dtype))
                    sc[target.id] = ops.cast(value, b.type.dtype) if not b.type.is_key else value
                    return
            raise AssertionError(target.id)
        fld = self.tk.fields[id(target)]
        row = self.eval(target.obj)
        data = fld.data
        if self.trace:
            self.trace("reduce" if op else "write", fld.qualname, row, self.element)
        if op is None:
            data[row] = value
        else:
            data[row] = ops.REDUCE_UFUNCS[op](data[row], ops.cast(value, fld.type.dtype))

    # -- expressions -----------------------------------------------------

    def lookup(self, name: str):
        for sc in reversed(self.scopes):
            if name in sc:
                return sc[name]
        raise AssertionError(name)

    def eval(self, e):
        t = type(e)
        if t is Name:
            b = self.tk.names[id(e)]
            if b.kind == "global":
                return self.tk.globals[e.id]._value
            return self.lookup(e.id)
        if t is Member:
            fld = self.tk.fields[id(e)]
            row = self.eval(e.obj)
            if self.trace:
                self.trace("read", fld.qualname, row, self.element)
            v = fld.data[row]
            if fld.type.is_key:
                return int(v) if fld.type.is_scalar else v.astype(np.int64)
            return v.copy() if fld.type.shape else v
        if t is Number:
            return np.array(e.value, dtype=e.kind)[()]
        if t is Bool:
            return np.bool_(e.value)
        if t is BinOp:
            tl, tr_ = self.types[id(e.lhs)], self.types[id(e.rhs)]
            return ops.binary(e.op, self.eval(e.lhs), self.eval(e.rhs), tl, tr_, self.types[id(e)])
        if t is UnOp:
            v = self.eval(e.operand)
            return np.logical_not(v) if e.op == "not" else np.negative(v)
        if t is Index:
            v = self.eval(e.obj)
            r = v[e.index]
            return int(r) if self.types[id(e)].is_key and np.ndim(r) == 0 else r
        if t is VecLit:
            return ops.veclit([self.eval(x) for x in e.items], self.types[id(e)], None)
        if t is Builtin:
            args = [self.eval(a) for a in e.args]
            return ops.builtin(e.name, args, [self.types[id(a)] for a in e.args], self.types[id(e)])
        if t is Affine:
            amap = self.tk.maps[id(e)]
            k = self.eval(e.key)
            out, ok = amap.apply_rows(np.array([k], dtype=np.int64))
            if not ok[0]:
                raise affine_error(self.tk, amap, self.element, k)
            return int(out[0])
        if t is Where:
            raise AssertionError("query outside a loop")
        raise AssertionError(f"cannot evaluate {t.__name__}")

"""Vectorized numpy backend.

A kernel is compiled into closures that evaluate one statement for a whole
block of elements ("lanes") at a time. Query loops flatten into child lane
sets with ``np.repeat``. Reductions into ``Reduce``-phase fields and into
globals are collected in a :class:`Sink` and applied afterwards in the same
element order the reference interpreter would use, so results match the
scalar path bit for bit.
"""

from __future__ import annotations

import numpy as np

from ..lang.nodes import (
    Affine, Assign, BinOp, Bool, Builtin, ExprStmt, ForLoop, Index, Member, Name, Number,
    Reduce, UnOp, VarDecl, VecLit, Where,
)
from . import ops
from .phases import PhaseMap
from .reference import affine_error
from .typecheck import TypedKernel

_MISSING = object()


class Lanes:
    """A set of element instances evaluated together."""

    __slots__ = ("n", "vars", "parent", "pidx", "span", "_elem", "order")

    def __init__(self, n, vars, parent=None, pidx=None, span=None, elem=None, order=None):
        self.n = n
        self.vars = vars
        self.parent = parent
        self.pidx = pidx
        self.span = span  # (start, stop) when the parameter rows are contiguous
        self._elem = elem
        self.order = order

    def get(self, name: str, ndim: int):
        v = self.vars.get(name, _MISSING)
        if v is _MISSING:
            pv = self.parent.get(name, ndim)
            v = pv[self.pidx] if np.ndim(pv) > ndim else pv
            self.vars[name] = v
        return v

    @property
    def elem(self) -> np.ndarray:
        if self._elem is None:
            self._elem = self.parent.elem[self.pidx]
        return self._elem


class Sink:
    """Deferred reduction contributions of one block."""

    def __init__(self):
        self.fields: dict[str, list] = {}
        self.globals: dict[str, list] = {}

    def add_field(self, name, rows, vals, keys) -> None:
        self.fields.setdefault(name, []).append((rows, vals, keys))

    def add_global(self, name, vals, keys) -> None:
        self.globals.setdefault(name, []).append((vals, keys))


def _ordered(parts, with_rows: bool):
    """Concatenate contributions and sort them by order key when present."""
    if with_rows:
        rows = np.concatenate([p[0] for p in parts])
        vals = np.concatenate([p[1] for p in parts])
        keys = [p[2] for p in parts]
    else:
        rows = None
        vals = np.concatenate([p[0] for p in parts])
        keys = [p[1] for p in parts]
    if keys[0] is not None and len(parts) > 1:
        width = max(k.shape[1] for k in keys)
        mat = np.concatenate([np.pad(k, ((0, 0), (0, width - k.shape[1]))) for k in keys])
        perm = np.lexsort(mat.T[::-1])
        vals = vals[perm]
        if rows is not None:
            rows = rows[perm]
    return rows, vals


def apply_field_contribs(field, op: str, parts) -> None:
    if not parts:
        return
    rows, vals = _ordered(parts, True)
    ops.REDUCE_UFUNCS[op].at(field.data, rows, vals)


def fold_global(op: str, start: np.ndarray, parts) -> np.ndarray:
    """``start op v0 op v1 ...`` evaluated strictly left to right."""
    if not parts:
        return start
    _, vals = _ordered(parts, False)
    seq = np.concatenate([start[None], vals])
    return ops.REDUCE_UFUNCS[op].accumulate(seq, axis=0)[-1]


class VectorKernel:
    def __init__(self, tk: TypedKernel, phases: PhaseMap):
        self.tk = tk
        self.phases = phases
        self.types = tk.types
        sites: dict[str, int] = {}
        for a in tk.accesses:
            if a.kind == "reduce":
                sites[a.name] = sites.get(a.name, 0) + 1
        self.multi_site = {n for n, c in sites.items() if c > 1}
        # Reduce-phase fields whose every site reduces through the parameter
        # key; a worker may apply those contributions for its own block.
        self.owned = set()
        self.shared = set()
        for q, ph in phases.fields.items():
            if ph.is_reduce:
                red = [a for a in tk.accesses if a.name == q and a.kind == "reduce"]
                (self.owned if all(a.centered for a in red) else self.shared).add(q)
        self.need_order = bool(self.multi_site)
        self.body = self.block(tk.ast.body)

    # -- execution -------------------------------------------------------

    def run_block(self, rows: np.ndarray, span) -> Sink:
        sink = Sink()
        if len(rows) == 0:
            return sink
        order = [rows] if self.need_order else None
        lanes = Lanes(len(rows), {self.tk.ast.param: rows}, span=span, elem=rows, order=order)
        with np.errstate(all="ignore"):
            for fn in self.body:
                fn(lanes, sink)
        return sink

    # -- statements ----------------------------------------------------

    def block(self, stmts):
        return [self.stmt(s, i) for i, s in enumerate(stmts)]

    def _keys(self, L: Lanes, s_index: int):
        cols = L.order + [np.full(L.n, s_index, dtype=np.int64)]
        return np.stack([np.broadcast_to(c, (L.n,)) for c in cols], axis=1)

    def stmt(self, s, s_index: int):
        if isinstance(s, VarDecl):
            init = self.expr(s.init)
            name = s.name

            def decl(L, sink):
                L.vars[name] = init(L)
            return decl
        if isinstance(s, ExprStmt):
            fn = self.expr(s.expr)
            return lambda L, sink: fn(L)
        if isinstance(s, ForLoop):
            return self.loop(s, s_index)
        op = s.op if isinstance(s, Reduce) else None
        value = self.expr(s.value)
        target = s.target
        if isinstance(target, Name):
            return self.store_name(target, value, op, s_index)
        return self.store_field(target, value, op, s, s_index)

    def store_name(self, target: Name, value, op, s_index):
        b = self.tk.names[id(target)]
        name = target.id
        if b.kind == "global":
            g = self.tk.globals[name]
            dt, shape = g.type.dtype, g.type.shape
            multi = name in self.multi_site

            def greduce(L, sink):
                v = np.broadcast_to(ops.cast(value(L), dt), (L.n,) + shape)
                sink.add_global(name, v, self._keys(L, s_index) if multi else None)
            return greduce
        dt = b.type.dtype
        nd = len(b.type.shape)
        is_key = b.type.is_key
        if op is None:
            def assign(L, sink):
                v = value(L)
                L.vars[name] = v if is_key else ops.cast(v, dt)
            return assign
        uf = ops.REDUCE_UFUNCS[op]

        def local_reduce(L, sink):
            L.vars[name] = uf(L.get(name, nd), ops.cast(value(L), dt))
        return local_reduce

    def store_field(self, target: Member, value, op, s, s_index):
        fld = self.tk.fields[id(target)]
        obj = self.expr(target.obj)
        centered = self._centered(target.obj)
        dt, shape = fld.type.dtype, fld.type.shape
        q = fld.qualname
        if op is not None and self.phases.fields[q].is_reduce:
            multi = q in self.multi_site

            def freduce(L, sink):
                rows = obj(L)
                v = np.broadcast_to(ops.cast(value(L), dt), (L.n,) + shape)
                sink.add_field(q, rows, v, self._keys(L, s_index) if multi else None)
            return freduce
        uf = None if op is None else ops.REDUCE_UFUNCS[op]

        def write(L, sink):
            v = value(L)
            data = fld.data
            if centered and L.parent is None and L.span is not None:
                a, b = L.span
                if uf is None:
                    data[a:b] = v
                else:
                    data[a:b] = uf(data[a:b], ops.cast(v, dt))
                return
            rows = obj(L)
            if uf is None:
                data[rows] = v
            else:
                data[rows] = uf(data[rows], ops.cast(v, dt))
        return write

    def loop(self, s: ForLoop, s_index: int):
        it: Where = s.iterable
        grp = self.tk.groups[id(it)]
        keyfn = self.expr(it.key)
        body = self.block(s.body)
        var = s.var
        need_order = self.need_order

        def run(L, sink):
            keys = keyfn(L)
            off = grp.offsets
            begin = off[keys]
            cnt = off[keys + 1] - begin
            total = int(cnt.sum())
            if total == 0:
                return
            pidx = np.repeat(np.arange(L.n), cnt)
            first = np.cumsum(cnt) - cnt
            itn = np.arange(total) - first[pidx]
            rows = begin[pidx] + itn
            order = None
            if need_order:
                order = [np.broadcast_to(c, (L.n,))[pidx] for c in L.order]
                order += [np.full(total, s_index, dtype=np.int64), itn]
            child = Lanes(total, {var: rows}, parent=L, pidx=pidx, order=order)
            for fn in body:
                fn(child, sink)
        return run

    # -- expressions -----------------------------------------------------

    def _centered(self, obj) -> bool:
        if not isinstance(obj, Name):
            return False
        b = self.tk.names.get(id(obj))
        return b is not None and b.kind == "param"

    def expr(self, e):
        t = type(e)
        types = self.types
        if t is Number:
            const = np.array(e.value, dtype=e.kind)
            return lambda L: const
        if t is Bool:
            const = np.array(e.value)
            return lambda L: const
        if t is Name:
            b = self.tk.names[id(e)]
            if b.kind == "global":
                g = self.tk.globals[e.id]
                return lambda L: g._value
            name, nd = e.id, len(b.type.shape)
            return lambda L: L.get(name, nd)
        if t is Member:
            return self.member(e)
        if t is BinOp:
            lhs, rhs = self.expr(e.lhs), self.expr(e.rhs)
            tl, tr_, tres = types[id(e.lhs)], types[id(e.rhs)], types[id(e)]
            op = e.op
            return lambda L: ops.binary(op, lhs(L), rhs(L), tl, tr_, tres)
        if t is UnOp:
            fn = self.expr(e.operand)
            if e.op == "not":
                return lambda L: np.logical_not(fn(L))
            return lambda L: np.negative(fn(L))
        if t is Index:
            fn = self.expr(e.obj)
            inner = len(types[id(e.obj)].shape) - 1
            sel = (Ellipsis, e.index) + (slice(None),) * inner
            return lambda L: fn(L)[sel]
        if t is VecLit:
            items = [self.expr(x) for x in e.items]
            tr_ = types[id(e)]
            item_nd = len(tr_.shape) - 1

            def veclit(L):
                vals = [f(L) for f in items]
                laned = any(np.ndim(v) > item_nd for v in vals)
                return ops.veclit(vals, tr_, L.n if laned else None)
            return veclit
        if t is Builtin:
            args = [self.expr(a) for a in e.args]
            ats = [types[id(a)] for a in e.args]
            tr_ = types[id(e)]
            name = e.name
            return lambda L: ops.builtin(name, [f(L) for f in args], ats, tr_)
        if t is Affine:
            return self.affine(e)
        raise AssertionError(f"cannot compile {t.__name__}")

    def member(self, e: Member):
        fld = self.tk.fields[id(e)]
        obj = self.expr(e.obj)
        centered = self._centered(e.obj)
        is_key = fld.type.is_key

        def read(L):
            data = fld.data
            if is_key:
                data = data.view(np.int64)
            if centered and L.parent is None and L.span is not None:
                a, b = L.span
                return data[a:b].copy()
            return data[obj(L)]
        return read

    def affine(self, e: Affine):
        amap = self.tk.maps[id(e)]
        keyfn = self.expr(e.key)
        centered = self._centered(e.key)
        tk = self.tk
        cache: list = []

        def apply(L):
            keys = keyfn(L)
            if centered and L.parent is None and L.span is not None:
                if not cache:
                    cache.append(amap.apply_rows(np.arange(amap.source.count, dtype=np.int64)))
                a, b = L.span
                out, ok = cache[0][0][a:b], cache[0][1][a:b]
            else:
                out, ok = amap.apply_rows(keys)
            if not ok.all():
                bad = int(np.argmin(ok))
                raise affine_error(tk, amap, int(L.elem[bad]), int(keys[bad]))
            return out
        return apply

"""Arithmetic shared by the reference interpreter and the vectorized backend.

Values are numpy arrays whose trailing axes are the static type shape; the
vectorized backend adds leading lane axes. Every helper evaluates in the
same operation order either way, which is what makes the two backends agree
bit for bit.
"""

from __future__ import annotations

import numpy as np

from ..types import FieldType, promote

REDUCE_UFUNCS = {"+": np.add, "*": np.multiply, "max": np.maximum, "min": np.minimum}

_BINARY = {"+": np.add, "-": np.subtract, "/": np.divide,
           "<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
           "==": np.equal, "!=": np.not_equal, "and": np.logical_and, "or": np.logical_or}


def identity(op: str, dtype) -> np.ndarray:
    """Neutral element of reduction ``op`` for ``dtype``."""
    dt = np.dtype(dtype)
    if op == "+":
        return np.zeros((), dt)
    if op == "*":
        return np.ones((), dt)
    if dt.kind == "f":
        return np.array(-np.inf if op == "max" else np.inf, dt)
    info = np.iinfo(dt)
    return np.array(info.min if op == "max" else info.max, dt)


def reduce_combine(op: str, partials, dtype=np.float64):
    """Fold per-worker partial results left to right in worker-index order.

    >>> float(reduce_combine("+", [1.5, 2.5, 0.0, 6.0]))
    10.0
    >>> float(reduce_combine("max", []))
    -inf
    """
    if op not in REDUCE_UFUNCS:
        raise ValueError(f"unknown reduction {op!r}")
    f = REDUCE_UFUNCS[op]
    acc = identity(op, dtype)
    for p in partials:
        acc = f(acc, np.asarray(p, dtype=acc.dtype))
    return acc


def cast(x, dtype) -> np.ndarray:
    x = np.asarray(x)
    return x if x.dtype == dtype else x.astype(dtype)


def _expand(x: np.ndarray, ndim: int) -> np.ndarray:
    # Append ``ndim`` unit axes so a scalar broadcasts against a tensor.
    return x[(...,) + (None,) * ndim] if ndim else x


def binary(op: str, a, b, ta: FieldType, tb: FieldType, tr: FieldType):
    """Evaluate ``a op b`` for operands of static types ``ta``/``tb`` and result ``tr``."""
    if op in ("and", "or"):
        return _BINARY[op](a, b)
    if op in ("<", "<=", ">", ">=", "==", "!="):
        if ta.is_numeric and tb.is_numeric and not (ta.is_key or tb.is_key):
            dt = np.dtype(promote(ta.base, tb.base))
            a, b = cast(a, dt), cast(b, dt)
        return _BINARY[op](a, b)
    dt = tr.dtype
    a, b = cast(a, dt), cast(b, dt)
    if op in ("+", "-"):
        return _BINARY[op](a, b)
    if op == "/":
        return np.divide(a, _expand(b, len(ta.shape)))
    # multiplication
    if ta.is_scalar:
        return np.multiply(_expand(a, len(tb.shape)), b)
    if tb.is_scalar:
        return np.multiply(a, _expand(b, len(ta.shape)))
    if len(tb.shape) == 1:
        return matvec(a, b)
    return matmat(a, b)


def matvec(m, v):
    m_cols = m.shape[-1]
    acc = m[..., :, 0] * v[..., None, 0]
    for k in range(1, m_cols):
        acc = acc + m[..., :, k] * v[..., None, k]
    return acc


def matmat(a, b):
    inner = a.shape[-1]
    acc = a[..., :, 0, None] * b[..., None, 0, :]
    for k in range(1, inner):
        acc = acc + a[..., :, k, None] * b[..., None, k, :]
    return acc


def dot(a, b):
    acc = a[..., 0] * b[..., 0]
    for k in range(1, a.shape[-1]):
        acc = acc + a[..., k] * b[..., k]
    return acc


def length(a):
    return np.sqrt(dot(a, a))


def normalize(a):
    return a / length(a)[..., None]


def cross(a, b):
    x = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    y = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    z = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return np.stack([x, y, z], axis=-1)


def frac(a):
    return a - np.floor(a)


def builtin(name: str, args, arg_types, tr: FieldType):
    if name in ("dot", "cross"):
        a, b = (cast(x, tr.dtype) for x in args)
        return dot(a, b) if name == "dot" else cross(a, b)
    if name == "abs":
        return np.abs(args[0])
    a = cast(args[0], tr.dtype)
    if name == "len":
        return length(a)
    if name == "normalize":
        return normalize(a)
    if name == "sqrt":
        return np.sqrt(a)
    if name == "floor":
        return np.floor(a)
    if name == "frac" or (name == "fmod" and len(args) == 1):
        return frac(a)
    if name == "fmod":
        b = cast(args[1], tr.dtype)
        if arg_types[1].is_scalar:
            b = _expand(b, len(tr.shape))
        return np.fmod(a, b)
    raise ValueError(f"unknown builtin {name!r}")


def veclit(items, tr: FieldType, lanes: int | None):
    """Stack literal entries along a new type axis placed after any lane axes."""
    dt = np.dtype(np.int64) if tr.is_key else tr.dtype
    parts = [cast(x, dt) for x in items]
    if lanes is not None:
        inner = tr.shape[1:]
        parts = [np.broadcast_to(p, (lanes,) + inner) for p in parts]
        return np.stack(parts, axis=1)
    return np.stack(parts, axis=0)

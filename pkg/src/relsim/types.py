"""Value types for fields, globals and kernel expressions.

A type is a base (``float32``, ``float64``, ``int64``, ``bool`` or a key into a
named relation) plus a shape: ``()`` for scalars, ``(n,)`` for vectors and
``(n, m)`` for small matrices, with every extent at most 4.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError

NUMERIC_BASES = ("int64", "float32", "float64")
BASES = NUMERIC_BASES + ("bool", "key")
MAX_EXTENT = 4

_DTYPES = {
    "float32": np.dtype(np.float32),
    "float64": np.dtype(np.float64),
    "int64": np.dtype(np.int64),
    "bool": np.dtype(np.bool_),
    "key": np.dtype(np.uint64),
}
_RANK = {"int64": 0, "float32": 1, "float64": 2}


@dataclass(frozen=True)
class FieldType:
    base: str
    shape: tuple[int, ...] = ()
    target: str | None = None

    def __post_init__(self):
        if self.base not in BASES:
            raise SchemaError(f"unknown base type {self.base!r}")
        if (self.base == "key") != (self.target is not None):
            raise SchemaError("key types (and only key types) carry a target relation")
        if len(self.shape) > 2 or any(not 1 <= n <= MAX_EXTENT for n in self.shape):
            raise SchemaError(f"unsupported shape {self.shape}; extents must be in 1..{MAX_EXTENT}")

    @property
    def is_key(self) -> bool:
        return self.base == "key"

    @property
    def is_numeric(self) -> bool:
        return self.base in NUMERIC_BASES

    @property
    def is_float(self) -> bool:
        return self.base in ("float32", "float64")

    @property
    def is_scalar(self) -> bool:
        return self.shape == ()

    @property
    def dtype(self) -> np.dtype:
        """Storage dtype. Keys are stored as unsigned 64-bit row ids."""
        return _DTYPES[self.base]

    @property
    def components(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    def elem(self) -> "FieldType":
        return FieldType(self.base, (), self.target)

    def with_shape(self, shape: tuple[int, ...]) -> "FieldType":
        return FieldType(self.base, tuple(shape), self.target)

    def with_base(self, base: str) -> "FieldType":
        return FieldType(base, self.shape, None)

    def __str__(self) -> str:
        inner = f"key({self.target})" if self.is_key else self.base
        if len(self.shape) == 1:
            return f"vec{self.shape[0]}({inner})"
        if len(self.shape) == 2:
            return f"mat{self.shape[0]}x{self.shape[1]}({inner})"
        return inner


def key(target: str, shape: tuple[int, ...] = ()) -> FieldType:
    return FieldType("key", tuple(shape), target)


def vector(base: str | FieldType, n: int) -> FieldType:
    if isinstance(base, FieldType):
        return FieldType(base.base, (n,), base.target)
    return FieldType(base, (n,))


def matrix(base: str | FieldType, n: int, m: int) -> FieldType:
    if isinstance(base, FieldType):
        return FieldType(base.base, (n, m), base.target)
    return FieldType(base, (n, m))


float32 = FieldType("float32")
float64 = FieldType("float64")
int64 = FieldType("int64")
boolean = FieldType("bool")

_ALIASES = {
    "float": "float64", "double": "float64", "f64": "float64", "f32": "float32",
    "int": "int64", "i64": "int64",
}
_SHORT_VEC = re.compile(r"^vec([1-4])([fdi])$")
_VEC = re.compile(r"^vec([1-4])\((.+)\)$")
_MAT = re.compile(r"^mat([1-4])x([1-4])\((.+)\)$")
_KEY = re.compile(r"^key\(([^()]+)\)$")


def parse_type(text: str) -> FieldType:
    """Parse ``float64``, ``vec3(float64)``, ``mat4x4(key(edges))``, ``vec3f``..."""
    s = text.strip().replace(" ", "")
    if m := _SHORT_VEC.match(s):
        base = {"f": "float32", "d": "float64", "i": "int64"}[m.group(2)]
        return FieldType(base, (int(m.group(1)),))
    if m := _VEC.match(s):
        return vector(parse_type(m.group(2)), int(m.group(1)))
    if m := _MAT.match(s):
        return matrix(parse_type(m.group(3)), int(m.group(1)), int(m.group(2)))
    if m := _KEY.match(s):
        return key(m.group(1))
    s = _ALIASES.get(s, s)
    if s in BASES and s != "key":
        return FieldType(s)
    raise SchemaError(f"cannot parse type {text!r}")


def promote(a: str, b: str) -> str:
    """Arithmetic result base of two numeric bases."""
    return a if _RANK[a] >= _RANK[b] else b


def assignable(src: FieldType, dst: FieldType) -> bool:
    """Whether a value of type ``src`` may be stored into a slot of type ``dst``.

    Shapes must agree. Floats accept any numeric value (rounded on store);
    integers, booleans and keys require an exact base match.
    """
    if src.shape != dst.shape:
        return False
    if dst.is_float:
        return src.is_numeric
    if dst.is_key:
        return src.is_key and src.target == dst.target
    return src.base == dst.base

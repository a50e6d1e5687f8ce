"""Relations, fields and the relational primitives built on them.

Everything lives in a :class:`Runtime`. Storage is a column store: each field
owns one contiguous numpy array of shape ``(count, *element_shape)``. Keys are
row ids stored as ``uint64``; grid rows are linearized row-major with x
fastest, so the row of ``(i, j)`` on an ``nx`` by ``ny`` grid is ``j*nx + i``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field
from typing import Any, Iterable, Sequence

import numpy as np

from . import types as T
from .errors import (
    GroupingError,
    KeyBoundsError,
    NaNGuardError,
    SchemaError,
    StaleViewError,
    TypeMismatchError,
)
from .types import FieldType


@dataclass
class Geometry:
    origin: np.ndarray
    width: np.ndarray


class Relation:
    """A table of elements, either a flat list of ``size`` rows or a 2D/3D grid."""

    def __init__(self, runtime: "Runtime", name: str, size: int | None = None,
                 dims: Sequence[int] | None = None, periodic: Sequence[bool] | None = None,
                 allow_empty: bool = False):
        if (size is None) == (dims is None):
            raise SchemaError("a relation needs exactly one of size or dims")
        self.runtime = runtime
        self.name = name
        if dims is not None:
            dims = tuple(int(d) for d in dims)
            if len(dims) not in (2, 3):
                raise SchemaError(f"grid relation {name!r} needs 2 or 3 dims, got {len(dims)}")
            if any(d < 1 for d in dims):
                raise SchemaError(f"grid relation {name!r} has a non-positive dimension {dims}")
            if periodic is None:
                periodic = (False,) * len(dims)
            periodic = tuple(bool(p) for p in periodic)
            if len(periodic) != len(dims):
                raise SchemaError("periodic flags must match the number of dims")
            self.dims: tuple[int, ...] | None = dims
            self.periodic: tuple[bool, ...] = periodic
            self.count = math.prod(dims)
        else:
            size = int(size)
            if size < 0:
                raise SchemaError(f"relation {name!r} has negative size")
            if size == 0 and not allow_empty:
                raise SchemaError(f"relation {name!r} must have at least one row")
            self.dims = None
            self.periodic = ()
            self.count = size
        self.fields: dict[str, Field] = {}
        self.subsets: dict[str, Subset] = {}
        self.accessors: dict[str, Accessor] = {}
        self.group: GroupIndex | None = None
        self.geometry: Geometry | None = None

    def __repr__(self) -> str:
        shape = f"dims={self.dims}" if self.is_grid else f"size={self.count}"
        return f"Relation({self.name!r}, {shape})"

    def __getitem__(self, name: str) -> "Field":
        return self.fields[name]

    @property
    def is_grid(self) -> bool:
        return self.dims is not None

    # -- grid indexing -------------------------------------------------

    def row_of(self, index: Sequence[int]) -> int:
        if not self.is_grid:
            raise SchemaError(f"{self.name} is not a grid relation")
        if len(index) != len(self.dims):
            raise SchemaError(f"index {tuple(index)} does not match dims {self.dims}")
        row, stride = 0, 1
        for i, d in zip(index, self.dims):
            if not 0 <= i < d:
                raise KeyBoundsError(f"index {tuple(index)} outside grid {self.dims}")
            row += int(i) * stride
            stride *= d
        return row

    def index_of(self, row: int) -> tuple[int, ...]:
        if not self.is_grid:
            raise SchemaError(f"{self.name} is not a grid relation")
        if not 0 <= row < self.count:
            raise KeyBoundsError(f"row {row} outside relation {self.name}")
        out = []
        for d in self.dims:
            out.append(int(row % d))
            row //= d
        return tuple(out)

    def unravel(self, rows: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`index_of`; returns an ``(n, ndims)`` int64 array."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = []
        for d in self.dims:
            cols.append(rows % d)
            rows = rows // d
        return np.stack(cols, axis=-1)

    def ravel(self, index: np.ndarray) -> np.ndarray:
        index = np.asarray(index, dtype=np.int64)
        row = np.zeros(index.shape[:-1], dtype=np.int64)
        stride = 1
        for k, d in enumerate(self.dims):
            row += index[..., k] * stride
            stride *= d
        return row

    # -- convenience wrappers over the runtime -------------------------

    def new_field(self, name: str, type: FieldType | str, init: Any = None) -> "Field":
        return self.runtime.create_field(self, name, type, init)

    def group_by(self, field_name: str) -> "GroupIndex":
        return self.runtime.group_by(self, field_name)

    def new_subset(self, name: str, *, box=None, mask=None) -> "Subset":
        return self.runtime.create_subset(self, name, box=box, mask=mask)

    def set_geometry(self, origin: Sequence[float], width: float | Sequence[float]) -> None:
        if not self.is_grid:
            raise SchemaError("geometry only applies to grid relations")
        origin = np.asarray(origin, dtype=np.float64)
        width = np.broadcast_to(np.asarray(width, dtype=np.float64), origin.shape).copy()
        if origin.shape != (len(self.dims),):
            raise SchemaError("origin must have one entry per grid dimension")
        if np.any(width <= 0):
            raise SchemaError("cell width must be positive")
        self.geometry = Geometry(origin, width)

    def define_alias(self, name: str, field_name: str) -> None:
        if field_name not in self.fields or not self.fields[field_name].type.is_key:
            raise SchemaError(f"alias {name!r} must name a key field of {self.name}")
        self._add_accessor(Accessor(self, name, "alias", field_name=field_name))

    def define_where(self, name: str, target: "Relation", field_name: str) -> None:
        fld = target.fields.get(field_name)
        if fld is None or fld.type != T.key(self.name):
            raise SchemaError(f"{target.name}.{field_name} is not a scalar key into {self.name}")
        self._add_accessor(Accessor(self, name, "where", target=target, field_name=field_name))

    def define_affine(self, name: str, amap: "AffineMap", params: int = 0) -> None:
        """Install an affine neighbor accessor.

        With ``params == n`` the accessor takes ``n`` integer literals that are
        added to the map's offset, one per destination dimension.
        """
        if amap.source is not self:
            raise SchemaError("affine accessor map must start at the owning relation")
        if params not in (0, len(amap.dest.dims)):
            raise SchemaError("parameterized affine accessors take one offset per dest dim")
        self._add_accessor(Accessor(self, name, "affine", amap=amap, params=params))

    def _add_accessor(self, acc: "Accessor") -> None:
        if acc.name in self.fields or acc.name in self.accessors:
            raise SchemaError(f"{self.name} already has a member named {acc.name!r}")
        self.accessors[acc.name] = acc


class Field:
    def __init__(self, owner: Relation, name: str, type: FieldType):
        self.owner = owner
        self.name = name
        self.type = type
        self.data = np.zeros((owner.count,) + type.shape, dtype=type.dtype)

    def __repr__(self) -> str:
        return f"Field({self.qualname!r}, {self.type})"

    @property
    def qualname(self) -> str:
        return f"{self.owner.name}.{self.name}"

    @property
    def target(self) -> Relation | None:
        if not self.type.is_key:
            return None
        return self.owner.runtime.relations[self.type.target]

    def key_rows(self) -> np.ndarray:
        """Key data reinterpreted as int64 (zero-copy)."""
        return self.data.view(np.int64)

    def load(self, init: Any) -> "Field":
        rt = self.owner.runtime
        if isinstance(init, Field):
            if init.type != self.type or init.owner.count != self.owner.count:
                raise TypeMismatchError(f"cannot copy {init.qualname} ({init.type}) into {self.type}")
            values = init.data.copy()
        elif isinstance(init, (str, os.PathLike)):
            from .io.fields import read_field_file

            values = read_field_file(init, self.type, self.owner.count)
        else:
            arr = np.asarray(init)
            if arr.shape == self.type.shape or (arr.shape == () and not self.type.is_key):
                values = np.broadcast_to(arr, self.data.shape)
            elif arr.shape == self.data.shape:
                values = arr
            else:
                raise SchemaError(
                    f"init for {self.qualname} has shape {arr.shape}; expected "
                    f"{self.type.shape} (constant) or {self.data.shape} (per-row values)")
            if self.type.is_key or self.type.base == "int64":
                if arr.dtype.kind not in "biu":
                    raise TypeMismatchError(f"{self.qualname} needs integer values")
            elif self.type.base == "bool" and arr.dtype.kind != "b":
                raise TypeMismatchError(f"{self.qualname} needs boolean values")
        if self.type.is_key:
            values = np.asarray(values)
            n = rt.relations[self.type.target].count
            out = (values < 0) | (values >= n)
            bad = np.flatnonzero(out.reshape(len(values), -1).any(axis=1)) if values.size else []
            if len(bad):
                r = int(bad[0])
                raise KeyBoundsError(
                    f"key value {values[r]!r} at row {r} of {self.qualname} is out of bounds "
                    f"for {self.type.target} ({n} rows)",
                    field=self.qualname)
        self.data[...] = values
        return self


class Subset:
    def __init__(self, owner: Relation, name: str, rows: np.ndarray):
        self.owner = owner
        self.name = name
        self.rows = np.asarray(rows, dtype=np.int64)

    def __repr__(self) -> str:
        return f"Subset({self.owner.name}.{self.name}, {len(self.rows)} rows)"

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.owner.count, dtype=bool)
        m[self.rows] = True
        return m


class GroupIndex:
    """Inverted index of ``target.field`` built by :meth:`Runtime.group_by`.

    ``offsets`` has ``source.count + 1`` entries; source row ``s`` owns target
    rows ``offsets[s]:offsets[s+1]`` (CSR layout).
    """

    def __init__(self, source: Relation, target: Relation, field_name: str, offsets: np.ndarray):
        self.source = source
        self.target = target
        self.field_name = field_name
        self.offsets = offsets

    def __repr__(self) -> str:
        return f"GroupIndex({self.target.name}.{self.field_name} -> {self.source.name})"

    def query_range(self, source_key: int) -> range:
        return range(int(self.offsets[source_key]), int(self.offsets[source_key + 1]))

    def ranges(self) -> list[tuple[int, int]]:
        o = self.offsets
        return [(int(o[s]), int(o[s + 1])) for s in range(self.source.count)]


class AffineMap:
    """``dest_index = A @ source_index + b`` between two grid relations."""

    def __init__(self, source: Relation, dest: Relation, A, b=None):
        if not (source.is_grid and dest.is_grid):
            raise SchemaError("affine maps connect grid relations")
        A = np.asarray(A, dtype=np.int64)
        b = np.zeros(len(dest.dims), dtype=np.int64) if b is None else np.asarray(b, dtype=np.int64)
        if A.shape != (len(dest.dims), len(source.dims)) or b.shape != (len(dest.dims),):
            raise SchemaError(
                f"affine map {source.name}->{dest.name} needs A of shape "
                f"{(len(dest.dims), len(source.dims))} and b of length {len(dest.dims)}")
        self.source = source
        self.dest = dest
        self.A = A
        self.b = b

    @classmethod
    def from_rows(cls, source: Relation, dest: Relation, rows) -> "AffineMap":
        """Build from the augmented ``[A | b]`` row form, e.g. ``{{1,0,x},{0,1,y}}``."""
        M = np.asarray(rows, dtype=np.int64)
        return cls(source, dest, M[:, :-1], M[:, -1])

    def shifted(self, offsets: Sequence[int]) -> "AffineMap":
        return AffineMap(self.source, self.dest, self.A, self.b + np.asarray(offsets, dtype=np.int64))

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self ∘ inner``: apply ``inner`` first.

        Composition is exact integer arithmetic, so it agrees with applying the
        two maps in turn whenever ``inner`` lands inside its destination
        without wrapping. Translations on periodic grids also agree.
        """
        if inner.dest is not self.source:
            raise SchemaError("cannot compose affine maps with mismatched relations")
        return AffineMap(inner.source, self.dest, self.A @ inner.A, self.A @ inner.b + self.b)

    def describe(self) -> str:
        rows = ",".join("{" + ",".join(str(int(v)) for v in list(a) + [c]) + "}"
                        for a, c in zip(self.A, self.b))
        return f"Affine({self.source.name}->{self.dest.name}, {{{rows}}})"

    __repr__ = describe

    def apply_rows(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map source rows to dest rows. Returns ``(dest_rows, ok_mask)``."""
        src = self.source.unravel(rows)
        dst = src @ self.A.T + self.b
        ok = np.ones(len(dst), dtype=bool)
        for k, (d, per) in enumerate(zip(self.dest.dims, self.dest.periodic)):
            if per:
                dst[:, k] %= d
            else:
                ok &= (dst[:, k] >= 0) & (dst[:, k] < d)
        np.clip(dst, 0, np.asarray(self.dest.dims) - 1, out=dst)
        return self.dest.ravel(dst), ok

    def apply(self, key: int) -> int:
        out, ok = self.apply_rows(np.array([key], dtype=np.int64))
        if not ok[0]:
            raise KeyBoundsError(
                f"{self.describe()} maps {self.source.index_of(key)} outside {self.dest.dims}")
        return int(out[0])


@dataclass(frozen=True)
class Accessor:
    """A named neighbor accessor on a relation (a macro in kernel source)."""

    owner: Relation
    name: str
    kind: str  # "alias" | "where" | "affine"
    field_name: str | None = None
    target: Relation | None = None
    amap: AffineMap | None = None
    params: int = 0


class Global:
    """A single value readable and reducible from kernels."""

    mutable = True

    def __init__(self, name: str, type: FieldType, value=0):
        if not (type.is_numeric or type.base == "bool"):
            raise SchemaError("globals must have numeric or boolean type")
        self.name = name
        self.type = type
        self._value = np.zeros(type.shape, dtype=type.dtype)
        self._store(value)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, {self.type}, {self.get()!r})"

    def _store(self, value) -> None:
        arr = np.asarray(value)
        if arr.shape != self.type.shape:
            raise TypeMismatchError(
                f"{self.name} has type {self.type}; cannot store value of shape {arr.shape}")
        if arr.dtype.kind not in "biuf":
            raise TypeMismatchError(f"{self.name}: value must be numeric")
        if self.type.base in ("int64", "bool") and arr.dtype.kind == "f":
            raise TypeMismatchError(f"{self.name} has type {self.type}; got a float value")
        self._value = np.array(arr, dtype=self.type.dtype)

    def get(self):
        v = self._value
        return v.item() if v.shape == () else v.copy()

    def set(self, value) -> None:
        self._store(value)

    @property
    def array(self) -> np.ndarray:
        return self._value


class Constant(Global):
    mutable = False

    def set(self, value) -> None:
        raise TypeMismatchError(f"constant {self.name} cannot be changed")


_SCALAR_KINDS = {"float32": "float32", "float64": "float64", "int64": "int64",
                 "bool": "bool", "key": "uint64"}


@dataclass
class BufferView:
    """Zero-copy description of a live field column."""

    field: Field
    count: int
    components: int
    scalar: str
    width: int
    stride: int
    generation: int = dc_field(repr=False)

    @property
    def valid(self) -> bool:
        return self.generation == self.field.owner.runtime.generation

    @property
    def array(self) -> np.ndarray:
        """``(count, components)`` numpy view aliasing the field storage."""
        if not self.valid:
            raise StaleViewError(f"view of {self.field.qualname} outlived a structural operation")
        return self.field.data.reshape(self.count, self.components)

    def memoryview(self) -> memoryview:
        return memoryview(self.array)


class Runtime:
    """Registry of relations, globals and constants; the kernel environment."""

    def __init__(self):
        self.relations: dict[str, Relation] = {}
        self.globals: dict[str, Global] = {}
        self.generation = 0
        self._engine = None

    def _structural(self) -> None:
        self.generation += 1

    # -- relations and fields -----------------------------------------

    def create_relation(self, name: str, size: int | None = None, *, dims=None,
                        periodic=None, allow_empty: bool = False) -> Relation:
        """Register a new relation. Empty relations need ``allow_empty``."""
        if name in self.relations:
            raise SchemaError(f"relation {name!r} already exists")
        rel = Relation(self, name, size=size, dims=dims, periodic=periodic,
                       allow_empty=allow_empty)
        self.relations[name] = rel
        self._structural()
        return rel

    def relation(self, path: str) -> Relation:
        """Resolve ``edges`` or a host-style path like ``dragon.edges``."""
        if path in self.relations:
            return self.relations[path]
        tail = path.rsplit(".", 1)[-1]
        if tail in self.relations:
            return self.relations[tail]
        hits = [r for n, r in self.relations.items() if n.endswith("." + path)]
        if len(hits) == 1:
            return hits[0]
        raise SchemaError(f"unknown relation {path!r}")

    def create_field(self, rel: Relation, name: str, type: FieldType | str, init: Any = None) -> Field:
        if isinstance(type, str):
            type = T.parse_type(type)
        if name in rel.fields or name in rel.accessors:
            raise SchemaError(f"{rel.name} already has a member named {name!r}")
        if type.is_key and type.target not in self.relations:
            raise SchemaError(f"key field {rel.name}.{name} targets unknown relation {type.target!r}")
        fld = Field(rel, name, type)
        if init is not None:
            fld.load(init)
        rel.fields[name] = fld
        self._structural()
        return fld

    def key_fields_into(self, rel: Relation) -> list[Field]:
        return [f for r in self.relations.values() for f in r.fields.values()
                if f.type.is_key and f.type.target == rel.name]

    def group_by(self, rel: Relation, field_name: str) -> GroupIndex:
        """Sort ``rel`` stably by a scalar key field and build the inverted index.

        All of ``rel``'s fields and subsets are permuted together and every key
        field in the runtime that targets ``rel`` is remapped, so logical
        references survive the reordering.
        """
        fld = rel.fields.get(field_name)
        if fld is None:
            raise GroupingError(f"{rel.name} has no field {field_name!r}")
        if not fld.type.is_key or not fld.type.is_scalar:
            raise GroupingError(f"{rel.name}.{field_name} is not a scalar key field", field=fld.qualname)
        if rel.group is not None:
            raise GroupingError(f"{rel.name} is already grouped by {rel.group.field_name}")
        if rel.is_grid:
            raise GroupingError("grid relations cannot be reordered by a grouping")
        for other in self.relations.values():
            g = other.group
            if g is not None and g.source is rel:
                raise GroupingError(
                    f"{rel.name} is the source of grouping {other.name}.{g.field_name}; "
                    "reordering it would invalidate that index")
        source = fld.target
        keys = fld.key_rows()
        perm = np.argsort(keys, kind="stable")
        if np.any(perm != np.arange(len(perm))):
            inv = np.empty_like(perm)
            inv[perm] = np.arange(len(perm))
            for f in rel.fields.values():
                f.data[...] = f.data[perm]
            for s in rel.subsets.values():
                s.rows = np.sort(inv[s.rows])
            for f in self.key_fields_into(rel):
                rows = f.key_rows()
                rows[...] = inv[rows]
        counts = np.bincount(fld.key_rows(), minlength=source.count)
        offsets = np.zeros(source.count + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        index = GroupIndex(source, rel, field_name, offsets)
        rel.group = index
        self._structural()
        return index

    def create_subset(self, rel: Relation, name: str, *, box=None, mask=None) -> Subset:
        """Register a launch subset from an inclusive per-dim ``box`` or a row mask."""
        if name in rel.subsets:
            raise SchemaError(f"{rel.name} already has a subset {name!r}")
        if (box is None) == (mask is None):
            raise SchemaError("a subset needs exactly one of box or mask")
        if box is not None:
            if not rel.is_grid:
                raise SchemaError("box subsets need a grid relation")
            if len(box) != len(rel.dims):
                raise SchemaError("box needs one (lo, hi) range per dimension")
            axes = []
            for (lo, hi), d in zip(box, rel.dims):
                if not 0 <= lo <= hi < d:
                    raise SchemaError(f"box range [{lo}, {hi}] outside dimension of size {d}")
                axes.append(np.arange(lo, hi + 1))
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(rel.dims))
            rows = np.sort(rel.ravel(grid))
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (rel.count,):
                raise SchemaError(f"mask length {mask.shape} does not match {rel.count} rows")
            rows = np.flatnonzero(mask)
        sub = Subset(rel, name, rows)
        rel.subsets[name] = sub
        self._structural()
        return sub

    # -- globals -------------------------------------------------------

    def new_global(self, name: str, type: FieldType | str, value=0) -> Global:
        return self._add_global(Global, name, type, value)

    def new_constant(self, name: str, type: FieldType | str, value) -> Constant:
        return self._add_global(Constant, name, type, value)

    def _add_global(self, cls, name, type, value):
        if isinstance(type, str):
            type = T.parse_type(type)
        if name in self.globals:
            raise SchemaError(f"global {name!r} already exists")
        g = cls(name, type, value)
        self.globals[name] = g
        return g

    # -- affine, point location, views --------------------------------

    def affine(self, source: Relation, dest: Relation, A, b=None) -> AffineMap:
        return AffineMap(source, dest, A, b)

    def point_locate(self, grid: Relation, positions: Field, out_keys: Field, *,
                     strict: bool = False) -> None:
        """Write the grid cell containing each position into ``out_keys``.

        Out-of-range coordinates clamp on non-periodic dimensions (or raise with
        ``strict``) and wrap on periodic ones.
        """
        if grid.geometry is None:
            raise SchemaError(f"{grid.name} has no geometry (origin/width)")
        if positions.owner is not out_keys.owner:
            raise SchemaError("positions and output keys must live on the same relation")
        if out_keys.type != T.key(grid.name):
            raise SchemaError(f"{out_keys.qualname} is not a scalar key into {grid.name}")
        nd = len(grid.dims)
        if not positions.type.is_float or positions.type.shape[:1] == () or positions.type.shape[0] < nd:
            raise SchemaError(f"{positions.qualname} must be a float vector with >= {nd} components")
        pos = positions.data[:, :nd].astype(np.float64)
        nan_rows = np.flatnonzero(np.isnan(pos).any(axis=1))
        if len(nan_rows):
            raise NaNGuardError(f"NaN position at row {int(nan_rows[0])} of {positions.qualname}",
                                field=positions.qualname, row=int(nan_rows[0]))
        cell = locate_cells(pos, grid.geometry.origin, grid.geometry.width,
                            grid.dims, grid.periodic, strict=strict)
        out_keys.key_rows()[...] = grid.ravel(cell)

    def raw_view(self, field: Field) -> BufferView:
        t = field.type
        return BufferView(field, field.owner.count, t.components, _SCALAR_KINDS[t.base],
                          t.dtype.itemsize, t.dtype.itemsize * t.components, self.generation)

    def import_view(self, view: BufferView) -> Field:
        """Re-validate a field after external code wrote through its view."""
        _ = view.array
        self.validate_keys([view.field])
        return view.field

    def validate_keys(self, fields: Iterable[Field] | None = None) -> None:
        if fields is None:
            fields = [f for r in self.relations.values() for f in r.fields.values()]
        for f in fields:
            if not f.type.is_key:
                continue
            n = self.relations[f.type.target].count
            flat = f.data.reshape(len(f.data), -1)
            bad = np.flatnonzero((flat >= n).any(axis=1))
            if len(bad):
                r = int(bad[0])
                raise KeyBoundsError(
                    f"{f.qualname}[{r}] = {f.data[r]!r} is out of bounds for {f.type.target} ({n} rows)",
                    field=f.qualname)

    # -- kernels ---------------------------------------------------------

    def kernel(self, text: str):
        from .engine import compile_kernel

        return compile_kernel(self, text)

    def kernels(self, text: str) -> dict:
        from .engine import compile_kernels

        return compile_kernels(self, text)


def locate_cells(pos: np.ndarray, origin, width, dims, periodic, *, strict: bool = False) -> np.ndarray:
    """Cell multi-index for each row of ``pos`` (floor, then clamp or wrap)."""
    cell = np.floor((pos - origin) / width).astype(np.int64)
    for k, (d, per) in enumerate(zip(dims, periodic)):
        if per:
            cell[:, k] %= d
        else:
            if strict:
                bad = np.flatnonzero((cell[:, k] < 0) | (cell[:, k] >= d))
                if len(bad):
                    raise KeyBoundsError(f"position at row {int(bad[0])} lies outside the grid")
            np.clip(cell[:, k], 0, d - 1, out=cell[:, k])
    return cell

"""Field serialization: a raw binary column format and CSV.

Raw layout (little-endian)::

    offset  size  content
    0       4     magic b"RFLD"
    4       1     scalar kind: 1 float32, 2 float64, 3 int64, 4 bool, 5 key (uint64)
    5       1     components per element (1 for scalars, n for vectors, n*m for matrices)
    6       2     reserved, zero
    8       8     element count (uint64)
    16      ...   packed column, row-major, element after element

CSV holds one line per element with components separated by commas. Floats
are printed with enough digits to read back bit for bit.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, KeyBoundsError
from ..types import FieldType

MAGIC = b"RFLD"
HEADER = struct.Struct("<4sBBHQ")
KIND_CODES = {"float32": 1, "float64": 2, "int64": 3, "bool": 4, "key": 5}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
_LE_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8", "bool": "|b1", "key": "<u8"}
_CSV_FMT = {"float32": "%.9g", "float64": "%.17g", "int64": "%d", "bool": "%d", "key": "%d"}


def _format_of(path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("raw", "csv"):
            raise FormatError(f"unknown field format {fmt!r}; expected raw or csv", path=str(path))
        return fmt
    return "csv" if str(path).lower().endswith(".csv") else "raw"


def write_raw(path, data: np.ndarray, type: FieldType) -> None:
    count = len(data)
    comps = type.components
    header = HEADER.pack(MAGIC, KIND_CODES[type.base], comps, 0, count)
    body = np.ascontiguousarray(data, dtype=_LE_DTYPES[type.base])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def read_raw(path, type: FieldType, count: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FormatError("truncated raw field header", path=str(path))
    magic, kind, comps, _, n = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; not a raw field file", path=str(path))
    if kind not in KIND_NAMES:
        raise FormatError(f"unknown scalar kind code {kind}", path=str(path))
    if KIND_NAMES[kind] != type.base:
        raise FormatError(f"file holds {KIND_NAMES[kind]} values; field type is {type}", path=str(path))
    if comps != type.components:
        raise FormatError(f"file has {comps} components per element; {type} needs "
                          f"{type.components}", path=str(path))
    if n != count:
        raise FormatError(f"file has {n} elements; relation has {count}", path=str(path))
    width = np.dtype(_LE_DTYPES[type.base]).itemsize
    need = HEADER.size + n * comps * width
    if len(raw) != need:
        raise FormatError(f"expected {need} bytes, found {len(raw)}", path=str(path))
    arr = np.frombuffer(raw, dtype=_LE_DTYPES[type.base], offset=HEADER.size)
    return arr.reshape((n,) + type.shape).astype(type.dtype)


def write_csv(path, data: np.ndarray, type: FieldType) -> None:
    flat = np.asarray(data).reshape(len(data), -1)
    if type.base == "bool":
        flat = flat.astype(np.int64)
    np.savetxt(path, flat, fmt=_CSV_FMT[type.base], delimiter=",")


def read_csv(path, type: FieldType, count: int) -> np.ndarray:
    comps = type.components
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = [p.strip() for p in s.split(",")]
            if len(parts) != comps:
                raise FormatError(f"expected {comps} values, found {len(parts)}",
                                  path=str(path), line=lineno)
            try:
                if type.is_float:
                    rows.append([float(p) for p in parts])
                elif type.base == "bool":
                    rows.append([_parse_bool(p) for p in parts])
                else:
                    rows.append([int(p) for p in parts])
            except ValueError:
                raise FormatError(f"cannot parse {s!r} as {type}", path=str(path), line=lineno) from None
    if len(rows) != count:
        raise FormatError(f"file has {len(rows)} rows; relation has {count}", path=str(path))
    dt = np.uint64 if type.is_key else type.dtype
    if type.is_key and any(v < 0 for r in rows for v in r):
        raise KeyBoundsError(f"{path}: negative key value")
    return np.array(rows, dtype=dt).reshape((count,) + type.shape)


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true"):
        return True
    if low in ("0", "false"):
        return False
    raise ValueError(s)


def read_field_file(path, type: FieldType, count: int, fmt: str | None = None) -> np.ndarray:
    """Read a field file into a fresh ``(count, *shape)`` array."""
    if not os.path.exists(path):
        raise FormatError("no such file", path=str(path))
    if _format_of(path, fmt) == "csv":
        return read_csv(path, type, count)
    return read_raw(path, type, count)


def save_field(field, path, fmt: str | None = None) -> None:
    """Write ``field`` as raw (default) or CSV (``fmt="csv"`` or a ``.csv`` path)."""
    if _format_of(path, fmt) == "csv":
        write_csv(path, field.data, field.type)
    else:
        write_raw(path, field.data, field.type)


def load_field(field, path, fmt: str | None = None):
    """Overwrite ``field`` from a file written by :func:`save_field`."""
    values = read_field_file(path, field.type, field.owner.count, fmt)
    return field.load(values)


def export_view(field):
    """Zero-copy :class:`~relsim.relational.BufferView` of ``field``."""
    return field.owner.runtime.raw_view(field)


def import_view(view):
    """Hand a view back after external mutation; key fields are bounds-checked."""
    return view.field.owner.runtime.import_view(view)

"""Mesh file loaders: ASCII OFF for triangle meshes, TetGen-style node/ele for tets."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError


@dataclass
class MeshFile:
    format: str  # "off" | "node-ele"
    positions: np.ndarray  # (n, 3) float64
    elements: np.ndarray  # (m, 3) triangles or (m, 4) tets, int64


def _lines(path):
    """Yield ``(lineno, tokens)`` for non-blank lines with ``#`` comments removed."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError("no such file", path=str(path)) from None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if s:
            yield lineno, s.split()


class _Reader:
    def __init__(self, path):
        self.path = str(path)
        self.it = _lines(path)
        self.last = 0

    def next(self, what: str):
        try:
            self.last, toks = next(self.it)
        except StopIteration:
            raise FormatError(f"file ended while reading {what}", path=self.path,
                              line=self.last + 1) from None
        return toks

    def fail(self, msg: str):
        return FormatError(msg, path=self.path, line=self.last)

    def ints(self, toks, what: str) -> list[int]:
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise self.fail(f"expected integers in {what}") from None

    def floats(self, toks, what: str) -> list[float]:
        try:
            return [float(t) for t in toks]
        except ValueError:
            raise self.fail(f"expected numbers in {what}") from None

    def trailing(self) -> None:
        for lineno, toks in self.it:
            self.last = lineno
            raise self.fail(f"unexpected trailing data {' '.join(toks)!r}")


def load_off(path) -> MeshFile:
    """Read an ASCII OFF file. Polygons with more than 3 corners are fan-triangulated."""
    r = _Reader(path)
    toks = r.next("header")
    if toks[0].upper() != "OFF":
        raise r.fail("missing OFF header")
    counts = toks[1:] or r.next("counts")
    if len(counts) < 2:
        raise r.fail("header needs vertex and face counts")
    nv, nf = r.ints(counts[:3], "counts")[:2]
    if nv < 0 or nf < 0:
        raise r.fail("negative counts in header")
    pos = np.empty((nv, 3), dtype=np.float64)
    for i in range(nv):
        vals = r.floats(r.next(f"vertex {i}"), "vertex")
        if len(vals) < 3:
            raise r.fail(f"vertex {i} needs 3 coordinates")
        pos[i] = vals[:3]
    tris = []
    for f in range(nf):
        vals = r.ints(r.next(f"face {f}"), "face")
        k = vals[0]
        if k < 3 or len(vals) < 1 + k:
            raise r.fail(f"face {f} declares {k} corners but lists {len(vals) - 1}")
        idx = vals[1:1 + k]
        for v in idx:
            if not 0 <= v < nv:
                raise r.fail(f"face {f} references vertex {v}; mesh has {nv}")
        for j in range(1, k - 1):
            tris.append((idx[0], idx[j], idx[j + 1]))
    r.trailing()
    return MeshFile("off", pos, np.array(tris, dtype=np.int64).reshape(-1, 3))


def _ele_path(node_path: Path) -> Path:
    return node_path.with_suffix(".ele")


def load_node_ele(node_path, ele_path=None) -> MeshFile:
    """Read a ``.node``/``.ele`` pair. Indexing is 0- or 1-based, taken from the first node."""
    node_path = Path(node_path)
    if node_path.suffix != ".node":
        node_path = node_path.with_suffix(".node")
    ele_path = Path(ele_path) if ele_path is not None else _ele_path(node_path)

    r = _Reader(node_path)
    head = r.ints(r.next("node header"), "node header")
    n = head[0]
    dim = head[1] if len(head) > 1 else 3
    if dim != 3:
        raise r.fail(f"only 3D nodes are supported, header says {dim}")
    pos = np.empty((n, 3), dtype=np.float64)
    base = None
    for i in range(n):
        toks = r.next(f"node {i}")
        if len(toks) < 4:
            raise r.fail("node line needs an index and 3 coordinates")
        idx = r.ints(toks[:1], "node index")[0]
        if base is None:
            base = idx
            if base not in (0, 1):
                raise r.fail(f"first node index must be 0 or 1, found {idx}")
        if idx != i + base:
            raise r.fail(f"expected node {i + base}, found {idx}")
        pos[i] = r.floats(toks[1:4], "node coordinates")
    r.trailing()
    base = base or 0

    r = _Reader(ele_path)
    head = r.ints(r.next("element header"), "element header")
    m = head[0]
    per = head[1] if len(head) > 1 else 4
    if per != 4:
        raise r.fail(f"only 4-node tetrahedra are supported, header says {per}")
    tets = np.empty((m, 4), dtype=np.int64)
    for t in range(m):
        vals = r.ints(r.next(f"element {t}"), "element")
        if len(vals) < 5:
            raise r.fail("element line needs an index and 4 node indices")
        corners = [v - base for v in vals[1:5]]
        for v in corners:
            if not 0 <= v < n:
                raise r.fail(f"element {vals[0]} references node {v + base}; mesh has {n} nodes")
        tets[t] = corners
    r.trailing()
    return MeshFile("node-ele", pos, tets)


def load_mesh(path, format: str | None = None) -> MeshFile:
    """Load ``path`` as ``off`` or ``node-ele`` (inferred from the extension when omitted)."""
    p = Path(path)
    fmt = format or ("off" if p.suffix.lower() == ".off" else "node-ele")
    if fmt == "off":
        return load_off(p)
    if fmt == "node-ele":
        return load_node_ele(p)
    raise FormatError(f"unknown mesh format {fmt!r}", path=str(path))


def write_off(path, positions, triangles) -> None:
    lines = ["OFF", f"{len(positions)} {len(triangles)} 0"]
    lines += [" ".join(repr(float(c)) for c in p) for p in positions]
    lines += ["3 " + " ".join(str(int(v)) for v in t) for t in triangles]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_node_ele(base_path, positions, tets) -> None:
    base = Path(base_path)
    nodes = [f"{len(positions)} 3 0 0"]
    nodes += [f"{i} " + " ".join(repr(float(c)) for c in p) for i, p in enumerate(positions)]
    eles = [f"{len(tets)} 4 0"]
    eles += [f"{i} " + " ".join(str(int(v)) for v in t) for i, t in enumerate(tets)]
    base.with_suffix(".node").write_text("\n".join(nodes) + "\n", encoding="utf-8")
    base.with_suffix(".ele").write_text("\n".join(eles) + "\n", encoding="utf-8")

"""Unstructured mesh domains: directed graphs, triangle meshes and tetrahedral meshes.

Each builder creates its relations in a :class:`~relsim.relational.Runtime`,
installs the key fields, groups ``edges`` by ``tail`` and defines the
``vertices.edges`` query accessor, so kernels can write ``for e in v.edges``.
Relation names get an optional ``name.`` prefix so several domains can share
one runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import types as T
from ..errors import SchemaError
from ..relational import Relation, Runtime


def _qual(name: str | None, rel: str) -> str:
    return f"{name}.{rel}" if name else rel


def _check_elements(elems: np.ndarray, nverts: int, what: str, arity: int) -> np.ndarray:
    elems = np.asarray(elems, dtype=np.int64)
    if elems.ndim != 2 or elems.shape[1] != arity:
        raise SchemaError(f"{what} index list must have shape (m, {arity}), got {elems.shape}")
    if len(elems) == 0:
        raise SchemaError(f"a {what} mesh needs at least one element")
    bad = np.flatnonzero(((elems < 0) | (elems >= nverts)).any(axis=1))
    if len(bad):
        raise SchemaError(f"{what} {int(bad[0])} has a vertex index outside [0, {nverts})")
    s = np.sort(elems, axis=1)
    rep = np.flatnonzero((s[:, 1:] == s[:, :-1]).any(axis=1))
    if len(rep):
        raise SchemaError(f"{what} {int(rep[0])} repeats a vertex: {elems[rep[0]].tolist()}")
    return elems


def _positions(pos) -> np.ndarray:
    pos = np.asarray(pos, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 3 or len(pos) == 0:
        raise SchemaError(f"vertex positions must have shape (n, 3) with n >= 1, got {pos.shape}")
    return pos


def ordered_pairs(elems: np.ndarray, self_loops: bool = False) -> np.ndarray:
    """Deduplicated ordered vertex pairs within each element, sorted by (tail, head)."""
    k = elems.shape[1]
    pairs = [elems[:, [i, j]] for i in range(k) for j in range(k) if i != j or self_loops]
    allp = np.concatenate(pairs)
    return np.unique(allp, axis=0)


def cycle_pairs(tris: np.ndarray) -> np.ndarray:
    """Oriented boundary edges a->b, b->c, c->a of each triangle, deduplicated."""
    allp = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    return np.unique(allp, axis=0)


def _install_edges(rt: Runtime, verts: Relation, name: str | None, pairs: np.ndarray) -> Relation:
    edges = rt.create_relation(_qual(name, "edges"), len(pairs), allow_empty=True)
    rt.create_field(edges, "tail", T.key(verts.name), pairs[:, 0])
    rt.create_field(edges, "head", T.key(verts.name), pairs[:, 1])
    rt.group_by(edges, "tail")
    verts.define_where("edges", edges, "tail")
    return edges


@dataclass
class GraphDomain:
    runtime: Runtime
    vertices: Relation
    edges: Relation


def build_graph(rt: Runtime, positions, pairs, *, name: str | None = None) -> GraphDomain:
    """Vertices with ``pos`` and directed ``edges`` (tail, head), grouped by tail."""
    pos = _positions(positions)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) and ((pairs < 0) | (pairs >= len(pos))).any():
        raise SchemaError("edge endpoint outside the vertex range")
    verts = rt.create_relation(_qual(name, "vertices"), len(pos))
    rt.create_field(verts, "pos", T.vector("float64", 3), pos)
    edges = _install_edges(rt, verts, name, pairs)
    return GraphDomain(rt, verts, edges)


@dataclass
class TriMeshDomain:
    runtime: Runtime
    vertices: Relation
    edges: Relation
    triangles: Relation


def build_trimesh(rt: Runtime, positions, triangles, *, name: str | None = None,
                  symmetric: bool = True) -> TriMeshDomain:
    """Triangle mesh with ``triangles.v[3]`` and directed edges.

    With ``symmetric`` (the default) every geometric edge appears in both
    directions; otherwise only the oriented triangle boundary edges are built.
    """
    pos = _positions(positions)
    tris = _check_elements(triangles, len(pos), "triangle", 3)
    verts = rt.create_relation(_qual(name, "vertices"), len(pos))
    rt.create_field(verts, "pos", T.vector("float64", 3), pos)
    trel = rt.create_relation(_qual(name, "triangles"), len(tris))
    rt.create_field(trel, "v", T.key(verts.name, (3,)), tris)
    pairs = ordered_pairs(tris) if symmetric else cycle_pairs(tris)
    edges = _install_edges(rt, verts, name, pairs)
    return TriMeshDomain(rt, verts, edges, trel)


@dataclass
class TetMeshDomain:
    runtime: Runtime
    vertices: Relation
    edges: Relation
    tets: Relation


def build_tetmesh(rt: Runtime, positions, tets, *, name: str | None = None) -> TetMeshDomain:
    """Tetrahedral mesh whose edge set includes one self-loop per vertex.

    ``tets.e[i][j]`` is the edge from ``v[i]`` to ``v[j]``; the diagonal holds
    the self-loops, which let element kernels address per-vertex blocks of
    an assembled matrix.
    """
    pos = _positions(positions)
    tt = _check_elements(tets, len(pos), "tet", 4)
    verts = rt.create_relation(_qual(name, "vertices"), len(pos))
    rt.create_field(verts, "pos", T.vector("float64", 3), pos)
    pairs = ordered_pairs(tt, self_loops=False)
    loops = np.repeat(np.arange(len(pos), dtype=np.int64)[:, None], 2, axis=1)
    pairs = np.unique(np.concatenate([pairs, loops]), axis=0)
    # Sorted by (tail, head), so grouping by tail keeps this order and an
    # edge id is found by binary search on tail * n + head.
    code = pairs[:, 0] * len(pos) + pairs[:, 1]
    want = tt[:, :, None] * len(pos) + tt[:, None, :]
    e = np.searchsorted(code, want)
    trel = rt.create_relation(_qual(name, "tets"), len(tt))
    rt.create_field(trel, "v", T.key(verts.name, (4,)), tt)
    edges = _install_edges(rt, verts, name, pairs)
    rt.create_field(trel, "e", T.matrix(T.key(edges.name), 4, 4), e)
    return TetMeshDomain(rt, verts, edges, trel)


def cube_lattice(nx: int, ny: int | None = None, nz: int | None = None,
                 spacing: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and tets of an ``nx*ny*nz`` block of cubes, 5 tets per cube.

    Neighbouring cubes use mirrored splits so shared faces carry the same
    diagonal and the result is a conforming mesh.
    """
    ny = nx if ny is None else ny
    nz = nx if nz is None else nz
    if min(nx, ny, nz) < 1:
        raise SchemaError("lattice dimensions must be >= 1")
    gi, gj, gk = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), np.arange(nz + 1), indexing="ij")
    vid = lambda i, j, k: i + (nx + 1) * (j + (ny + 1) * k)  # noqa: E731
    pos = np.stack([gi.ravel("F"), gj.ravel("F"), gk.ravel("F")], axis=1).astype(np.float64) * spacing
    ci, cj, ck = (a.ravel("F") for a in np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                                                     indexing="ij"))
    # Corner c has offsets (c & 1, c >> 1 & 1, c >> 2 & 1).
    corners = np.stack([vid(ci + (c & 1), cj + (c >> 1 & 1), ck + (c >> 2 & 1)) for c in range(8)],
                       axis=1)
    even = [(1, 2, 4, 7), (0, 1, 2, 4), (3, 1, 2, 7), (5, 1, 4, 7), (6, 2, 4, 7)]
    odd = [(0, 3, 5, 6), (1, 0, 3, 5), (2, 0, 3, 6), (4, 0, 5, 6), (7, 3, 5, 6)]
    parity = (ci + cj + ck) % 2
    tets = np.empty((len(ci), 5, 4), dtype=np.int64)
    for t in range(5):
        tets[:, t] = np.where(parity[:, None] == 0, corners[:, list(even[t])], corners[:, list(odd[t])])
    return pos, tets.reshape(-1, 4)

"""Embedding a render triangle mesh in a simulation tetrahedral mesh."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import types as T
from ..errors import SchemaError
from .mesh import TetMeshDomain, TriMeshDomain

_UPDATE = """
ebb kernel {kname}( v : {verts} )
  var t = v.tet
  v.pos = v.bary[0] * t.v[0].{src}
        + v.bary[1] * t.v[1].{src}
        + v.bary[2] * t.v[2].{src}
        + v.bary[3] * t.v[3].{src}
end
"""


@dataclass
class Embedding:
    tri: TriMeshDomain
    tet: TetMeshDomain
    update: object  # compiled kernel recomputing tri.vertices.pos

    def __call__(self, **kw) -> None:
        self.update(**kw)


def embed_trimesh_in_tetmesh(tri: TriMeshDomain, tet: TetMeshDomain, containing_tet, weights, *,
                             source_field: str = "pos", tol: float = 1e-12) -> Embedding:
    """Install ``tri.vertices.tet`` / ``.bary`` and a kernel that re-derives render positions.

    The containing tet and barycentric weights are inputs; no geometric search
    is done here.
    """
    rt = tri.runtime
    if rt is not tet.runtime:
        raise SchemaError("both meshes must live in the same runtime")
    n = tri.vertices.count
    keys = np.asarray(containing_tet, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    if keys.shape != (n,) or w.shape != (n, 4):
        raise SchemaError(f"need one tet and 4 weights per render vertex ({n})")
    neg = np.flatnonzero((w < 0).any(axis=1))
    if len(neg):
        raise SchemaError(f"render vertex {int(neg[0])} has a negative barycentric weight")
    off = np.flatnonzero(np.abs(w.sum(axis=1) - 1.0) > tol)
    if len(off):
        r = int(off[0])
        raise SchemaError(f"weights of render vertex {r} sum to {w[r].sum()!r}, not 1")
    if source_field not in tet.vertices.fields:
        raise SchemaError(f"{tet.vertices.name} has no field {source_field!r}")
    rt.create_field(tri.vertices, "tet", T.key(tet.tets.name), keys)
    rt.create_field(tri.vertices, "bary", T.vector("float64", 4), w)
    text = _UPDATE.format(kname="update_render_pos", verts=tri.vertices.name, src=source_field)
    return Embedding(tri, tet, rt.kernel(text))

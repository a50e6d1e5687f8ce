import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsim import Runtime
from relsim import types as T
from relsim.domains import (attach_particles, build_graph, build_grid, build_tetmesh,
                            build_trimesh, cube_lattice, embed_trimesh_in_tetmesh)
from relsim.errors import KeyBoundsError, SchemaError


def pair_oracle(tets):
    """Ordered vertex pairs within any tet plus one self-loop per vertex, by enumeration."""
    out = set()
    for t in tets:
        for a, b in itertools.product(t, t):
            out.add((int(a), int(b)))
    return out


def edge_set(dom):
    return set(zip(dom.edges["tail"].key_rows().tolist(), dom.edges["head"].key_rows().tolist()))


def check_e_matrix(dom):
    tets = dom.tets
    v = tets["v"].key_rows()
    e = tets["e"].key_rows()
    tail, head = dom.edges["tail"].key_rows(), dom.edges["head"].key_rows()
    assert np.array_equal(tail[e], np.broadcast_to(v[:, :, None], e.shape))
    assert np.array_equal(head[e], np.broadcast_to(v[:, None, :], e.shape))
    diag = e[:, np.arange(4), np.arange(4)]
    assert np.array_equal(tail[diag], head[diag])


def test_single_tet_edges():
    rt = Runtime()
    dom = build_tetmesh(rt, np.eye(4, 3), [[0, 1, 2, 3]])
    assert dom.edges.count == 16 == len(pair_oracle([[0, 1, 2, 3]]))
    assert edge_set(dom) == pair_oracle([[0, 1, 2, 3]])
    e = dom.tets["e"].key_rows()[0]
    assert sorted(e.ravel().tolist()) == list(range(16))  # bijection
    check_e_matrix(dom)


def test_two_tets_sharing_a_face():
    rt = Runtime()
    tets = [[0, 1, 2, 3], [1, 2, 3, 4]]
    dom = build_tetmesh(rt, np.random.default_rng(0).normal(size=(5, 3)), tets)
    assert dom.edges.count == 23 == len(pair_oracle(tets))
    assert edge_set(dom) == pair_oracle(tets)
    check_e_matrix(dom)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_random_lattice_e_matrix(nx, ny, nz, seed):
    rng = np.random.default_rng(seed)
    pos, tets = cube_lattice(nx, ny, nz)
    # relabel vertices and shuffle tets so the check does not lean on lattice order
    perm = rng.permutation(len(pos))
    inv = np.argsort(perm)
    tets = inv[tets][rng.permutation(len(tets))]
    pos = pos[perm] + rng.normal(scale=0.01, size=pos.shape)
    rt = Runtime()
    dom = build_tetmesh(rt, pos, tets, name="m")
    assert edge_set(dom) == pair_oracle(tets)
    check_e_matrix(dom)
    assert dom.edges.group is not None and dom.edges.group.field_name == "tail"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lattice_is_conforming(n):
    pos, tets = cube_lattice(n, spacing=0.5)
    assert len(tets) == 5 * n**3 and len(pos) == (n + 1) ** 3
    p = pos[tets]
    vol = np.abs(np.linalg.det(p[:, 1:] - p[:, :1])) / 6
    assert np.all(vol > 0)
    assert np.isclose(vol.sum(), (0.5 * n) ** 3, rtol=1e-12)
    faces = {}
    for t in tets:
        for f in itertools.combinations(sorted(t), 3):
            faces[f] = faces.get(f, 0) + 1
    assert set(faces.values()) <= {1, 2}
    boundary = sum(1 for c in faces.values() if c == 1)
    assert boundary == 6 * 2 * n * n  # two triangles per boundary square


def test_mesh_input_validation():
    rt = Runtime()
    with pytest.raises(SchemaError, match="repeats a vertex"):
        build_tetmesh(rt, np.zeros((4, 3)), [[0, 1, 1, 2]])
    with pytest.raises(SchemaError, match="outside"):
        build_tetmesh(Runtime(), np.zeros((4, 3)), [[0, 1, 2, 4]])
    with pytest.raises(SchemaError, match="shape"):
        build_trimesh(Runtime(), np.zeros((3, 2)), [[0, 1, 2]])
    with pytest.raises(SchemaError):
        build_graph(Runtime(), np.zeros((2, 3)), [[0, 2]])


def test_trimesh_edges():
    rt = Runtime()
    pos = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    tris = [[0, 1, 2], [0, 2, 3]]
    sym = build_trimesh(rt, pos, tris, name="a")
    assert sym.edges.count == 10
    assert all((b, a) in edge_set(sym) for a, b in edge_set(sym))
    ori = build_trimesh(rt, pos, tris, name="b", symmetric=False)
    assert edge_set(ori) == {(0, 1), (1, 2), (2, 0), (0, 2), (2, 3), (3, 0)}
    assert rt.relation("a.triangles")["v"].data.tolist() == tris


def test_group_by_tail_query_ranges():
    rt = Runtime()
    pairs = [[2, 0], [0, 1], [2, 1], [0, 2]]
    dom = build_graph(rt, np.zeros((4, 3)), pairs)
    grp = dom.edges.group
    tail = dom.edges["tail"].key_rows()
    for v in range(4):
        r = grp.query_range(v)
        assert np.all(tail[r.start:r.stop] == v)
        assert len(r) == sum(p[0] == v for p in pairs)


# -- grid ----------------------------------------------------------------------

def test_grid_accessors():
    rt = Runtime()
    g = build_grid(rt, 4, 3, origin=(1.0, 2.0), width=0.5, periodic=(True, False))
    assert g.cells.dims == (4, 3) and g.vertices.dims == (5, 4) and g.dual_cells.dims == (4, 3)
    centers = g.cells["center"].data
    assert np.allclose(centers[g.cells.row_of((2, 1))], [1 + 2.5 * 0.5, 2 + 1.5 * 0.5])
    rt.create_field(g.cells, "id", T.int64, np.arange(12))
    rt.create_field(g.cells, "nb", T.int64, 0)
    rt.create_field(g.vertices, "vid", T.int64, np.arange(20))
    rt.create_field(g.cells, "vv", T.int64, 0)
    rt.create_field(g.dual_cells, "corner", T.int64, 0)
    ks = rt.kernels("""
kernel nb(c : cells)
  c.nb = c(-1, 0).id
  c.vv = c.vertex.vid
end
kernel dual(d : dual_cells)
  d.corner = d.cell(1, 0).id
end
""")
    ks["nb"]()
    idx = g.cells.unravel(np.arange(12))
    wrap = g.cells.ravel(np.stack([(idx[:, 0] - 1) % 4, idx[:, 1]], axis=1))
    assert np.array_equal(g.cells["nb"].data, wrap)
    assert np.array_equal(g.cells["vv"].data, g.vertices.ravel(idx))
    ks["dual"]()
    want = g.cells.ravel(np.stack([(idx[:, 0] + 1) % 4, idx[:, 1]], axis=1))
    assert np.array_equal(g.dual_cells["corner"].data, want)


def test_dual_cell_geometry_offset():
    rt = Runtime()
    g = build_grid(rt, 4, 4, width=2.0, periodic=(True, True))
    pd = attach_particles(rt, g, [[1.0, 1.0], [0.9, 0.9], [7.5, 3.0]])
    idx = g.dual_cells.unravel(pd.particles["dual_cell"].key_rows())
    # dual cell (i, j) spans [1 + 2i, 3 + 2i); below 1 wraps to the last one
    assert idx.tolist() == [[0, 0], [3, 3], [3, 1]]


def test_particles_locate_and_validate():
    rt = Runtime()
    g = build_grid(rt, 4, 4)
    pd = attach_particles(rt, g, np.zeros((0, 2)))
    assert pd.particles.count == 0
    rt2 = Runtime()
    g2 = build_grid(rt2, 4, 4)
    with pytest.raises(Exception, match="NaN"):
        attach_particles(rt2, g2, [[0.0, np.nan]])
    p = attach_particles(rt2, g2, [[10.0, -3.0]], name="clamped")
    assert g2.dual_cells.unravel(p.particles["dual_cell"].key_rows()).tolist() == [[3, 0]]
    with pytest.raises(KeyBoundsError):
        rt2.point_locate(g2.dual_cells, p.particles["pos"], p.particles["dual_cell"], strict=True)


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=20))
def test_point_locate_periodic_contains_point(pts):
    rt = Runtime()
    g = build_grid(rt, 5, 7, periodic=(True, True))
    pd = attach_particles(rt, g, pts)
    idx = g.dual_cells.unravel(pd.particles["dual_cell"].key_rows())
    rel = np.asarray(pts) - 0.5
    expect = np.floor(rel).astype(int) % np.array([5, 7])
    assert np.array_equal(idx, expect)


def test_grid_validation():
    with pytest.raises(SchemaError):
        build_grid(Runtime(), 0, 3)
    with pytest.raises(SchemaError):
        build_grid(Runtime(), 3, 3, width=0)


# -- render mesh embedding --------------------------------------------------------

def test_embedding_follows_tet_vertices():
    rt = Runtime()
    tet = build_tetmesh(rt, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2, 3]], name="sim")
    tri = build_trimesh(rt, np.zeros((3, 3)), [[0, 1, 2]], name="render")
    w = np.array([[1, 0, 0, 0], [0.25, 0.25, 0.25, 0.25], [0, 0.5, 0.5, 0]])
    emb = embed_trimesh_in_tetmesh(tri, tet, [0, 0, 0], w)
    emb()
    tp = tet.vertices["pos"].data
    assert np.allclose(tri.vertices["pos"].data, w @ tp, rtol=0, atol=1e-15)
    tet.vertices["pos"].data[:] = tp * 2 + 1
    emb(workers=2)
    assert np.allclose(tri.vertices["pos"].data, w @ tet.vertices["pos"].data, rtol=0, atol=1e-15)


@pytest.mark.parametrize("tets, w, match", [
    ([0, 0], [[1, 0, 0, 0]] * 2, "one tet and 4 weights"),
    ([0, 0, 0], [[1, 0, 0, 0], [1.5, -0.5, 0, 0], [1, 0, 0, 0]], "negative"),
    ([0, 0, 0], [[1, 0, 0, 0], [0.5, 0.4, 0, 0], [1, 0, 0, 0]], "sum to"),
])
def test_embedding_validation(tets, w, match):
    rt = Runtime()
    tet = build_tetmesh(rt, np.eye(4, 3), [[0, 1, 2, 3]], name="sim")
    tri = build_trimesh(rt, np.zeros((3, 3)), [[0, 1, 2]], name="render")
    with pytest.raises(SchemaError, match=match):
        embed_trimesh_in_tetmesh(tri, tet, tets, w)

"""Geometric domain libraries built from relational primitives."""

from .coupling import Embedding, embed_trimesh_in_tetmesh
from .grid import GridDomain, ParticleDomain, attach_particles, build_grid, locate_particles
from .mesh import (
    GraphDomain, TetMeshDomain, TriMeshDomain, build_graph, build_tetmesh, build_trimesh,
    cube_lattice, ordered_pairs,
)

__all__ = [
    "Embedding", "embed_trimesh_in_tetmesh", "GridDomain", "ParticleDomain", "attach_particles",
    "build_grid", "locate_particles", "GraphDomain", "TetMeshDomain", "TriMeshDomain",
    "build_graph", "build_tetmesh", "build_trimesh", "cube_lattice", "ordered_pairs",
]

"""Regular 2D grid with vertices and a dual grid, plus particles coupled to it.

Accessors installed by :func:`build_grid`:

* ``c(dx, dy)`` and ``c.cell(dx, dy)`` on cells: the cell ``dx``/``dy`` away.
* ``c.vertex``: the bottom-left vertex of a cell (vertex ``(i, j)`` of cell ``(i, j)``).
* ``d.cell(a, b)`` on dual cells: dual cell ``(i, j)`` sits between the centers of
  cells ``(i, j)``, ``(i+1, j)``, ``(i, j+1)`` and ``(i+1, j+1)``, and
  ``d.cell(a, b)`` is cell ``(i+a, j+b)``.

All offsets wrap on periodic dimensions and are launch errors elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import types as T
from ..errors import NaNGuardError, SchemaError
from ..relational import AffineMap, Relation, Runtime
from .mesh import _qual

APPLY = "__apply__"


@dataclass
class GridDomain:
    runtime: Runtime
    cells: Relation
    vertices: Relation
    dual_cells: Relation
    origin: np.ndarray
    width: float

    @property
    def dims(self) -> tuple[int, int]:
        return self.cells.dims

    def cell_centers(self) -> np.ndarray:
        idx = self.cells.unravel(np.arange(self.cells.count))
        return self.origin + (idx + 0.5) * self.width


def build_grid(rt: Runtime, nx: int, ny: int, *, origin=(0.0, 0.0), width: float = 1.0,
               periodic=(False, False), name: str | None = None) -> GridDomain:
    if int(nx) < 1 or int(ny) < 1:
        raise SchemaError(f"grid needs nx, ny >= 1, got {nx}x{ny}")
    if not width > 0:
        raise SchemaError(f"cell width must be positive, got {width}")
    origin = np.asarray(origin, dtype=np.float64)
    if origin.shape != (2,):
        raise SchemaError("grid origin needs 2 coordinates")
    periodic = tuple(bool(p) for p in periodic)
    cells = rt.create_relation(_qual(name, "cells"), dims=(nx, ny), periodic=periodic)
    verts = rt.create_relation(_qual(name, "vertices"), dims=(nx + 1, ny + 1))
    dual = rt.create_relation(_qual(name, "dual_cells"), dims=(nx, ny), periodic=periodic)
    cells.set_geometry(origin, width)
    verts.set_geometry(origin, width)
    dual.set_geometry(origin + 0.5 * width, width)

    eye = np.eye(2, dtype=np.int64)
    offset = AffineMap(cells, cells, eye)
    cells.define_affine(APPLY, offset, params=2)
    cells.define_affine("cell", offset, params=2)
    cells.define_affine("vertex", AffineMap(cells, verts, eye))
    dual.define_affine("cell", AffineMap(dual, cells, eye), params=2)
    verts.define_affine("cell", AffineMap(verts, cells, eye), params=2)

    g = GridDomain(rt, cells, verts, dual, origin, float(width))
    rt.create_field(cells, "center", T.vector("float64", 2), g.cell_centers())
    return g


@dataclass
class ParticleDomain:
    runtime: Runtime
    particles: Relation
    grid: GridDomain


def attach_particles(rt: Runtime, grid: GridDomain, positions, velocities=None, *,
                     name: str = "particles") -> ParticleDomain:
    """Particles with ``pos``, ``vel`` and a ``dual_cell`` key refreshed by point location."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if np.isnan(pos).any():
        row = int(np.flatnonzero(np.isnan(pos).any(axis=1))[0])
        raise NaNGuardError(f"NaN initial position for particle {row}", row=row)
    rel = rt.create_relation(name, len(pos), allow_empty=True)
    rt.create_field(rel, "pos", T.vector("float64", 2), pos)
    vel = np.zeros_like(pos) if velocities is None else np.asarray(velocities, dtype=np.float64)
    rt.create_field(rel, "vel", T.vector("float64", 2), vel.reshape(-1, 2))
    rt.create_field(rel, "dual_cell", T.key(grid.dual_cells.name), 0 if len(pos) else None)
    locate_particles(rt, grid, rel)
    return ParticleDomain(rt, rel, grid)


def locate_particles(rt: Runtime, grid: GridDomain, particles: Relation) -> None:
    if particles.count:
        rt.point_locate(grid.dual_cells, particles["pos"], particles["dual_cell"])

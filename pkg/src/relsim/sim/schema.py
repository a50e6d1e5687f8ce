"""JSON schema files describing a runtime for ``relsim check``.

A schema declares just enough of a runtime to typecheck kernels against it;
field data is zero-filled. Top-level keys, all optional::

    {
      "domains":   [{"kind": "tetmesh", "lattice": 1, "name": "dragon"},
                    {"kind": "grid", "nx": 8, "ny": 8, "periodic": [true, true], "name": "grid"},
                    {"kind": "particles", "grid": "grid", "count": 4}],
      "relations": [{"name": "springs", "size": 10}, {"name": "img", "dims": [4, 4]}],
      "fields":    [{"relation": "springs", "name": "k", "type": "float64"}],
      "group_by":  [{"relation": "springs", "field": "a", "on": "vertices", "accessor": "out"}],
      "constants": {"K": "float64", "dt": {"type": "float64", "value": 0.0001}},
      "globals":   {"E": "float64"}
    }

Domain kinds are ``graph`` (a 2-vertex chain), ``trimesh`` (one triangle or
``mesh``: an OFF path), ``tetmesh`` (``lattice``: cubes per side, or ``mesh``:
a node/ele path), ``grid`` and ``particles``. Built-in schemas named
``spring-mass`` and ``fluids-lite`` match the demo simulations.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .. import types as T
from ..domains import (attach_particles, build_graph, build_grid, build_tetmesh, build_trimesh,
                       cube_lattice)
from ..errors import ConfigError, RelsimError
from ..io import load_mesh
from ..relational import Runtime

BUILTIN = {"spring-mass": "spring_mass.json", "fluids-lite": "fluids.json"}


def read_schema(source: str) -> dict:
    """Load a schema from a path or a built-in name."""
    if source in BUILTIN and not Path(source).exists():
        text = resources.files(__package__).joinpath("schemas", BUILTIN[source]).read_text("utf-8")
        where = f"<builtin {source}>"
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read schema {source}: {exc.strerror or exc}") from None
        where = source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: schema must be a JSON object")
    return data


def _req(entry: dict, key: str, what: str):
    if key not in entry:
        raise ConfigError(f"{what} entry is missing {key!r}: {entry}")
    return entry[key]


def _domain(rt: Runtime, d: dict, grids: dict) -> None:
    kind = _req(d, "kind", "domain")
    name = d.get("name")
    if kind == "graph":
        build_graph(rt, [[0, 0, 0], [1, 0, 0]], [[0, 1], [1, 0]], name=name)
    elif kind == "trimesh":
        if "mesh" in d:
            m = load_mesh(d["mesh"], "off")
            pos, tris = m.positions, m.elements
        else:
            pos, tris = np.eye(3), [[0, 1, 2]]
        build_trimesh(rt, pos, tris, name=name, symmetric=d.get("symmetric", True))
    elif kind == "tetmesh":
        if "mesh" in d:
            m = load_mesh(d["mesh"], "node-ele")
            pos, tets = m.positions, m.elements
        else:
            pos, tets = cube_lattice(int(d.get("lattice", 1)))
        build_tetmesh(rt, pos, tets, name=name)
    elif kind == "grid":
        g = build_grid(rt, int(_req(d, "nx", "grid")), int(_req(d, "ny", "grid")),
                       periodic=d.get("periodic", (False, False)), name=name)
        grids[name or ""] = g
    elif kind == "particles":
        gname = d.get("grid", "")
        if gname not in grids:
            raise ConfigError(f"particles refer to unknown grid {gname!r}")
        count = int(d.get("count", 0))
        attach_particles(rt, grids[gname], np.zeros((count, 2)), name=d.get("name", "particles"))
    else:
        raise ConfigError(f"unknown domain kind {kind!r}")


def _scalar_decl(v, what: str):
    if isinstance(v, str):
        t = T.parse_type(v)
        return t, np.zeros(t.shape, dtype=t.dtype)
    if isinstance(v, dict):
        t = T.parse_type(_req(v, "type", what))
        return t, v.get("value", np.zeros(t.shape, dtype=t.dtype))
    raise ConfigError(f"{what} must be a type string or {{type, value}}")


def build_runtime(data: dict) -> Runtime:
    """Build a zero-filled runtime from a parsed schema."""
    unknown = set(data) - {"domains", "relations", "fields", "group_by", "constants", "globals"}
    if unknown:
        raise ConfigError(f"unknown schema sections: {sorted(unknown)}")
    rt = Runtime()
    grids: dict = {}
    try:
        for d in data.get("domains", []):
            _domain(rt, d, grids)
        for r in data.get("relations", []):
            name = _req(r, "name", "relation")
            if "dims" in r:
                rt.create_relation(name, dims=tuple(r["dims"]), periodic=tuple(r.get("periodic", ())))
            else:
                rt.create_relation(name, int(r.get("size", 1)), allow_empty=True)
        for f in data.get("fields", []):
            rel = rt.relation(_req(f, "relation", "field"))
            ftype = T.parse_type(_req(f, "type", "field"))
            zeros = np.zeros((rel.count,) + ftype.shape, dtype=np.int64 if ftype.is_key else ftype.dtype)
            rt.create_field(rel, _req(f, "name", "field"), ftype, zeros)
        for g in data.get("group_by", []):
            rel = rt.relation(_req(g, "relation", "group_by"))
            key = _req(g, "field", "group_by")
            rt.group_by(rel, key)
            if "accessor" in g:
                on = rt.relation(g["on"]) if "on" in g else rel[key].target
                on.define_where(g["accessor"], rel, key)
        for n, v in data.get("constants", {}).items():
            rt.new_constant(n, *_scalar_decl(v, f"constant {n}"))
        for n, v in data.get("globals", {}).items():
            rt.new_global(n, *_scalar_decl(v, f"global {n}"))
    except RelsimError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"schema: {exc.message}") from exc
    return rt

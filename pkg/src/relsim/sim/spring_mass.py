"""Spring-mass demo: every mesh edge is a spring, vertices integrate explicitly."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .. import types as T
from ..domains import GraphDomain, build_graph, cube_lattice
from ..domains.mesh import ordered_pairs
from ..engine import ExecConfig
from ..io import load_mesh, read_field_file, save_field
from ..relational import Runtime
from .config import SpringMassConfig

KERNEL_FILE = "spring_mass.ebb"


def kernel_source(name: str = KERNEL_FILE) -> str:
    return resources.files(__package__).joinpath("kernels", name).read_text(encoding="utf-8")


def chain_mesh() -> tuple[np.ndarray, np.ndarray]:
    """Two vertices one unit apart on x, joined by a spring in both directions."""
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    return pos, np.array([[0, 1], [1, 0]], dtype=np.int64)


def mesh_for(cfg: SpringMassConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vertex positions and directed spring pairs for ``cfg.mesh``."""
    if cfg.mesh == "chain":
        return chain_mesh()
    if cfg.mesh == "lattice":
        pos, tets = cube_lattice(cfg.lattice_n, spacing=cfg.spacing)
        return pos, ordered_pairs(tets)
    m = load_mesh(cfg.mesh_path)
    return m.positions, ordered_pairs(m.elements)


@dataclass
class EnergyRow:
    step: int
    kinetic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential


class SpringMass:
    """State and compiled kernels of one spring-mass run.

    Springs are the directed edges of the mesh without self-loops, since a
    zero-length spring has no direction.
    """

    def __init__(self, cfg: SpringMassConfig, positions=None, pairs=None):
        self.cfg = cfg
        if positions is None:
            positions, pairs = mesh_for(cfg)
        rt = self.runtime = Runtime()
        self.domain: GraphDomain = build_graph(rt, positions, pairs)
        verts, edges = self.domain.vertices, self.domain.edges
        self.K = rt.new_constant("K", T.float64, cfg.K)
        self.dt = rt.new_constant("dt", T.float64, cfg.dt)
        self.E = rt.new_global("E", T.float64, 0.0)
        self.P = rt.new_global("P", T.float64, 0.0)
        rt.create_field(edges, "rest_len", T.float64, 0.0)
        if cfg.mass_file:
            mass = read_field_file(cfg.mass_file, T.float64, verts.count)
        else:
            mass = cfg.mass
        rt.create_field(verts, "mass", T.float64, mass)
        rt.create_field(verts, "q", T.vector("float64", 3), verts["pos"].data * (1.0 + cfg.stretch))
        rt.create_field(verts, "qd", T.vector("float64", 3), 0.0)
        rt.create_field(verts, "force", T.vector("float64", 3), 0.0)
        self.kernels = rt.kernels(kernel_source())
        self.exec = ExecConfig(workers=cfg.workers, deterministic=cfg.deterministic,
                               nan_guard=cfg.strict_nan)
        self.steps_done = 0
        self.energy_log: list[EnergyRow] = []
        self.kernels["initLen"](config=self.exec)

    def __getitem__(self, name: str):
        return self.kernels[name]

    def step(self) -> None:
        self.kernels["computeInternalForces"](config=self.exec)
        self.kernels["applyForces"](config=self.exec)
        self.steps_done += 1

    def energy(self) -> EnergyRow:
        self.E.set(0.0)
        self.kernels["measureTotalEnergy"](config=self.exec)
        self.P.set(0.0)
        self.kernels["measurePotential"](config=self.exec)
        return EnergyRow(self.steps_done, self.E.get(), self.P.get())

    def run(self, steps: int | None = None) -> list[EnergyRow]:
        """Advance ``steps`` steps, logging energy after step i when i is a multiple of the interval."""
        steps = self.cfg.steps if steps is None else steps
        for i in range(steps):
            self.step()
            if i % self.cfg.energy_interval == 0:
                row = self.energy()
                row.step = i
                self.energy_log.append(row)
        return self.energy_log

    def write_outputs(self, out) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "energy.csv", out / "q.raw", out / "qd.raw"]
        with open(paths[0], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "E", "potential", "total"])
            for r in self.energy_log:
                w.writerow([r.step, repr(r.kinetic), repr(r.potential), repr(r.total)])
        save_field(self.domain.vertices["q"], paths[1])
        save_field(self.domain.vertices["qd"], paths[2])
        return paths


@dataclass
class SpringMassResult:
    sim: SpringMass
    energy: list[EnergyRow]
    outputs: list[Path] = field(default_factory=list)


def run_spring_mass(cfg: SpringMassConfig) -> SpringMassResult:
    sim = SpringMass(cfg.validate())
    log = sim.run()
    outputs = sim.write_outputs(cfg.out) if cfg.out else []
    return SpringMassResult(sim, log, outputs)

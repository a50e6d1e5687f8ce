"""Fluids-lite demo: a periodic 2D velocity grid carrying passive particles.

Each step advects velocity semi-Lagrangianly, diffuses it with Jacobi sweeps,
projects it towards zero divergence, then moves the particles with velocity
interpolated from the grid. Cell width is 1 and the grid origin is 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import types as T
from ..domains import GridDomain, ParticleDomain, attach_particles, build_grid, locate_particles
from ..engine import ExecConfig
from ..io import save_field
from ..relational import Runtime
from .config import FluidsConfig
from .spring_mass import kernel_source

KERNEL_FILE = "fluids.ebb"
VEC2 = T.vector("float64", 2)


def initial_velocity(cfg: FluidsConfig, centers: np.ndarray) -> np.ndarray:
    if cfg.init == "zero":
        return np.zeros_like(centers)
    if cfg.init == "uniform":
        return np.broadcast_to([cfg.u, cfg.v], centers.shape).copy()
    return gaussian_vortex(centers, (cfg.nx / 2, cfg.ny / 2), cfg.vortex_radius, cfg.vortex_strength)


def gaussian_vortex(points: np.ndarray, center, radius: float, strength: float) -> np.ndarray:
    """Counter-clockwise swirl ``strength * (-dy, dx) / radius * exp(-r^2 / radius^2)``."""
    d = points - np.asarray(center, dtype=np.float64)
    fall = np.exp(-(d * d).sum(axis=1) / radius**2) * strength / radius
    return np.stack([-d[:, 1] * fall, d[:, 0] * fall], axis=1)


class Fluids:
    """Grid, particles and compiled kernels of one fluids-lite run."""

    def __init__(self, cfg: FluidsConfig, particle_positions=None):
        self.cfg = cfg
        rt = self.runtime = Runtime()
        self.grid: GridDomain = build_grid(rt, cfg.nx, cfg.ny, periodic=(True, True), name="grid")
        cells = self.grid.cells
        rt.new_constant("dt", T.float64, cfg.dt)
        rt.new_constant("h", T.float64, self.grid.width)
        rt.new_constant("alpha", T.float64, cfg.viscosity * cfg.dt / self.grid.width**2)
        rt.create_field(cells, "vel", VEC2, initial_velocity(cfg, self.grid.cell_centers()))
        for name in ("vel_next", "vel_prev", "src_pos"):
            rt.create_field(cells, name, VEC2, 0.0)
        rt.create_field(cells, "src_dual", T.key(self.grid.dual_cells.name), 0)
        for name in ("div", "p", "p_next"):
            rt.create_field(cells, name, T.float64, 0.0)

        if particle_positions is None:
            rng = np.random.default_rng(cfg.seed)
            particle_positions = rng.uniform([0, 0], [cfg.nx, cfg.ny], size=(cfg.particles, 2))
        self.particles: ParticleDomain = attach_particles(rt, self.grid, particle_positions)
        self.kernels = rt.kernels(kernel_source(KERNEL_FILE))
        self.exec = ExecConfig(workers=cfg.workers, deterministic=cfg.deterministic,
                               nan_guard=cfg.strict_nan)
        self.steps_done = 0
        self.trajectory: list[tuple[int, np.ndarray]] = [(0, self.positions())]

    def _k(self, name: str) -> None:
        self.kernels[name](config=self.exec)

    @property
    def velocity(self) -> np.ndarray:
        return self.grid.cells["vel"].data

    def positions(self) -> np.ndarray:
        return self.particles.particles["pos"].data.copy()

    def advect(self) -> None:
        cells = self.grid.cells
        self._k("backtrace")
        self.runtime.point_locate(self.grid.dual_cells, cells["src_pos"], cells["src_dual"])
        self._k("advect_vel")
        self._k("copy_vel")

    def diffuse(self) -> None:
        if self.cfg.viscosity == 0 or self.cfg.diffuse_iters == 0:
            return
        self._k("save_vel")
        for _ in range(self.cfg.diffuse_iters):
            self._k("diffuse")
            self._k("copy_vel")

    def project(self) -> None:
        self._k("divergence")
        for _ in range(self.cfg.pressure_iters):
            self._k("pressure_jacobi")
            self._k("copy_p")
        self._k("subtract_gradient")

    def move_particles(self) -> None:
        if not self.particles.particles.count:
            return
        self._k("update_particle_vel")
        self._k("update_particle_pos")
        locate_particles(self.runtime, self.grid, self.particles.particles)

    def step(self) -> None:
        self.advect()
        self.diffuse()
        self.project()
        self.move_particles()
        self.steps_done += 1
        if self.steps_done % self.cfg.trajectory_interval == 0:
            self.trajectory.append((self.steps_done, self.positions()))

    def run(self, steps: int | None = None) -> None:
        for _ in range(self.cfg.steps if steps is None else steps):
            self.step()

    def write_outputs(self, out) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "vel.raw", out / "particles.csv"]
        save_field(self.grid.cells["vel"], paths[0])
        with open(paths[1], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "particle", "x", "y"])
            for step, pos in self.trajectory:
                for i, (x, y) in enumerate(pos):
                    w.writerow([step, i, repr(float(x)), repr(float(y))])
        return paths


@dataclass
class FluidsResult:
    sim: Fluids
    outputs: list[Path] = field(default_factory=list)


def run_fluids(cfg: FluidsConfig) -> FluidsResult:
    sim = Fluids(cfg.validate())
    sim.run()
    outputs = sim.write_outputs(cfg.out) if cfg.out else []
    return FluidsResult(sim, outputs)

"""Flat ``key = value`` configuration files for the demo simulations.

Blank lines and ``#`` comments are ignored. Every key has a default, listed
with its meaning by :func:`describe`. Values are parsed according to the
type of the default; booleans accept ``true/false/yes/no/1/0``.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _opt(default, help: str):
    return field(default=default, metadata={"help": help})


@dataclass(frozen=True)
class SimConfig:
    """Options shared by both simulations."""

    steps: int = _opt(0, "number of time steps")
    workers: int = _opt(1, "worker threads per kernel launch")
    deterministic: bool = _opt(False, "reproduce single-worker reductions bit for bit")
    strict_nan: bool = _opt(False, "fail when a kernel writes NaN")
    out: str = _opt("", "output directory; empty disables file output")

    def validate(self) -> "SimConfig":
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        return self

    def with_overrides(self, **kw) -> "SimConfig":
        """Copy with the non-None entries of ``kw`` replaced, then validated."""
        known = {f.name for f in fields(self)}
        for k in kw:
            if k not in known:
                raise ConfigError(f"unknown option {k!r}")
        return replace(self, **{k: v for k, v in kw.items() if v is not None}).validate()

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpringMassConfig(SimConfig):
    steps: int = _opt(1000, "number of time steps")
    mesh: str = _opt("lattice", "lattice, chain (2 vertices) or file")
    lattice_n: int = _opt(3, "cubes per side of the generated tet lattice")
    spacing: float = _opt(1.0, "edge length of a lattice cube")
    mesh_path: str = _opt("", "mesh file when mesh = file (.off or .node/.ele)")
    K: float = _opt(1.0, "spring stiffness")
    dt: float = _opt(1e-4, "time step")
    mass: float = _opt(1.0, "mass of every vertex, unless mass_file is set")
    mass_file: str = _opt("", "per-vertex masses (raw or .csv field file)")
    stretch: float = _opt(0.0, "initial q = pos * (1 + stretch)")
    energy_interval: int = _opt(100, "log energy every this many steps")

    def validate(self) -> "SpringMassConfig":
        super().validate()
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.mesh not in ("lattice", "chain", "file"):
            raise ConfigError(f"mesh must be lattice, chain or file, got {self.mesh!r}")
        if self.mesh == "file" and not self.mesh_path:
            raise ConfigError("mesh = file needs mesh_path")
        if self.lattice_n < 1:
            raise ConfigError(f"lattice_n must be >= 1, got {self.lattice_n}")
        if not self.spacing > 0:
            raise ConfigError(f"spacing must be > 0, got {self.spacing}")
        if not self.mass > 0:
            raise ConfigError(f"mass must be > 0, got {self.mass}")
        if self.energy_interval < 1:
            raise ConfigError(f"energy_interval must be >= 1, got {self.energy_interval}")
        return self


@dataclass(frozen=True)
class FluidsConfig(SimConfig):
    steps: int = _opt(100, "number of time steps")
    nx: int = _opt(64, "grid cells along x")
    ny: int = _opt(64, "grid cells along y")
    dt: float = _opt(0.1, "time step")
    viscosity: float = _opt(0.001, "kinematic viscosity; 0 skips diffusion")
    diffuse_iters: int = _opt(20, "Jacobi sweeps for diffusion")
    pressure_iters: int = _opt(50, "Jacobi sweeps for the pressure solve")
    init: str = _opt("vortex", "initial velocity: vortex, uniform or zero")
    u: float = _opt(1.0, "x velocity for init = uniform")
    v: float = _opt(0.5, "y velocity for init = uniform")
    vortex_strength: float = _opt(1.0, "peak-scale speed of the vortex")
    vortex_radius: float = _opt(8.0, "Gaussian radius of the vortex, in cells")
    particles: int = _opt(64, "number of tracer particles")
    seed: int = _opt(0, "seed for particle placement")
    trajectory_interval: int = _opt(1, "record particle positions every this many steps")

    def validate(self) -> "FluidsConfig":
        super().validate()
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError(f"grid must be at least 1x1, got {self.nx}x{self.ny}")
        if self.viscosity < 0:
            raise ConfigError(f"viscosity must be >= 0, got {self.viscosity}")
        if self.diffuse_iters < 0 or self.pressure_iters < 0:
            raise ConfigError("iteration counts must be >= 0")
        if self.init not in ("vortex", "uniform", "zero"):
            raise ConfigError(f"init must be vortex, uniform or zero, got {self.init!r}")
        if not self.vortex_radius > 0:
            raise ConfigError(f"vortex_radius must be > 0, got {self.vortex_radius}")
        if self.particles < 0:
            raise ConfigError(f"particles must be >= 0, got {self.particles}")
        if self.trajectory_interval < 1:
            raise ConfigError(f"trajectory_interval must be >= 1, got {self.trajectory_interval}")
        return self


def _parse_value(raw: str, default, key: str, where: str):
    if isinstance(default, bool):
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{where}: {key} expects a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        kind = "an integer" if isinstance(default, int) else "a number"
        raise ConfigError(f"{where}: {key} expects {kind}, got {raw!r}") from None
    return raw


def parse_config(text: str, cls=SimConfig, source: str = "<config>"):
    """Parse config ``text`` into ``cls``, validating the result."""
    opts = {f.name: f for f in fields(cls)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        where = f"{source}:{lineno}"
        if "=" not in s:
            raise ConfigError(f"{where}: expected key = value, got {s!r}")
        key, raw = (p.strip() for p in s.split("=", 1))
        if key not in opts:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: {key} set twice")
        values[key] = _parse_value(raw, opts[key].default, key, where)
    return cls(**values).validate()


def load_config(path, cls=SimConfig):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, cls, str(path))


def describe(cls) -> str:
    """One ``key = default  # help`` line per option."""
    out = []
    for f in fields(cls):
        d = f.default
        shown = ("true" if d else "false") if isinstance(d, bool) else d
        out.append(f"{f.name} = {shown}  # {f.metadata.get('help', '')}")
    return "\n".join(out)

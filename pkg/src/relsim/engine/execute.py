"""Compiled kernels and parallel execution."""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ExecutionError, NaNGuardError
from ..lang import expand_accessors, parse_kernel, parse_kernels, pretty_print
from ..relational import Relation, Subset
from . import ops
from .phases import PhaseMap, infer_phases
from .reference import ReferenceInterpreter
from .typecheck import TypedKernel, typecheck
from .vector import Sink, VectorKernel, apply_field_contribs, fold_global

BACKENDS = ("vector", "reference")


@dataclass(frozen=True)
class ExecConfig:
    """How a kernel launch runs.

    ``deterministic`` makes multi-worker runs reproduce the single-worker
    result exactly. ``block_size`` is accepted as a hint and otherwise
    ignored; blocks are always ``ceil(n / workers)`` elements.
    """

    workers: int = 1
    deterministic: bool = False
    backend: str = "vector"
    nan_guard: bool = False
    block_size: int | None = None

    def __post_init__(self):
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")


_POOLS: dict[int, ThreadPoolExecutor] = {}
_POOL_LOCK = threading.Lock()


def _pool(workers: int) -> ThreadPoolExecutor:
    with _POOL_LOCK:
        p = _POOLS.get(workers)
        if p is None:
            p = _POOLS[workers] = ThreadPoolExecutor(workers, thread_name_prefix="relsim")
        return p


def partition(n: int, workers: int) -> list[tuple[int, int]]:
    """Static contiguous blocks of ``ceil(n / workers)`` positions."""
    if n == 0:
        return []
    size = math.ceil(n / workers)
    return [(a, min(a + size, n)) for a in range(0, n, size)]


class Kernel:
    """A parsed, expanded, typed and phase-checked kernel bound to a runtime."""

    def __init__(self, runtime, ast):
        self.runtime = runtime
        self.source_ast = ast
        self.ast = expand_accessors(ast, runtime)
        self.typed: TypedKernel = typecheck(self.ast, runtime)
        self.phases: PhaseMap = infer_phases(self.typed)
        self.relation: Relation = self.typed.relation
        self._vector: VectorKernel | None = None

    @property
    def name(self) -> str:
        return self.ast.name

    @property
    def vectorizable(self) -> bool:
        return not self.typed.vector_blockers

    def signature(self) -> str:
        return self.typed.signature()

    def source(self, expanded: bool = True) -> str:
        return pretty_print(self.ast if expanded else self.source_ast)

    def __repr__(self) -> str:
        return f"Kernel({self.name!r} over {self.relation.name})"

    def __call__(self, target=None, config: ExecConfig | None = None, **kw) -> None:
        cfg = config or ExecConfig(**kw)
        if config is not None and kw:
            raise ConfigError("pass either an ExecConfig or keyword options, not both")
        run(self, target, cfg)

    def vector(self) -> VectorKernel:
        if self._vector is None:
            self._vector = VectorKernel(self.typed, self.phases)
        return self._vector


def _target_rows(kernel: Kernel, target) -> np.ndarray:
    rel = kernel.relation
    if target is None or target is rel:
        return np.arange(rel.count, dtype=np.int64)
    if isinstance(target, Subset):
        if target.owner is not rel:
            raise ExecutionError(f"kernel {kernel.name} runs over {rel.name}, not subset "
                                 f"{target.name} of {target.owner.name}")
        return np.asarray(target.rows, dtype=np.int64)
    if isinstance(target, Relation):
        raise ExecutionError(f"kernel {kernel.name} runs over {rel.name}, not {target.name}")
    raise ExecutionError(f"cannot launch {kernel.name} over {target!r}")


def _span(rows: np.ndarray):
    if len(rows) and int(rows[-1]) - int(rows[0]) + 1 == len(rows):
        return int(rows[0]), int(rows[-1]) + 1
    return None


def run(kernel: Kernel, target=None, cfg: ExecConfig = ExecConfig()) -> None:
    rows = _target_rows(kernel, target)
    if cfg.backend == "reference" or not kernel.vectorizable:
        ReferenceInterpreter(kernel.typed, kernel.phases).run(rows)
    else:
        _run_vector(kernel, rows, cfg)
    if cfg.nan_guard:
        _nan_guard(kernel, rows)


def _run_vector(kernel: Kernel, rows: np.ndarray, cfg: ExecConfig) -> None:
    vk = kernel.vector()
    fields = kernel.typed.field_objs
    globals_ = kernel.typed.globals
    phases = kernel.phases
    blocks = partition(len(rows), cfg.workers)
    lock = threading.Lock()
    atomic = cfg.workers > 1 and not cfg.deterministic

    def work(block) -> Sink:
        a, b = block
        sub = rows[a:b]
        sink = vk.run_block(sub, _span(sub))
        for q in vk.owned:
            apply_field_contribs(fields[q], phases.fields[q].op, sink.fields.pop(q, []))
        if atomic:
            with lock:
                for q, parts in list(sink.fields.items()):
                    apply_field_contribs(fields[q], phases.fields[q].op, parts)
                sink.fields.clear()
        return sink

    if len(blocks) <= 1:
        sinks = [work(b) for b in blocks]
    else:
        futures = [_pool(cfg.workers).submit(work, b) for b in blocks]
        sinks, errors = [], []
        for f in futures:
            try:
                sinks.append(f.result())
            except BaseException as exc:  # noqa: BLE001
                errors.append(exc)
        if errors:
            raise min(errors, key=lambda e: getattr(e, "element", math.inf))

    for q in vk.shared:
        parts = [p for s in sinks for p in s.fields.get(q, [])]
        apply_field_contribs(fields[q], phases.fields[q].op, parts)
    for name, ph in phases.globals.items():
        if not ph.is_reduce:
            continue
        g = globals_[name]
        if atomic:
            start = np.broadcast_to(ops.identity(ph.op, g.type.dtype), g.type.shape).copy()
            partials = [fold_global(ph.op, start, s.globals.get(name, [])) for s in sinks]
            combined = ops.reduce_combine(ph.op, partials, g.type.dtype)
            g._value = np.asarray(ops.REDUCE_UFUNCS[ph.op](g._value, combined))
        else:
            parts = [p for s in sinks for p in s.globals.get(name, [])]
            g._value = np.asarray(fold_global(ph.op, g._value, parts))


def _nan_guard(kernel: Kernel, rows: np.ndarray) -> None:
    for q, ph in kernel.phases.fields.items():
        if ph.kind == "ReadOnly":
            continue
        fld = kernel.typed.field_objs[q]
        if not fld.type.is_float:
            continue
        check = fld.data if ph.is_reduce else fld.data[rows]
        flat = check.reshape(len(check), -1)
        bad = np.flatnonzero(np.isnan(flat).any(axis=1))
        if len(bad):
            r = int(bad[0]) if ph.is_reduce else int(rows[bad[0]])
            raise NaNGuardError(f"kernel {kernel.name} produced NaN in {q} at row {r}",
                                kernel=kernel.name, field=q, row=r)
    for name, ph in kernel.phases.globals.items():
        g = kernel.typed.globals[name]
        if ph.is_reduce and g.type.is_float and np.isnan(g._value).any():
            raise NaNGuardError(f"kernel {kernel.name} produced NaN in global {name}",
                                kernel=kernel.name, field=name)


def compile_kernel(runtime, text: str) -> Kernel:
    return Kernel(runtime, parse_kernel(text, runtime))


def compile_kernels(runtime, text: str) -> dict[str, Kernel]:
    out = {}
    for ast in parse_kernels(text, runtime):
        if ast.name in out:
            raise ExecutionError(f"kernel {ast.name!r} is defined twice")
        out[ast.name] = Kernel(runtime, ast)
    return out

"""Kernel typing, phase inference and execution."""

from .execute import ExecConfig, Kernel, compile_kernel, compile_kernels, partition, run
from .ops import reduce_combine
from .phases import Phase, PhaseMap, infer_phases
from .typecheck import TypedKernel, typecheck

__all__ = [
    "ExecConfig", "Kernel", "compile_kernel", "compile_kernels", "partition", "run",
    "reduce_combine", "Phase", "PhaseMap", "infer_phases", "TypedKernel", "typecheck",
]

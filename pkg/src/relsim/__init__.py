"""relsim: relational data model and kernel language for physical simulation."""

from . import types
from .engine import ExecConfig, Kernel, reduce_combine
from .errors import RelsimError
from .relational import AffineMap, Constant, Field, Global, Relation, Runtime, Subset

__version__ = "0.1.0"

__all__ = [
    "types", "ExecConfig", "Kernel", "reduce_combine", "RelsimError", "AffineMap", "Constant",
    "Field", "Global", "Relation", "Runtime", "Subset", "__version__",
]

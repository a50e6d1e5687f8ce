"""Kernel language front end: parsing, printing and accessor expansion."""

from .expand import expand_accessors
from .parser import BUILTINS, parse_kernel, parse_kernels, tokenize
from .printer import pretty_print

__all__ = ["parse_kernel", "parse_kernels", "tokenize", "pretty_print", "expand_accessors", "BUILTINS"]

"""Mesh and field file formats, and the zero-copy interop surface."""

from .fields import export_view, import_view, load_field, read_field_file, save_field
from .mesh import MeshFile, load_mesh, load_node_ele, load_off, write_node_ele, write_off

__all__ = [
    "export_view", "import_view", "load_field", "read_field_file", "save_field",
    "MeshFile", "load_mesh", "load_node_ele", "load_off", "write_node_ele", "write_off",
]

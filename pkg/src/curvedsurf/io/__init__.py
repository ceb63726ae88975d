from .data import HigherOrderMeshData, ParsedFieldData, as_grid_function
from .msh import MshError, parse_msh4, read_msh4
from .ordering import canonical_to_vtk, gmsh_to_canonical, recursive_lattice, vtk_to_canonical
from .vtk import VtkError, read_vtu, write_vtu

__all__ = [
    "HigherOrderMeshData", "ParsedFieldData", "as_grid_function",
    "MshError", "parse_msh4", "read_msh4",
    "VtkError", "read_vtu", "write_vtu",
    "canonical_to_vtk", "gmsh_to_canonical", "vtk_to_canonical", "recursive_lattice",
]

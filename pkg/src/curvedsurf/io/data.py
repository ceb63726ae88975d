from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gridfunctions import ElementwiseLagrangeFunction
from ..lagrange import lagrange_basis
from ..mesh import SurfaceMesh


@dataclass(frozen=True)
class HigherOrderMeshData:
    """Corner mesh plus per-element Lagrange node coordinates in canonical order."""

    mesh: SurfaceMesh
    order: int
    element_nodes: np.ndarray  # (F, n_k, 3)

    def __post_init__(self):
        nodes = np.asarray(self.element_nodes, dtype=float)
        basis = lagrange_basis(self.order)
        if nodes.shape != (self.mesh.n_triangles, basis.size, 3):
            raise ValueError(
                f"element nodes of shape {nodes.shape} do not match "
                f"{self.mesh.n_triangles} elements of order {self.order}"
            )
        corners = nodes[:, basis.corner_indices()]
        if not np.allclose(corners, self.mesh.vertices[self.mesh.triangles], rtol=0, atol=1e-12):
            raise ValueError("corner nodes do not coincide with mesh vertices")
        nodes.setflags(write=False)
        object.__setattr__(self, "element_nodes", nodes)


@dataclass
class ParsedFieldData:
    """Named point and cell arrays; lengths are checked against the owner."""

    point_data: dict = field(default_factory=dict)
    cell_data: dict = field(default_factory=dict)

    def check(self, n_points: int, n_cells: int):
        for name, arr in self.point_data.items():
            if len(arr) != n_points:
                raise ValueError(f"point field {name!r} has {len(arr)} values, expected {n_points}")
        for name, arr in self.cell_data.items():
            if len(arr) != n_cells:
                raise ValueError(f"cell field {name!r} has {len(arr)} values, expected {n_cells}")
        return self


def as_grid_function(data: HigherOrderMeshData) -> ElementwiseLagrangeFunction:
    """Element-wise Lagrange grid function of the file geometry."""
    return ElementwiseLagrangeFunction(data.mesh, data.element_nodes, data.order)


def corner_mesh_from_cells(points, cells_canonical, order):
    """Deduplicate corner points into a mesh; returns (mesh, element_nodes)."""
    from ..mesh import build

    basis = lagrange_basis(order)
    corner_ids = cells_canonical[:, basis.corner_indices()]
    used, inverse = np.unique(corner_ids, return_inverse=True)
    mesh = build(np.asarray(points)[used], inverse.reshape(corner_ids.shape))
    return mesh, np.asarray(points)[cells_canonical]

"""Global enumeration of Lagrange nodes on a reference mesh.

Layout: all mesh vertices first, then ``k - 1`` nodes per edge running from
the edge's lower-index vertex to its higher-index vertex, then the interior
nodes of every element.  Neighbouring elements therefore share edge nodes
without orientation fix-ups.
"""
from __future__ import annotations

import numpy as np

from .lagrange import lagrange_basis
from .reference import TRIANGLE_EDGES


class ScalarSpace:
    """Continuous Lagrange space of a given order over a :class:`SurfaceMesh`."""

    def __init__(self, mesh, order: int):
        self.mesh = mesh
        self.order = order
        self.basis = lagrange_basis(order)
        k = order
        n_int = (k - 1) * (k - 2) // 2
        self.n_edge_dofs = k - 1
        self.n_interior_dofs = n_int
        self.n_dofs = mesh.n_vertices + (k - 1) * mesh.n_edges + n_int * mesh.n_triangles
        self.dofmap = self._build_dofmap()
        self.dofmap.setflags(write=False)

    def _build_dofmap(self):
        k = self.order
        mesh = self.mesh
        tri = mesh.triangles
        F = len(tri)
        V = mesh.n_vertices
        E = mesh.n_edges
        out = np.empty((F, self.basis.size), dtype=np.int64)
        interior_rank = 0
        for local, (i, j) in enumerate(self.basis.lattice):
            lam = (k - i - j, i, j)
            zeros = [c for c in range(3) if lam[c] == 0]
            if max(lam) == k:
                out[:, local] = tri[:, lam.index(k)]
            elif len(zeros) == 1:
                # the edge opposite to the vanishing barycentric coordinate
                a, b = [c for c in range(3) if c != zeros[0]]
                edge = TRIANGLE_EDGES.index((a, b))
                s = lam[b]
                forward = tri[:, a] < tri[:, b]
                pos = np.where(forward, s, k - s)
                out[:, local] = V + mesh.triangle_edges[:, edge] * (k - 1) + pos - 1
            else:
                out[:, local] = V + (k - 1) * E + np.arange(F) * self.n_interior_dofs + interior_rank
                interior_rank += 1
        return out

    def node_positions(self) -> np.ndarray:
        """Flat-mesh coordinates of all global nodes, shape ``(n_dofs, 3)``."""
        pos = np.empty((self.n_dofs, 3))
        local = self.mesh.map_points(self.basis.nodes)
        pos[self.dofmap.ravel()] = local.reshape(-1, 3)
        return pos

    def element_values(self, coefficients) -> np.ndarray:
        """Gather global coefficients into per-element arrays ``(F, n_k, ...)``."""
        return np.asarray(coefficients)[self.dofmap]

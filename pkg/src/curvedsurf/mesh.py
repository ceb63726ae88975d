"""Flat reference triangle meshes: storage, topology and uniform refinement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .reference import TRIANGLE, TRIANGLE_EDGES, LocalGeometry, edge_local_geometry


class MeshError(ValueError):
    pass


BOUNDARY = -1


@dataclass(frozen=True)
class FlatElementGeometry:
    """Affine map ``x -> v0 + x1 (v1 - v0) + x2 (v2 - v0)`` of one triangle."""

    corners: np.ndarray

    def global_(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.corners[0] + x @ self.jacobian_transposed()

    __call__ = global_

    def jacobian_transposed(self, x=None) -> np.ndarray:
        return self.corners[1:] - self.corners[0]

    def jacobian_inverse_transposed(self, x=None) -> np.ndarray:
        jt = self.jacobian_transposed()
        return jt.T @ np.linalg.inv(jt @ jt.T)

    def integration_element(self, x=None) -> float:
        jt = self.jacobian_transposed()
        return float(np.sqrt(np.linalg.det(jt @ jt.T)))

    def volume(self) -> float:
        return 0.5 * self.integration_element()

    def normal(self, x=None) -> np.ndarray:
        jt = self.jacobian_transposed()
        c = np.cross(jt[0], jt[1])
        return c / np.linalg.norm(c)


@dataclass(frozen=True)
class Intersection:
    """One edge of an element seen from both sides.

    Both local geometries run from the edge vertex with the smaller global
    index to the larger one, so ``mu_inside(geometry_in_inside(t))`` equals
    ``mu_outside(geometry_in_outside(t))`` for every ``t`` (twist-free).
    """

    inside: int
    outside: int
    edge: int
    index_in_inside: int
    index_in_outside: int
    geometry_in_inside: LocalGeometry
    geometry_in_outside: Optional[LocalGeometry]

    @property
    def boundary(self) -> bool:
        return self.outside == BOUNDARY


class SurfaceMesh:
    """Index-based triangle mesh with derived edge topology.

    Use :func:`build` (or the builders in :mod:`curvedsurf.meshes`) to
    construct a validated instance.
    """

    def __init__(self, vertices, triangles):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self._build_topology()

    def _build_topology(self):
        tri = self.triangles
        local = np.array(TRIANGLE_EDGES)
        pairs = tri[:, local]  # (F, 3, 2)
        sorted_pairs = np.sort(pairs, axis=-1).reshape(-1, 2)
        edges, inverse = np.unique(sorted_pairs, axis=0, return_inverse=True)
        self.edges = edges
        self.triangle_edges = inverse.reshape(-1, 3)
        counts = np.bincount(inverse, minlength=len(edges))
        self._edge_valence = counts
        e2t = np.full((len(edges), 2), BOUNDARY, dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        sorted_edges = inverse[order]
        rank = np.arange(len(order)) - np.searchsorted(sorted_edges, sorted_edges)
        keep = rank < 2
        e2t[sorted_edges[keep], rank[keep]] = order[keep] // 3
        self.edge_to_triangles = e2t
        v2t = [[] for _ in range(len(self.vertices))]
        for t, row in enumerate(tri):
            for v in row:
                v2t[v].append(t)
        self.vertex_to_triangles = [np.array(r, dtype=np.int64) for r in v2t]

    # -- counts ----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __len__(self) -> int:
        return self.n_triangles

    def __repr__(self) -> str:
        return f"SurfaceMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_triangles})"

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_to_triangles[:, 1] == BOUNDARY)

    @property
    def is_closed(self) -> bool:
        return len(self.boundary_edges()) == 0

    # -- geometry --------------------------------------------------------
    def element_geometry(self, element: int) -> FlatElementGeometry:
        return FlatElementGeometry(self.vertices[self.triangles[element]])

    def jacobians_transposed(self) -> np.ndarray:
        """Constant transposed Jacobians of all elements, shape ``(F, 2, 3)``."""
        c = self.vertices[self.triangles]
        return c[:, 1:] - c[:, :1]

    def map_points(self, xhat, elements=None) -> np.ndarray:
        """Flat positions of reference points: ``(F, q, 3)`` for ``xhat`` of shape ``(q, 2)``."""
        tri = self.triangles if elements is None else self.triangles[elements]
        c = self.vertices[tri]
        xhat = np.asarray(xhat, dtype=float)
        return c[:, None, 0] + np.einsum("qa,fad->fqd", xhat, c[:, 1:] - c[:, :1])

    def areas(self) -> np.ndarray:
        jt = self.jacobians_transposed()
        return 0.5 * np.linalg.norm(np.cross(jt[:, 0], jt[:, 1]), axis=-1)

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=-1)

    # -- intersections ---------------------------------------------------
    def intersections(self, element: int) -> list[Intersection]:
        out = []
        tri = self.triangles[element]
        for local in range(3):
            edge = int(self.triangle_edges[element, local])
            a, b = TRIANGLE_EDGES[local]
            geo_in = edge_local_geometry(TRIANGLE, local, flip=tri[a] > tri[b])
            t0, t1 = self.edge_to_triangles[edge]
            other = int(t1 if t0 == element else t0)
            if other == BOUNDARY:
                out.append(Intersection(element, BOUNDARY, edge, local, -1, geo_in, None))
                continue
            local_out = int(np.flatnonzero(self.triangle_edges[other] == edge)[0])
            oa, ob = TRIANGLE_EDGES[local_out]
            otri = self.triangles[other]
            geo_out = edge_local_geometry(TRIANGLE, local_out, flip=otri[oa] > otri[ob])
            out.append(Intersection(element, other, edge, local, local_out, geo_in, geo_out))
        return out


def build(vertices, triangles, *, area_tol: float = 1e-14) -> SurfaceMesh:
    """Validate input and construct a :class:`SurfaceMesh`.

    Raises :class:`MeshError` for out-of-range indices, degenerate
    triangles, non-manifold edges and inconsistent orientation.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshError(f"vertices must have shape (n, 3), got {vertices.shape}")
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise MeshError(f"only triangles are supported; got cells of shape {triangles.shape}")
    if len(triangles) == 0:
        raise MeshError("mesh has no triangles")
    if triangles.min() < 0 or triangles.max() >= len(vertices):
        raise MeshError("triangle vertex index out of range")

    repeated = (triangles[:, 0] == triangles[:, 1]) | (triangles[:, 1] == triangles[:, 2]) | (
        triangles[:, 0] == triangles[:, 2]
    )
    c = vertices[triangles]
    cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    area2 = np.linalg.norm(cross, axis=-1)
    scale = np.max(np.linalg.norm(c - c[:, [1, 2, 0]], axis=-1), axis=-1) ** 2
    bad = np.flatnonzero(repeated | (area2 <= area_tol * np.maximum(scale, np.finfo(float).tiny)))
    if len(bad):
        raise MeshError(f"degenerate triangle(s) {bad[:10].tolist()}")

    mesh = SurfaceMesh(vertices, triangles)
    over = np.flatnonzero(mesh._edge_valence > 2)
    if len(over):
        raise MeshError(f"non-manifold edge(s) {mesh.edges[over[:10]].tolist()}")

    directed = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    _, idx, cnt = np.unique(directed, axis=0, return_index=True, return_counts=True)
    dup = idx[cnt > 1]
    if len(dup):
        faces = (dup % len(triangles)).tolist()
        raise MeshError(f"inconsistent orientation at directed edge(s) {directed[dup[:10]].tolist()}, triangles {faces[:10]}")
    return mesh


def refine_uniform(mesh: SurfaceMesh, projection: Optional[Callable] = None) -> SurfaceMesh:
    """Split every triangle into four through its edge midpoints.

    New vertex ``V + e`` is the midpoint of edge ``e``; when a projection is
    given it is applied to the midpoints (vectorized over rows).
    """
    v = mesh.vertices
    mid = 0.5 * (v[mesh.edges[:, 0]] + v[mesh.edges[:, 1]])
    if projection is not None:
        mid = np.asarray(projection(mid), dtype=float)
    nv = mesh.n_vertices
    a, b, c = mesh.triangles.T
    m_ab, m_ac, m_bc = (nv + mesh.triangle_edges[:, i] for i in range(3))
    tris = np.concatenate(
        [
            np.stack([a, m_ab, m_ac], axis=1),
            np.stack([m_ab, b, m_bc], axis=1),
            np.stack([m_ac, m_bc, c], axis=1),
            np.stack([m_ab, m_bc, m_ac], axis=1),
        ]
    )
    # keep children of a parent contiguous
    order = np.arange(len(tris)).reshape(4, -1).T.ravel()
    return build(np.concatenate([v, mid]), tris[order])


def grid_width(mesh: SurfaceMesh) -> float:
    return float(mesh.edge_lengths().max())

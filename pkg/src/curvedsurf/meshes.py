"""Programmatic reference meshes for the test surfaces."""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from .mesh import build, refine_uniform


def _hull_mesh(points):
    points = np.asarray(points, dtype=float)
    tris = ConvexHull(points).simplices.copy()
    c = points[tris]
    outward = np.einsum("ij,ij->i", np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), c.mean(axis=1) - points.mean(axis=0))
    tris[outward < 0] = tris[outward < 0][:, [0, 2, 1]]
    return build(points, tris)


def tetrahedron():
    return _hull_mesh([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])


def octahedron():
    return _hull_mesh(np.concatenate([np.eye(3), -np.eye(3)]))


def icosahedron(radius: float = 1.0):
    phi = (1 + np.sqrt(5)) / 2
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            pts += [(0, s1, s2 * phi), (s1, s2 * phi, 0), (s2 * phi, 0, s1)]
    pts = np.array(pts, dtype=float)
    return _hull_mesh(radius * pts / np.linalg.norm(pts, axis=1, keepdims=True))


def flat_square(n: int = 1, size: float = 1.0):
    """Square ``[0, size]^2`` in the z=0 plane, ``2 n^2`` triangles, normal +z."""
    t = np.linspace(0, size, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    idx = lambda i, j: j * (n + 1) + i
    tris = []
    for j in range(n):
        for i in range(n):
            tris.append((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)))
            tris.append((idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)))
    return build(verts, tris)


def torus(R: float = 2.0, r: float = 1.0, nu: int = 16, nv: int = 8):
    """Structured torus mesh with vertices on the surface, outward oriented."""
    u = 2 * np.pi * np.arange(nu) / nu
    v = 2 * np.pi * np.arange(nv) / nv
    U, Vv = np.meshgrid(u, v, indexing="ij")
    rho = R + r * np.cos(Vv)
    verts = np.stack([rho * np.cos(U), rho * np.sin(U), r * np.sin(Vv)], axis=-1).reshape(-1, 3)
    idx = lambda i, j: (i % nu) * nv + (j % nv)
    tris = []
    for i in range(nu):
        for j in range(nv):
            tris.append((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)))
            tris.append((idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)))
    return build(verts, tris)


def refined(mesh, levels: int, projection=None):
    for _ in range(levels):
        mesh = refine_uniform(mesh, projection)
    return mesh


def sphere_mesh(levels: int = 0, radius: float = 1.0):
    """Icosahedron refined ``levels`` times with midpoints projected onto the sphere."""
    from .projections import SphereProjection

    return refined(icosahedron(radius), levels, SphereProjection(radius))


def projected_mesh(mesh, projection):
    """Same connectivity with every vertex moved by ``projection``."""
    return build(projection(mesh.vertices), mesh.triangles)


def ellipsoid_mesh(levels: int = 0, axes=(1.0, 1.25, 0.75), base_levels: int = 2):
    """Icosphere with ``base_levels`` refinements scaled onto the ellipsoid,
    then refined ``levels`` times with projected midpoints."""
    from .projections import EllipsoidProjection

    unit = sphere_mesh(base_levels)
    base = build(unit.vertices * np.asarray(axes, dtype=float), unit.triangles)
    return refined(base, levels, EllipsoidProjection(*axes))


def torus_mesh(levels: int = 0, R: float = 2.0, r: float = 1.0, nu: int = 16, nv: int = 8):
    from .projections import TorusProjection

    return refined(torus(R, r, nu, nv), levels, TorusProjection(R, r))


def genus2_mesh(spacing: float = 0.12):
    """Zero level set of the genus-2 function, extracted by marching cubes.

    The vertices lie close to, but not on, the surface.
    """
    from skimage.measure import marching_cubes

    from .projections import genus2_psi

    lo = np.array([-2.0, -2.0, -1.25])
    hi = -lo
    n = np.ceil((hi - lo) / spacing).astype(int) + 1
    axes = [np.linspace(lo[d], hi[d], n[d]) for d in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = genus2_psi(grid)
    step = np.array([a[1] - a[0] for a in axes])
    verts, faces, _, _ = marching_cubes(values, level=0.0, spacing=tuple(step), gradient_direction="descent")
    verts = verts + lo
    return build(verts, faces)

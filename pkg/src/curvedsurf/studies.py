"""Numerical studies: geometric errors, vector Helmholtz, mean curvature flow,
implicit projection.  Each returns plain row dicts that the CLI writes as CSV."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import fem, meshes
from .geometry import CurvedSurface
from .gridfunctions import AnalyticGridFunction, DiscreteGridViewFunction
from .mesh import grid_width  # noqa: F401  (re-exported for the CLI)
from .projections import (EllipsoidProjection, SphereProjection, TorusProjection,
                          genus2_projection)
from .quadrature import rule
from .space import ScalarSpace


@dataclass
class StudyResult:
    rows: list
    summary: dict = field(default_factory=dict)


def analytic_case(name: str, radius: float = 1.0, axes=(1.0, 1.25, 0.75), radii=(2.0, 1.0)):
    """Mesh builder ``level -> SurfaceMesh`` and the exact projection of a test geometry."""
    if name == "sphere":
        proj = SphereProjection(radius)
        return (lambda level: meshes.sphere_mesh(level, radius)), proj
    if name == "ellipsoid":
        proj = EllipsoidProjection(*axes)
        return (lambda level: meshes.ellipsoid_mesh(level, tuple(axes))), proj
    if name == "torus":
        R, r = radii
        proj = TorusProjection(R, r)
        return (lambda level: meshes.torus_mesh(level, R, r)), proj
    raise ValueError(f"no analytic oracle for geometry {name!r}")


def loglog_slope(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if len(h) < 2 or np.any(err <= 0) or not np.all(np.isfinite(err)):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def eoc(h, err) -> list:
    out = [float("nan")]
    for i in range(1, len(h)):
        out.append(math.log(err[i - 1] / err[i]) / math.log(h[i - 1] / h[i]))
    return out


# -- geometric errors ----------------------------------------------------------

def geometry_errors(geometry: str = "sphere", orders: Sequence[int] = (1, 2, 3), levels: int = 4,
                    quad_degree: Optional[int] = None, **params) -> StudyResult:
    """Max-norm errors of X^k, n_h^k and H_h^k sampled at quadrature points.

    The exact quantities are evaluated at the image of the same reference
    point under the exact parametrization.  Slopes are least-squares fits on
    the log-log data; curvature is not fitted for ``k = 1`` (flat elements
    carry no curvature).
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    make, proj = analytic_case(geometry, **params)
    rows = []
    for level in range(levels):
        mesh = make(level)
        h = grid_width(mesh)
        gf = AnalyticGridFunction(mesh, proj)
        for k in orders:
            q = rule(2, quad_degree if quad_degree is not None else 2 * k + 2)
            cs = CurvedSurface(mesh, gf, order=k)
            s = cs.sample(q.points, second=True)
            X = proj(mesh.map_points(q.points).reshape(-1, 3))
            xh = s.x.reshape(-1, 3)
            rows.append({
                "level": level, "h": h, "k": k,
                "err_X": float(np.linalg.norm(X - xh, axis=1).max()),
                "err_n": float(np.linalg.norm(proj.normal(X) - s.normal.reshape(-1, 3), axis=1).max()),
                "err_H": float(np.abs(proj.mean_curvature(X) - s.mean_curvature.ravel()).max()),
                "max_H_h": float(np.abs(s.mean_curvature).max()),
            })
    slopes = {}
    for k in orders:
        sel = [r for r in rows if r["k"] == k]
        hs = [r["h"] for r in sel]
        slopes[k] = {
            "X": loglog_slope(hs, [r["err_X"] for r in sel]),
            "n": loglog_slope(hs, [r["err_n"] for r in sel]),
            "H": loglog_slope(hs, [r["err_H"] for r in sel]) if k >= 2 else float("nan"),
        }
    return StudyResult(rows, {"slopes": slopes})


# -- vector Helmholtz on the sphere ------------------------------------------------

def helmholtz_exact(x):
    """Manufactured tangential field ``x cross grad(xyz)`` on the unit sphere,
    extended constantly along rays."""
    x = np.asarray(x, dtype=float)
    y = x / np.linalg.norm(x, axis=-1, keepdims=True)
    a, b, c = y[..., 0], y[..., 1], y[..., 2]
    return np.stack([a * (b * b - c * c), b * (c * c - a * a), c * (a * a - b * b)], axis=-1)


def helmholtz_load(x):
    """``-div grad u + u`` for :func:`helmholtz_exact`; ``xyz`` is a degree-3
    spherical harmonic, which gives the factor ``11 + 1``."""
    return 12.0 * helmholtz_exact(x)


def helmholtz_level(mesh, k: int, beta: float = 10.0, quad_degree: Optional[int] = None,
                    radius: float = 1.0, tol: float = 1e-12):
    """Solve one level with ``r = k``; returns (error, h, cg result, n_dofs)."""
    proj = SphereProjection(radius)
    h = grid_width(mesh)
    cs = CurvedSurface(mesh, AnalyticGridFunction(mesh, proj), order=k)
    space = ScalarSpace(mesh, k)
    kernel = fem.vector_helmholtz_kernel(helmholtz_load, beta / h ** 2)
    A, b = fem.assemble(space, cs, kernel, components=3, quad_degree=quad_degree, second=True)
    res = fem.cg_solve(A, b, tol=tol)
    if not res.converged:
        raise ArithmeticError(f"CG did not converge (residual {res.residual:.3e})")
    err = tangential_l2_error(cs, space, res.x.reshape(-1, 3), helmholtz_exact,
                              quad_degree if quad_degree is not None else 2 * k + 2)
    return err, h, res, 3 * space.n_dofs


def tangential_l2_error(cs, space, U, exact, quad_degree):
    """``|| P_h (u_h - u) ||`` over the discrete surface."""
    q = rule(2, quad_degree)
    s = cs.sample(q.points)
    uh = np.einsum("qm,emc->eqc", space.basis.evaluate(q.points), U[space.dofmap])
    diff = uh - exact(s.x)
    n = s.normal
    diff = diff - n * np.sum(n * diff, axis=-1, keepdims=True)
    return float(np.sqrt(np.sum(np.sum(diff * diff, axis=-1) * s.ie * q.weights)))


def helmholtz(orders: Sequence[int] = (1, 2, 3), levels: int = 5, beta: float = 10.0,
              quad_degree: Optional[int] = None, radius: float = 1.0) -> StudyResult:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    rows = []
    for k in orders:
        hs, errs = [], []
        for level in range(levels):
            mesh = meshes.sphere_mesh(level, radius)
            t0 = time.perf_counter()
            err, h, res, ndofs = helmholtz_level(mesh, k, beta, quad_degree, radius)
            hs.append(h)
            errs.append(err)
            rows.append({"k": k, "level": level, "h": h, "error": err, "eoc": float("nan"),
                         "dofs": ndofs, "cg_iterations": res.iterations, "cg_residual": res.residual,
                         "seconds": time.perf_counter() - t0})
        for row, e in zip([r for r in rows if r["k"] == k], eoc(hs, errs)):
            row["eoc"] = e
    return StudyResult(rows)


# -- mean curvature flow ---------------------------------------------------------

def perturbed_sphere(x):
    """Radial bump field ``(1 + 0.2 cos(3 theta) sin^2(theta_polar)) x``."""
    x = np.asarray(x, dtype=float)
    y = x / np.linalg.norm(x, axis=-1, keepdims=True)
    theta = np.arctan2(y[..., 1], y[..., 0])
    sin2 = 1.0 - y[..., 2] ** 2
    return (1.0 + 0.2 * np.cos(3 * theta) * sin2)[..., None] * y


class DegenerateEvolution(ArithmeticError):
    def __init__(self, message, step, state):
        super().__init__(message)
        self.step = step
        self.state = state


def mcf(levels: int = 1, order: int = 2, tau: Optional[float] = None, t_end: float = 0.2,
        initial: str = "sphere", radius: float = 1.0, ie_tol: float = 1e-10, callback=None,
        quad_degree: Optional[int] = None) -> StudyResult:
    """Mean curvature flow by the linearly implicit Euler scheme.

    Per step solve ``(M + tau A) X_s = M X_{s-1}`` component-wise, where the
    mass ``M`` and stiffness ``A`` live on the surface parametrized by
    ``X_{s-1}``.  ``levels`` refinements of the icosahedron form the reference
    mesh; ``tau`` defaults to ``0.1 h^2``.  ``callback(step, t, X, surface)``
    runs after every step.
    """
    mesh = meshes.sphere_mesh(levels, 1.0)
    h = grid_width(mesh)
    tau = 0.1 * h * h if tau is None else tau
    if tau <= 0:
        raise ValueError("tau must be positive")
    X = DiscreteGridViewFunction(mesh, order)
    if initial == "sphere":
        X.interpolate(lambda x: radius * x / np.linalg.norm(x, axis=-1, keepdims=True))
    elif initial == "perturbed":
        X.interpolate(lambda x: radius * perturbed_sphere(x))
    else:
        raise ValueError(f"unknown initial surface {initial!r}")
    space = X.space
    cs = CurvedSurface(mesh, X, order=order)
    n_steps = int(math.floor(t_end / tau + 1e-9))
    rows = []

    def record(step, t):
        coeff = X.coefficients
        rows.append({
            "step": step, "time": t, "area": cs.area(quad_degree),
            "mean_radius": float(np.linalg.norm(coeff, axis=1).mean()),
            "exact_radius": math.sqrt(max(radius ** 2 - 4 * t, 0.0)) if initial == "sphere" else float("nan"),
        })

    record(0, 0.0)
    if callback is not None:
        callback(0, 0.0, X, cs)

    for step in range(1, n_steps + 1):
        q = rule(2, quad_degree if quad_degree is not None else 2 * order + 2)
        ie = cs.sample(q.points).ie
        if not np.all(ie > ie_tol):
            bad = int(np.argmin(ie.min(axis=1)))
            raise DegenerateEvolution(f"degenerate element {bad} at step {step}", step, X.read_coefficients())
        M, _ = fem.assemble(space, cs, fem.mass_kernel, quad_degree=quad_degree)
        A, _ = fem.assemble(space, cs, fem.stiffness_kernel, quad_degree=quad_degree)
        rhs = M @ X.coefficients
        res = fem.cg_solve(M + tau * A, rhs, tol=1e-12, x0=X.coefficients)
        X.update_coefficients(res.x)
        t = step * tau
        record(step, t)
        if callback is not None:
            callback(step, t, X, cs)
    return StudyResult(rows, {"tau": tau, "h": h, "steps": n_steps})


# -- implicit projection -------------------------------------------------------

def implicit_projection(spacing: float = 0.2, tol: float = 1e-12, max_iter: int = 10) -> StudyResult:
    """Project all vertices of a coarse genus-2 mesh with both Newton schemes."""
    mesh = meshes.genus2_mesh(spacing)
    rows = []
    for variant in ("simple", "improved"):
        proj = genus2_projection(variant, max_iter=max_iter, tol=tol)
        t0 = time.perf_counter()
        res = proj.project(mesh.vertices)
        dt = time.perf_counter() - t0
        rows.append({
            "variant": variant, "points": len(mesh.vertices),
            "max_iterations": int(np.max(res.iterations)),
            "mean_iterations": float(np.mean(res.iterations)),
            "max_residual": float(np.max(res.residual)),
            "converged": bool(np.all(res.converged)), "seconds": dt,
        })
    return StudyResult(rows)

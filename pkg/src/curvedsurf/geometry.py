"""Curved element geometries and the curved-surface facade.

Two flavours map reference coordinates to R^3:

* :class:`ParametrizedGeometry` holds Lagrange coefficients ``xi^j`` and
  evaluates ``sum_j xi^j phi_j`` with derivatives from the basis.
* :class:`LocalFunctionGeometry` chains a bound local function with a local
  geometry ``eta`` and takes its Jacobian from the function's derivative.

The array kernels at the top work on coefficient batches of shape
``(..., n, 3)`` and are shared with the FEM assembly and the studies.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lagrange import lagrange_basis
from .quadrature import rule
from .reference import TRIANGLE, edge_local_geometry, identity_local_geometry


class DegenerateGeometryError(ArithmeticError):
    pass


class NonConvergenceError(ArithmeticError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


# -- array kernels -------------------------------------------------------------

def _cross(a, b):
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def _inv2(G):
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    inv = np.empty_like(G)
    inv[..., 0, 0] = G[..., 1, 1]
    inv[..., 1, 1] = G[..., 0, 0]
    inv[..., 0, 1] = -G[..., 0, 1]
    inv[..., 1, 0] = -G[..., 1, 0]
    return inv / det[..., None, None], det


@dataclass
class SurfaceSample:
    """Geometric quantities at reference points, batched over leading axes.

    Shapes, with ``B`` the batch shape: ``x (B,3)``, ``jt (B,2,3)``,
    ``jit (B,3,2)``, ``ie (B,)``, ``normal (B,3)``; with second derivatives
    also ``mean_curvature (B,)`` and ``normal_derivative (B,2,3)`` (the
    reference derivatives of the unit normal).
    """

    x: np.ndarray
    jt: np.ndarray
    jit: np.ndarray
    ie: np.ndarray
    normal: np.ndarray
    mean_curvature: Optional[np.ndarray] = None
    normal_derivative: Optional[np.ndarray] = None

    def shape_operator(self) -> np.ndarray:
        """Surface gradient of the normal as a 3x3 matrix, ``dn_a (x) jit[:, a]``."""
        return np.einsum("...ai,...ba->...ib", self.normal_derivative, self.jit)


def sample_surface(coefficients, basis, points, second: bool = False) -> SurfaceSample:
    """Evaluate a Lagrange-parametrized surface.

    ``coefficients`` has shape ``(..., n, 3)`` and ``points`` shape
    ``(q, 2)``; results carry shape ``(..., q, ...)``.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phi = basis.evaluate(points)
    dphi = basis.gradients(points)
    x = np.einsum("qn,...nd->...qd", phi, coefficients)
    jt = np.einsum("qna,...nd->...qad", dphi, coefficients)
    return _finish_sample(x, jt, coefficients, basis, points if second else None)


def _finish_sample(x, jt, coefficients, basis, points):
    G = jt @ np.swapaxes(jt, -1, -2)
    Ginv, det = _inv2(G)
    if np.any(det <= 0):
        raise DegenerateGeometryError(f"rank-deficient Jacobian (min det(JJ^T) = {det.min():.3e})")
    ie = np.sqrt(det)
    jit = np.swapaxes(jt, -1, -2) @ Ginv
    c = _cross(jt[..., 0, :], jt[..., 1, :])
    cn = np.linalg.norm(c, axis=-1)
    normal = c / cn[..., None]
    sample = SurfaceSample(x, jt, jit, ie, normal)
    if points is not None:
        d2 = np.einsum("qnab,...nd->...qabd", basis.hessians(points), coefficients)
        II = -np.einsum("...abd,...d->...ab", d2, normal)
        sample.mean_curvature = np.einsum("...ab,...ab->...", Ginv, II)
        dc = np.stack(
            [_cross(d2[..., a, 0, :], jt[..., 1, :]) + _cross(jt[..., 0, :], d2[..., a, 1, :]) for a in range(2)],
            axis=-2,
        )
        # project out the normal part and divide by |c|
        dc = dc - np.einsum("...ad,...d->...a", dc, normal)[..., None] * normal[..., None, :]
        sample.normal_derivative = dc / cn[..., None, None]
    return sample


# -- element geometries --------------------------------------------------------

class _GeometryBase:
    mydim = 2

    def _single(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        return np.atleast_2d(x), single

    def global_(self, x):
        raise NotImplementedError

    def jacobian_transposed(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.global_(x)

    def _gram(self, jt):
        G = jt @ np.swapaxes(jt, -1, -2)
        det = np.linalg.det(G)
        if np.any(det <= 0):
            sv = np.linalg.svd(jt, compute_uv=False)
            cond = sv[..., 0] / np.maximum(sv[..., -1], np.finfo(float).tiny)
            raise DegenerateGeometryError(f"rank-deficient Jacobian (condition number {np.max(cond):.3e})")
        return G, det

    def jacobian_inverse_transposed(self, x):
        jt = self.jacobian_transposed(x)
        G, _ = self._gram(jt)
        return np.swapaxes(jt, -1, -2) @ np.linalg.inv(G)

    def integration_element(self, x):
        _, det = self._gram(self.jacobian_transposed(x))
        return np.sqrt(det)

    def volume(self, quad_degree: int = 8) -> float:
        q = rule(self.mydim, quad_degree)
        return float(np.dot(q.weights, self.integration_element(q.points)))

    def normal(self, x):
        if self.mydim != 2:
            raise ValueError("normals are defined for surface elements only")
        jt = self.jacobian_transposed(x)
        self._gram(jt)
        c = _cross(jt[..., 0, :], jt[..., 1, :])
        return c / np.linalg.norm(c, axis=-1, keepdims=True)

    def center(self):
        ref = TRIANGLE if self.mydim == 2 else None
        return self.global_(ref.position(0, 0) if ref else np.array([0.5]))

    def local(self, X, tol: float = 1e-12, max_iter: int = 100):
        """Reference coordinate whose image is closest to ``X`` (Gauss-Newton).

        Converges on the tangential residual ``|J^T (x(xhat) - X)|``, so a
        point displaced along the normal maps to its foot point.
        """
        X = np.asarray(X, dtype=float)
        xhat = np.full(self.mydim, 1.0 / (self.mydim + 1))
        for _ in range(max_iter):
            r = self.global_(xhat) - X
            jt = self.jacobian_transposed(xhat)
            G, _ = self._gram(jt)
            g = jt @ r
            scale = max(np.trace(G), 1e-300)
            if np.linalg.norm(g) <= tol * scale:
                return xhat
            delta = np.linalg.solve(G, g)
            xhat = xhat - delta
            if np.linalg.norm(delta) <= tol:
                return xhat
        raise NonConvergenceError(f"global-to-local did not converge in {max_iter} iterations", xhat)


class ParametrizedGeometry(_GeometryBase):
    """Lagrange interpolated element geometry ``x(xhat) = sum_j xi^j phi_j(xhat)``."""

    def __init__(self, basis, coefficients):
        self.basis = basis
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.mydim = basis.dim
        if self.coefficients.shape[0] != basis.size:
            raise ValueError(f"expected {basis.size} coefficients, got {self.coefficients.shape[0]}")

    @classmethod
    def from_function(cls, order: int, f, dim: int = 2):
        """Interpolate a reference-coordinate mapping ``f`` at the Lagrange nodes."""
        basis = lagrange_basis(order, dim)
        return cls(basis, basis.interpolate(f))

    @property
    def order(self) -> int:
        return self.basis.order

    def global_(self, x):
        return self.basis.evaluate(x) @ self.coefficients

    def jacobian_transposed(self, x):
        return np.einsum("...na,nd->...ad", self.basis.gradients(x), self.coefficients)

    def sample(self, x, second: bool = False) -> SurfaceSample:
        x, single = self._single(x)
        s = sample_surface(self.coefficients, self.basis, x, second)
        if single:
            s = SurfaceSample(*(None if v is None else v[0] for v in s.__dict__.values()))
        return s

    def mean_curvature(self, x):
        if self.mydim != 2:
            raise ValueError("mean curvature is defined for surface elements only")
        x, single = self._single(x)
        H = sample_surface(self.coefficients, self.basis, x, second=True).mean_curvature
        return H[0] if single else H


class LocalFunctionGeometry(_GeometryBase):
    """Geometry ``x = f_e(eta(xhat))`` of a bound local function.

    The transposed Jacobian is ``D^T eta . D^T mu_e . (Df o mu_e o eta)^T``.
    Mean curvature uses the local function's reference Hessian when it has
    one; otherwise the function is interpolated into a
    :class:`ParametrizedGeometry` of ``fallback_order``.
    """

    def __init__(self, local_function, local_geometry=None, fallback_order: int = 4):
        if not local_function.bound:
            raise ValueError("local function must be bound before building a geometry")
        self.local_function = local_function
        self.local_geometry = local_geometry if local_geometry is not None else identity_local_geometry(2)
        self.mydim = self.local_geometry.domain_dim
        self.fallback_order = fallback_order
        self._mu_jt = local_function.element_geometry().jacobian_transposed()

    def global_(self, x):
        return self.local_function(self.local_geometry(x))

    def jacobian_transposed(self, x):
        x = np.asarray(x, dtype=float)
        Df = self.local_function.jacobian(self.local_geometry(x))
        return self.local_geometry.jt @ self._mu_jt @ np.swapaxes(Df, -1, -2)

    def mean_curvature(self, x):
        if self.mydim != 2:
            raise ValueError("mean curvature is defined for surface elements only")
        x, single = self._single(x)
        lf = self.local_function
        if hasattr(lf, "reference_hessian"):
            jt = np.swapaxes(lf.reference_jacobian(x), -1, -2)
            d2 = np.moveaxis(lf.reference_hessian(x), -3, -1)
            G = jt @ np.swapaxes(jt, -1, -2)
            Ginv, _ = _inv2(G)
            c = _cross(jt[..., 0, :], jt[..., 1, :])
            n = c / np.linalg.norm(c, axis=-1, keepdims=True)
            II = -np.einsum("...abd,...d->...ab", d2, n)
            H = np.einsum("...ab,...ab->...", Ginv, II)
        else:
            geo = ParametrizedGeometry.from_function(self.fallback_order, lf)
            H = geo.mean_curvature(x)
        return H[0] if single else H


class ComposedGeometry(_GeometryBase):
    """Element geometry restricted to a sub-entity: ``geometry o eta``."""

    def __init__(self, geometry, local_geometry):
        self.geometry = geometry
        self.local_geometry = local_geometry
        self.mydim = local_geometry.domain_dim

    def global_(self, x):
        return self.geometry.global_(self.local_geometry(x))

    def jacobian_transposed(self, x):
        x = np.asarray(x, dtype=float)
        return self.local_geometry.jt @ self.geometry.jacobian_transposed(self.local_geometry(x))


# -- curved surface ------------------------------------------------------------

class CurvedSurface:
    """A reference mesh together with a parametrizing grid function.

    ``order > 0`` interpolates the grid function into Lagrange geometries of
    that order; ``order <= 0`` uses the grid function directly through
    :class:`LocalFunctionGeometry`, which requires it to be differentiable.
    """

    def __init__(self, mesh, gridfunction, order: int = 0):
        if order > 0:
            lagrange_basis(order)
        elif not gridfunction.differentiable:
            raise ValueError("order <= 0 requires a differentiable grid function")
        self.mesh = mesh
        self.gridfunction = gridfunction
        self.order = order
        self._coeff_cache = {}

    @property
    def interpolated(self) -> bool:
        return self.order > 0

    def coefficients(self, order: Optional[int] = None) -> np.ndarray:
        """Lagrange coefficients of every element, ``(F, n_k, 3)``."""
        order = self.order if order is None else order
        if order <= 0:
            raise ValueError("coefficients need a positive order")
        key = (order, getattr(self.gridfunction, "version", 0))
        if key not in self._coeff_cache:
            self._coeff_cache = {key: self.gridfunction.element_coefficients(order)}
        return self._coeff_cache[key]

    def element_geometry(self, element: int, order: Optional[int] = None):
        order = self.order if order is None else order
        if order > 0:
            return ParametrizedGeometry(lagrange_basis(order), self.coefficients(order)[element])
        lf = self.gridfunction.local_function()
        lf.bind(element)
        return LocalFunctionGeometry(lf)

    def higher_order_geometry(self, element: int, order: int):
        """Interpolated geometry of another order from the same grid function."""
        return self.element_geometry(element, order)

    def intersection_geometry(self, element: int, local_edge: int):
        """Geometry of an element edge, oriented from its lower to its higher global vertex."""
        tri = self.mesh.triangles[element]
        a, b = TRIANGLE.sub_entity_corners[1][local_edge]
        eta = edge_local_geometry(TRIANGLE, local_edge, flip=tri[a] > tri[b])
        return ComposedGeometry(self.element_geometry(element), eta)

    def sample(self, points, second: bool = False, order: Optional[int] = None, elements=None) -> SurfaceSample:
        """Quantities at reference ``points`` on every element (or on ``elements``)."""
        order = self.order if order is None else order
        coeff = self.coefficients(order)
        if elements is not None:
            coeff = coeff[elements]
        return sample_surface(coeff, lagrange_basis(order), points, second)

    def area(self, quad_degree: Optional[int] = None) -> float:
        k = max(self.order, 1)
        q = rule(2, quad_degree if quad_degree is not None else 2 * k + 2)
        if self.interpolated:
            ie = self.sample(q.points).ie
            return float(np.sum(ie @ q.weights))
        return float(sum(self.element_geometry(e).volume(q.exactness_degree) for e in range(self.mesh.n_triangles)))


def curved_surface(mesh, gridfunction, order: int = 0) -> CurvedSurface:
    return CurvedSurface(mesh, gridfunction, order)

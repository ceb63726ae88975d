"""Finite-element assembly on curved surfaces and a preconditioned CG solver.

Vector-valued unknowns use interleaved blocks: global index ``3 * node + c``
and local index ``3 * i + c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .lagrange import lagrange_basis
from .quadrature import rule
from .space import ScalarSpace

__all__ = [
    "ScalarSpace",
    "QuadData",
    "assemble",
    "cg_solve",
    "CGResult",
    "mass_kernel",
    "stiffness_kernel",
    "AssemblyError",
]


class AssemblyError(RuntimeError):
    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


@dataclass
class QuadData:
    """Quadrature data of a chunk of elements handed to an element kernel."""

    elements: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    sample: object  # SurfaceSample, shapes (e, q, ...)
    phi: np.ndarray  # (q, m)
    grad: np.ndarray  # surface gradients (e, q, m, 3)
    surface: object
    _cache: dict = field(default_factory=dict)

    @property
    def dx(self) -> np.ndarray:
        """Integration weights times integration elements, ``(e, q)``."""
        return self.sample.ie * self.weights

    def normal_of_order(self, order: int) -> np.ndarray:
        """Unit normals of the order-``order`` interpolated geometry at the same points."""
        if order not in self._cache:
            self._cache[order] = self.surface.sample(self.points, order=order, elements=self.elements).normal
        return self._cache[order]


def assemble(space: ScalarSpace, surface, kernel: Callable, *, components: int = 1,
             quad_degree: Optional[int] = None, second: bool = False, chunk: int = 256):
    """Assemble a global sparse matrix and load vector.

    ``kernel(data) -> (local_matrices, local_vectors)`` with shapes
    ``(e, m*c, m*c)`` and ``(e, m*c)`` (either may be ``None``).  Global
    scatter goes through COO -> CSR, which sums duplicates in a fixed order.
    """
    mesh = space.mesh
    k = max(surface.order, 1)
    degree = quad_degree if quad_degree is not None else 2 * max(space.order, k) + 2
    q = rule(2, degree)
    basis = space.basis
    phi = basis.evaluate(q.points)
    dphi = basis.gradients(q.points)
    m = basis.size
    c = components
    ndof = space.n_dofs * c
    local_dofs = (space.dofmap[:, :, None] * c + np.arange(c)).reshape(len(space.dofmap), m * c)

    rows, cols, vals = [], [], []
    rhs = np.zeros(ndof)
    have_matrix = False
    for start in range(0, mesh.n_triangles, chunk):
        elements = np.arange(start, min(start + chunk, mesh.n_triangles))
        sample = surface.sample(q.points, second=second, elements=elements)
        grad = np.einsum("eqia,qma->eqmi", sample.jit, dphi)
        data = QuadData(elements, q.points, q.weights, sample, phi, grad, surface)
        try:
            A_loc, b_loc = kernel(data)
        except Exception as exc:
            bad = _find_failing_element(kernel, space, surface, q, elements, second, phi, dphi)
            raise AssemblyError(f"element kernel failed on element {bad}: {exc}", bad) from exc
        dofs = local_dofs[elements]
        if A_loc is not None:
            have_matrix = True
            rows.append(np.repeat(dofs, m * c, axis=1).ravel())
            cols.append(np.tile(dofs, (1, m * c)).ravel())
            vals.append(np.asarray(A_loc).ravel())
        if b_loc is not None:
            np.add.at(rhs, dofs.ravel(), np.asarray(b_loc).ravel())
    A = None
    if have_matrix:
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ndof, ndof)
        ).tocsr()
        A.sum_duplicates()
        A.sort_indices()
    return A, rhs


def _find_failing_element(kernel, space, surface, q, elements, second, phi, dphi):
    for e in elements:
        try:
            sample = surface.sample(q.points, second=second, elements=np.array([e]))
            grad = np.einsum("eqia,qma->eqmi", sample.jit, dphi)
            kernel(QuadData(np.array([e]), q.points, q.weights, sample, phi, grad, surface))
        except Exception:
            return int(e)
    return int(elements[0])


# -- standard kernels ------------------------------------------------------------

def mass_kernel(data: QuadData):
    return np.einsum("eq,qi,qj->eij", data.dx, data.phi, data.phi), None


def stiffness_kernel(data: QuadData):
    return np.einsum("eq,eqid,eqjd->eij", data.dx, data.grad, data.grad), None


def load_kernel(f: Callable):
    """Scalar load ``(f, v)`` with ``f`` evaluated at the curved quadrature points."""

    def kernel(data: QuadData):
        fx = np.asarray(f(data.sample.x.reshape(-1, 3))).reshape(data.dx.shape)
        return None, np.einsum("eq,eq,qi->ei", data.dx, fx, data.phi)

    return kernel


# -- solver ----------------------------------------------------------------------

@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool

    def __iter__(self):
        return iter((self.x, self.iterations, self.residual))


def cg_solve(A, b, tol: float = 1e-12, max_iter: Optional[int] = None, jacobi_precondition: bool = True,
             x0=None) -> CGResult:
    """Conjugate gradients for SPD ``A``; stops when ``|Ax - b| <= tol |b|``.

    ``b`` may hold several right-hand sides as columns; they are solved
    together (iterations counted per the slowest column).
    """
    A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    b = np.asarray(b, dtype=float)
    multi = b.ndim == 2
    B = b if multi else b[:, None]
    n = B.shape[0]
    max_iter = max_iter if max_iter is not None else 10 * n
    bnorm = np.linalg.norm(B, axis=0)
    X = np.zeros_like(B) if x0 is None else np.array(x0, dtype=float).reshape(B.shape)
    if np.all(bnorm == 0):
        X = np.zeros_like(B)
        return CGResult(X if multi else X[:, 0], 0, 0.0, True)
    safe = np.where(bnorm > 0, bnorm, 1.0)
    dinv = 1.0 / A.diagonal() if jacobi_precondition else np.ones(n)
    R = B - A @ X
    Z = dinv[:, None] * R
    Pd = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    res = np.linalg.norm(R, axis=0) / safe
    it = 0
    active = res > tol
    while np.any(active) and it < max_iter:
        AP = A @ Pd
        pap = np.einsum("ij,ij->j", Pd, AP)
        alpha = np.where(active, rz / np.where(pap != 0, pap, 1.0), 0.0)
        X += alpha * Pd
        R -= alpha * AP
        Z = dinv[:, None] * R
        rz_new = np.einsum("ij,ij->j", R, Z)
        beta = np.where(active, rz_new / np.where(rz != 0, rz, 1.0), 0.0)
        Pd = Z + beta * Pd
        rz = rz_new
        it += 1
        res = np.linalg.norm(R, axis=0) / safe
        active = res > tol
    # report the true residual
    res = np.linalg.norm(B - A @ X, axis=0) / safe
    return CGResult(X if multi else X[:, 0], it, float(res.max()), bool(np.all(res <= tol * 10)))


def vector_helmholtz_kernel(f: Callable, omega: float, normal_order: Optional[int] = None):
    """Penalized tangential vector Helmholtz problem, interleaved 3-blocks.

    Bilinear form ``(grad_G P u, grad_G P v) + (P u, P v) + omega (n~.u, n~.v)``
    with ``grad_G P u = P grad(P u) P`` on each element and load ``(f, P v)``.
    ``n~`` comes from the geometry of order ``normal_order`` (default: the
    surface order plus one).  Requires ``second=True`` samples.
    """

    def kernel(data: QuadData):
        s = data.sample
        n = s.normal  # (e,q,3)
        P = np.eye(3) - n[..., :, None] * n[..., None, :]
        W = s.shape_operator()  # (e,q,3,3), W[i,j] = d_j n_i
        phi = data.phi  # (q,m)
        g = data.grad  # (e,q,m,3)
        # B[i,c] = P e_c (x) g_i - phi_i n_c W
        B = P[:, :, None, :, :, None] * g[:, :, :, None, None, :]
        B = B - (phi[None, :, :, None, None, None] * n[:, :, None, :, None, None] * W[:, :, None, None, :, :])
        e, nq, m = g.shape[:3]
        B = B.reshape(e, nq, 3 * m, 3, 3)
        dx = data.dx
        A = np.einsum("eq,eqaxy,eqbxy->eab", dx, B, B)
        # mass of the projected field
        pp = np.einsum("qi,qj->qij", phi, phi)
        A += np.einsum("eq,qij,eqcd->eicjd", dx, pp, P).reshape(e, 3 * m, 3 * m)
        order = normal_order if normal_order is not None else data.surface.order + 1
        nt = data.normal_of_order(order)
        A += omega * np.einsum("eq,qij,eqc,eqd->eicjd", dx, pp, nt, nt).reshape(e, 3 * m, 3 * m)
        fx = np.asarray(f(s.x.reshape(-1, 3))).reshape(s.x.shape)
        Pf = np.einsum("eqcd,eqd->eqc", P, fx)
        b = np.einsum("eq,qi,eqc->eic", dx, phi, Pf).reshape(e, 3 * m)
        return A, b

    return kernel

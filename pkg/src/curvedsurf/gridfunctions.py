"""Grid functions over a reference mesh and their element-local views.

A grid function ``f`` is localized to element ``e`` as ``f_e = f o mu_e``,
evaluated in reference coordinates.  Local functions follow a bind/unbind
protocol::

    lf = gf.local_function()
    lf.bind(e)
    lf(xhat)            # value in R^3
    lf.jacobian(xhat)   # global derivative (Df)_e, 3x3
    lf.unbind()

``lf.reference_jacobian`` returns ``D(f_e) = (Df)_e . D(mu_e)`` (3x2).
Discrete flavours only know tangential derivatives; their global Jacobian
is ``D(f_e)`` times the pseudo-inverse of ``D(mu_e)``.

All evaluation methods accept ``xhat`` of shape ``(2,)`` or ``(q, 2)``.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .lagrange import lagrange_basis
from .space import ScalarSpace


class UnboundError(RuntimeError):
    """A local function was evaluated before :meth:`bind`."""


class LocalFunction:
    def __init__(self, gridfunction):
        self.gridfunction = gridfunction
        self.element: Optional[int] = None

    @property
    def bound(self) -> bool:
        return self.element is not None

    def bind(self, element: int):
        mesh = self.gridfunction.mesh
        if not 0 <= element < mesh.n_triangles:
            raise IndexError(f"element {element} out of range")
        self.element = int(element)
        self._flat = mesh.element_geometry(self.element)
        self._on_bind()
        return self

    def unbind(self):
        self.element = None
        self._on_unbind()

    def _on_bind(self):
        pass

    def _on_unbind(self):
        pass

    def _require(self):
        if self.element is None:
            raise UnboundError("local function must be bound to an element before evaluation")

    def element_geometry(self):
        self._require()
        return self._flat

    def __call__(self, xhat):
        raise NotImplementedError

    def jacobian(self, xhat):
        raise NotImplementedError

    def reference_jacobian(self, xhat):
        self._require()
        return self.jacobian(xhat) @ self._flat.jacobian_transposed().T


class GridFunction:
    differentiable = False

    def __init__(self, mesh):
        self.mesh = mesh

    def local_function(self) -> LocalFunction:
        raise NotImplementedError

    def evaluate_reference(self, xhat, elements=None) -> np.ndarray:
        """Values ``f_e(xhat)`` for all (or the given) elements, ``(F, q, 3)``."""
        raise NotImplementedError

    def element_coefficients(self, order: int) -> np.ndarray:
        """Lagrange interpolation coefficients of ``f_e`` per element, ``(F, n_k, 3)``."""
        return self.evaluate_reference(lagrange_basis(order).nodes)


class DerivativeLocalFunction:
    """Local function of the global derivative, sharing its parent's binding."""

    def __init__(self, parent: LocalFunction):
        self.parent = parent

    def bind(self, element):
        self.parent.bind(element)
        return self

    def unbind(self):
        self.parent.unbind()

    def __call__(self, xhat):
        return self.parent.jacobian(xhat)


def derivative(lf: LocalFunction) -> DerivativeLocalFunction:
    return DerivativeLocalFunction(lf)


# -- analytic ------------------------------------------------------------------

class AnalyticLocalFunction(LocalFunction):
    def __call__(self, xhat):
        self._require()
        return np.asarray(self.gridfunction.f(self._flat.global_(xhat)))

    def jacobian(self, xhat):
        self._require()
        gf = self.gridfunction
        if gf.df is None:
            raise NotImplementedError("grid function was built without a derivative")
        return np.asarray(gf.df(self._flat.global_(xhat)))


class AnalyticGridFunction(GridFunction):
    """Wraps a callable ``f: R^3 -> R^3`` acting on flat-mesh coordinates.

    ``f`` must accept points of shape ``(3,)`` and ``(n, 3)``.  Passing
    ``jacobian`` (or a projection object that has one) makes the grid
    function differentiable.
    """

    def __init__(self, mesh, f: Callable, jacobian: Optional[Callable] = None):
        super().__init__(mesh)
        self.f = f
        if jacobian is None and getattr(f, "differentiable", False):
            jacobian = f.jacobian
        self.df = jacobian

    @property
    def differentiable(self):
        return self.df is not None

    def local_function(self):
        return AnalyticLocalFunction(self)

    def evaluate_reference(self, xhat, elements=None):
        pts = self.mesh.map_points(xhat, elements)
        return np.asarray(self.f(pts.reshape(-1, 3))).reshape(pts.shape)


# -- Lagrange (discrete) flavours --------------------------------------------

class LagrangeLocalFunction(LocalFunction):
    """Local function ``sum_j xi^j phi_j`` with element coefficients from the parent."""

    def __init__(self, gridfunction):
        super().__init__(gridfunction)
        self.basis = lagrange_basis(gridfunction.order)
        self.coefficients: Optional[np.ndarray] = None

    def _on_bind(self):
        self.coefficients = self.gridfunction._local_coefficients(self.element)
        jt = self._flat.jacobian_transposed()
        self._mu_pinv = np.linalg.solve(jt @ jt.T, jt)

    def _on_unbind(self):
        self.coefficients = None

    def __call__(self, xhat):
        self._require()
        return self.basis.evaluate(xhat) @ self.coefficients

    def reference_jacobian(self, xhat):
        self._require()
        return np.einsum("nd,...na->...da", self.coefficients, self.basis.gradients(xhat))

    def reference_hessian(self, xhat):
        self._require()
        return np.einsum("nd,...nab->...dab", self.coefficients, self.basis.hessians(xhat))

    def jacobian(self, xhat):
        return self.reference_jacobian(xhat) @ self._mu_pinv


class LagrangeGridFunction(GridFunction):
    differentiable = True
    order: int

    def local_function(self):
        return LagrangeLocalFunction(self)

    def _local_coefficients(self, element) -> np.ndarray:
        raise NotImplementedError

    def _all_coefficients(self) -> np.ndarray:
        raise NotImplementedError

    def element_coefficients(self, order=None):
        if order is None or order == self.order:
            return self._all_coefficients()
        return super().element_coefficients(order)

    def evaluate_reference(self, xhat, elements=None):
        coeffs = self._all_coefficients()
        if elements is not None:
            coeffs = coeffs[elements]
        phi = lagrange_basis(self.order).evaluate(np.asarray(xhat, dtype=float))
        return np.einsum("qn,fnd->fqd", np.atleast_2d(phi), coeffs)


class AnalyticDiscreteFunction(LagrangeGridFunction):
    """A callable interpolated element-wise into the Lagrange space of ``order``.

    Coefficients ``f(mu_e(x^j))`` are computed when a local function binds
    and dropped on unbind.
    """

    def __init__(self, mesh, f: Callable, order: int):
        super().__init__(mesh)
        self.f = f
        self.order = order

    def _local_coefficients(self, element):
        nodes = self.mesh.element_geometry(element).global_(lagrange_basis(self.order).nodes)
        return np.asarray(self.f(nodes), dtype=float)

    def _all_coefficients(self):
        pts = self.mesh.map_points(lagrange_basis(self.order).nodes)
        return np.asarray(self.f(pts.reshape(-1, 3)), dtype=float).reshape(pts.shape)


class DiscreteGridViewFunction(LagrangeGridFunction):
    """Continuous vector-valued Lagrange function with a global coefficient vector.

    Coefficients live at the global nodes of :class:`~curvedsurf.space.ScalarSpace`
    and may be overwritten to describe evolving surfaces.
    """

    def __init__(self, mesh, order: int, components: int = 3):
        super().__init__(mesh)
        self.order = order
        self.components = components
        self.space = ScalarSpace(mesh, order)
        self._coefficients = np.zeros((self.space.n_dofs, components))
        self.version = 0

    @property
    def coefficients(self) -> np.ndarray:
        view = self._coefficients.view()
        view.setflags(write=False)
        return view

    def interpolate(self, f: Callable):
        """Set every coefficient to ``f`` at the flat position of its node."""
        values = np.asarray(f(self.space.node_positions()), dtype=float)
        self.update_coefficients(values)
        return self

    def update_coefficients(self, values):
        values = np.asarray(values, dtype=float)
        expected = self.space.n_dofs * self.components
        if values.size != expected:
            raise ValueError(f"expected {expected} coefficient values, got {values.size}")
        self._coefficients = values.reshape(self.space.n_dofs, self.components).copy()
        self.version += 1

    def read_coefficients(self) -> np.ndarray:
        return self._coefficients.copy()

    def _local_coefficients(self, element):
        return self._coefficients[self.space.dofmap[element]]

    def _all_coefficients(self):
        return self._coefficients[self.space.dofmap]


class ElementwiseLagrangeFunction(LagrangeGridFunction):
    """Per-element Lagrange node coordinates, as read from a higher-order mesh file."""

    def __init__(self, mesh, element_nodes, order: int):
        super().__init__(mesh)
        self.order = order
        self.element_nodes = np.asarray(element_nodes, dtype=float)
        if self.element_nodes.shape[:2] != (mesh.n_triangles, lagrange_basis(order).size):
            raise ValueError("element node array does not match mesh and order")

    def _local_coefficients(self, element):
        return self.element_nodes[element]

    def _all_coefficients(self):
        return self.element_nodes

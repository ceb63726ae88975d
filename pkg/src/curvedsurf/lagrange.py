"""Lagrange bases on the reference segment and triangle.

Nodes sit on the equispaced lattice ``(i/k, j/k)``.  The canonical (local)
node order is lexicographic with the second coordinate outermost::

    for j in range(k + 1):
        for i in range(k + 1 - j):
            node (i/k, j/k)

so for ``k = 2`` the order is (0,0), (.5,0), (1,0), (0,.5), (.5,.5), (0,1).
File formats use other orders; :mod:`curvedsurf.io` owns those permutations.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .reference import TRIANGLE_EDGES

MAX_ORDER = 6


def lattice(order: int, dim: int = 2) -> list[tuple[int, ...]]:
    """Integer lattice coordinates of the nodes in canonical order."""
    if dim == 1:
        return [(i,) for i in range(order + 1)]
    return [(i, j) for j in range(order + 1) for i in range(order + 1 - j)]


def _monomial_exponents(order: int, dim: int) -> np.ndarray:
    if dim == 1:
        return np.arange(order + 1)[:, None]
    return np.array([(p, d - p) for d in range(order + 1) for p in range(d, -1, -1)])


class LagrangeBasis:
    """Nodal basis of the full polynomial space P_k on a reference simplex.

    Built from the monomial Vandermonde matrix at the lattice nodes.  All
    evaluation methods accept coordinates of shape ``(dim,)`` or
    ``(..., dim)`` and return arrays with the basis index after the point
    axes.
    """

    def __init__(self, order: int, dim: int = 2):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
        self.order = order
        self.dim = dim
        self.lattice = np.array(lattice(order, dim), dtype=int)
        self.nodes = self.lattice / order
        self._exps = _monomial_exponents(order, dim)
        vander = self._monomials(self.nodes)
        self._coeffs = np.linalg.solve(vander, np.eye(len(self.nodes)))
        self._coeffs.setflags(write=False)
        self.nodes.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"LagrangeBasis(order={self.order}, dim={self.dim})"

    # -- monomial tables -------------------------------------------------
    def _monomials(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1] + (len(self._exps),))
        for d in range(self.dim):
            out = out * x[..., d, None] ** self._exps[:, d]
        return out

    def _monomial_derivative(self, x, alpha):
        """d^alpha of every monomial, alpha a multi-index tuple."""
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1] + (len(self._exps),))
        for d in range(self.dim):
            e = self._exps[:, d]
            a = alpha[d]
            factor = np.ones_like(e, dtype=float)
            for s in range(a):
                factor = factor * (e - s)
            out = out * factor * x[..., d, None] ** np.maximum(e - a, 0)
        return out

    # -- public API ------------------------------------------------------
    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected coordinates of dimension {self.dim}, got shape {x.shape}")
        return x

    def evaluate(self, x) -> np.ndarray:
        x = self._check(x)
        return self._monomials(x) @ self._coeffs

    __call__ = evaluate

    def gradients(self, x) -> np.ndarray:
        """Reference gradients, shape ``(..., n, dim)``."""
        x = self._check(x)
        cols = []
        for d in range(self.dim):
            alpha = [0] * self.dim
            alpha[d] = 1
            cols.append(self._monomial_derivative(x, alpha) @ self._coeffs)
        return np.stack(cols, axis=-1)

    def hessians(self, x) -> np.ndarray:
        """Reference Hessians, shape ``(..., n, dim, dim)``."""
        x = self._check(x)
        out = np.empty(x.shape[:-1] + (self.size, self.dim, self.dim))
        for a in range(self.dim):
            for b in range(a, self.dim):
                alpha = [0] * self.dim
                alpha[a] += 1
                alpha[b] += 1
                h = self._monomial_derivative(x, alpha) @ self._coeffs
                out[..., a, b] = h
                out[..., b, a] = h
        return out

    def interpolate(self, f) -> np.ndarray:
        """Nodal interpolation coefficients ``f(x^j)``, one row per node."""
        return np.array([np.asarray(f(x), dtype=float) for x in self.nodes])

    def reconstruct(self, coefficients, x) -> np.ndarray:
        return np.tensordot(self.evaluate(x), np.asarray(coefficients, dtype=float), axes=(-1, 0))

    # -- sub-entity bookkeeping -----------------------------------------
    def corner_indices(self) -> list[int]:
        k = self.order
        if self.dim == 1:
            return [0, k]
        return [self.index_of(0, 0), self.index_of(k, 0), self.index_of(0, k)]

    def index_of(self, i: int, j: int = 0) -> int:
        """Canonical index of lattice node ``(i, j)``."""
        if self.dim == 1:
            return i
        k = self.order
        # rows below j hold (k+1) + k + ... + (k+2-j) nodes
        return j * (k + 1) - j * (j - 1) // 2 + i

    def edge_node_indices(self, edge: int, include_corners: bool = False) -> list[int]:
        """Node indices along a triangle edge, ordered from its first corner."""
        k = self.order
        corner_lattice = [(0, 0), (k, 0), (0, k)]
        a, b = TRIANGLE_EDGES[edge]
        pa, pb = np.array(corner_lattice[a]), np.array(corner_lattice[b])
        steps = range(k + 1) if include_corners else range(1, k)
        out = []
        for s in steps:
            p = (pa * (k - s) + pb * s) // k
            out.append(self.index_of(int(p[0]), int(p[1])))
        return out

    def interior_indices(self) -> list[int]:
        k = self.order
        return [self.index_of(i, j) for (i, j) in lattice(k) if i > 0 and j > 0 and i + j < k]


@lru_cache(maxsize=None)
def lagrange_basis(order: int, dim: int = 2) -> LagrangeBasis:
    """Cached, shared basis instance."""
    return LagrangeBasis(order, dim)

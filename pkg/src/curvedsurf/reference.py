"""Reference elements and the affine local geometries between them.

Numbering used throughout the package (triangle corners ``v0=(0,0)``,
``v1=(1,0)``, ``v2=(0,1)``)::

    edge 0 = (v0, v1)
    edge 1 = (v0, v2)
    edge 2 = (v1, v2)

An edge local geometry maps the segment coordinate ``t`` to
``(1 - t) * corner_a + t * corner_b`` with ``(a, b)`` taken in the order
above, or reversed when ``flip=True``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRIANGLE_EDGES = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class ReferenceElement:
    dim: int
    corner_coords: np.ndarray
    sub_entity_corners: dict

    @property
    def sub_entity_counts(self) -> tuple[int, ...]:
        return tuple(len(self.sub_entity_corners[c]) for c in range(self.dim + 1))

    @property
    def volume(self) -> float:
        return {0: 1.0, 1: 1.0, 2: 0.5}[self.dim]

    def position(self, index: int, codim: int) -> np.ndarray:
        """Barycenter of sub-entity ``index`` of codimension ``codim``."""
        corners = self.sub_entity_corners[codim][index]
        return self.corner_coords[list(corners)].mean(axis=0)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dim == 0:
            return True
        if self.dim == 1:
            return bool(-tol <= x[0] <= 1 + tol)
        return bool(x[0] >= -tol and x[1] >= -tol and x[0] + x[1] <= 1 + tol)


def _make_point():
    return ReferenceElement(0, np.zeros((1, 0)), {0: [(0,)]})


def _make_segment():
    return ReferenceElement(1, np.array([[0.0], [1.0]]), {0: [(0, 1)], 1: [(0,), (1,)]})


def _make_triangle():
    return ReferenceElement(
        2,
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        {0: [(0, 1, 2)], 1: list(TRIANGLE_EDGES), 2: [(0,), (1,), (2,)]},
    )


POINT = _make_point()
SEGMENT = _make_segment()
TRIANGLE = _make_triangle()


def reference_element(dim: int) -> ReferenceElement:
    try:
        return {0: POINT, 1: SEGMENT, 2: TRIANGLE}[dim]
    except KeyError:
        raise ValueError(f"no reference simplex of dimension {dim}") from None


@dataclass(frozen=True)
class LocalGeometry:
    """Affine map ``x -> offset + x @ jt`` from a sub-entity into an element.

    ``jt`` is the transposed Jacobian with shape ``(domain_dim, range_dim)``.
    """

    offset: np.ndarray
    jt: np.ndarray

    @property
    def domain_dim(self) -> int:
        return self.jt.shape[0]

    @property
    def range_dim(self) -> int:
        return self.jt.shape[1]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        return self.offset + x @ self.jt

    global_ = __call__

    def jacobian_transposed(self, x=None) -> np.ndarray:
        return self.jt


def identity_local_geometry(dim: int) -> LocalGeometry:
    if dim not in (1, 2):
        raise ValueError(f"identity local geometry requires dim 1 or 2, got {dim}")
    return LocalGeometry(np.zeros(dim), np.eye(dim))


def edge_local_geometry(ref: ReferenceElement, edge_index: int, flip: bool = False) -> LocalGeometry:
    if ref.dim != 2:
        raise ValueError("edge local geometries are defined on the triangle only")
    if not 0 <= edge_index < 3:
        raise IndexError(f"edge index {edge_index} out of range [0, 3)")
    a, b = ref.sub_entity_corners[1][edge_index]
    if flip:
        a, b = b, a
    ca, cb = ref.corner_coords[a], ref.corner_coords[b]
    return LocalGeometry(ca.copy(), (cb - ca)[None, :])

"""Node orderings of Lagrange triangles in file formats.

Gmsh and VTK both order a triangle of order ``k`` recursively: the three
corners, then the ``k - 1`` nodes of edges 0->1, 1->2 and 2->0 in walking
direction, then the interior nodes as a triangle of order ``k - 3`` shifted
by ``(1, 1)`` on the lattice.  Order 0 is the single centre node.

Examples for ``k = 3`` (lattice coordinates ``(i, j)``)::

    0:(0,0) 1:(3,0) 2:(0,3) 3:(1,0) 4:(2,0) 5:(2,1) 6:(1,2) 7:(0,2) 8:(0,1) 9:(1,1)

Permutation arrays map file position -> canonical index, so
``canonical_nodes = file_nodes[inverse]`` and ``file_nodes = canonical_nodes[perm]``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..lagrange import MAX_ORDER, lagrange_basis


def recursive_lattice(order: int, offset: int = 0) -> list:
    """Lattice coordinates of a recursively ordered triangle."""
    k = order
    o = offset
    if k < 0:
        return []
    if k == 0:
        return [(o, o)]
    out = [(o, o), (o + k, o), (o, o + k)]
    out += [(o + s, o) for s in range(1, k)]
    out += [(o + k - s, o + s) for s in range(1, k)]
    out += [(o, o + k - s) for s in range(1, k)]
    return out + recursive_lattice(k - 3, o + 1)


@lru_cache(maxsize=None)
def file_to_canonical(order: int) -> np.ndarray:
    """``perm[p]`` is the canonical index of the node stored at file position ``p``."""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    basis = lagrange_basis(order)
    perm = np.array([basis.index_of(i, j) for i, j in recursive_lattice(order)], dtype=np.int64)
    perm.setflags(write=False)
    return perm


@lru_cache(maxsize=None)
def canonical_to_file(order: int) -> np.ndarray:
    inv = np.argsort(file_to_canonical(order))
    inv.setflags(write=False)
    return inv


# both formats share the same recursive layout for triangles
gmsh_to_canonical = file_to_canonical
vtk_to_canonical = file_to_canonical
canonical_to_vtk = canonical_to_file


def nodes_per_triangle(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def order_from_count(count: int) -> int:
    for k in range(1, MAX_ORDER + 1):
        if nodes_per_triangle(k) == count:
            return k
    raise ValueError(f"{count} nodes do not form a Lagrange triangle of order 1..{MAX_ORDER}")

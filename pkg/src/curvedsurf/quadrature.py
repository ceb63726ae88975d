"""Quadrature rules on the reference segment and triangle.

Triangle rules are collapsed tensor products (Duffy transform): a
Gauss-Legendre rule along the collapsed direction times a Gauss-Jacobi
rule with weight ``(1 - y)`` in the other.  All weights are positive and
all points are interior.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 20


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, [f(x) for x in self.points]))


def _gauss_legendre01(n: int):
    x, w = roots_legendre(n)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=None)
def rule(dim: int, degree: int) -> QuadratureRule:
    if dim not in (1, 2):
        raise ValueError(f"quadrature available for dim 1 and 2, got {dim}")
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"quadrature degree {degree} unavailable; maximum is {MAX_DEGREE}")
    n = degree // 2 + 1
    if dim == 1:
        t, w = _gauss_legendre01(n)
        pts, wts = t[:, None], w
    else:
        s, ws = _gauss_legendre01(n)
        xj, wj = roots_jacobi(n, 1.0, 0.0)
        y = (xj + 1) / 2
        wy = wj / 4
        X = np.outer(1 - y, s)
        Y = np.repeat(y[:, None], n, axis=1)
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        wts = np.outer(wy, ws).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)

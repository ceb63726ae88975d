"""Curved surface meshes: Lagrange parametrizations over flat triangle meshes,
closest-point projections, discrete geometry, file IO and small FE solvers."""
from .geometry import CurvedSurface, curved_surface
from .gridfunctions import (AnalyticDiscreteFunction, AnalyticGridFunction, DiscreteGridViewFunction,
                            ElementwiseLagrangeFunction)
from .lagrange import LagrangeBasis, lagrange_basis
from .mesh import SurfaceMesh, build, grid_width, refine_uniform
from .projections import (EllipsoidProjection, ExplicitProjection, ImplicitProjection, SphereProjection,
                          TorusProjection)
from .quadrature import rule
from .space import ScalarSpace

__version__ = "0.1.0"

__all__ = [
    "CurvedSurface", "curved_surface",
    "AnalyticDiscreteFunction", "AnalyticGridFunction", "DiscreteGridViewFunction", "ElementwiseLagrangeFunction",
    "LagrangeBasis", "lagrange_basis",
    "SurfaceMesh", "build", "grid_width", "refine_uniform",
    "EllipsoidProjection", "ExplicitProjection", "ImplicitProjection", "SphereProjection", "TorusProjection",
    "rule", "ScalarSpace",
]

"""Hypothesis versions of the cross-module invariants."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvedsurf import meshes
from curvedsurf.geometry import CurvedSurface, ParametrizedGeometry
from curvedsurf.gridfunctions import AnalyticGridFunction, DiscreteGridViewFunction
from curvedsurf.io import HigherOrderMeshData, read_vtu, write_vtu
from curvedsurf.lagrange import lagrange_basis
from curvedsurf.mesh import build, refine_uniform
from curvedsurf.projections import SphereProjection, TorusProjection, genus2_projection, genus2_psi
from curvedsurf.quadrature import rule

unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def reference_point(draw):
    s, t = draw(unit), draw(unit)
    if s + t > 1:
        s, t = 1 - s, 1 - t
    return np.array([s, t])


@st.composite
def polynomial(draw, max_degree, components=1):
    """Random polynomial of total degree <= max_degree as (exponents, coefficients)."""
    exps = [(a, d - a) for d in range(max_degree + 1) for a in range(d + 1)]
    coeffs = draw(st.lists(st.floats(-2, 2), min_size=len(exps) * components, max_size=len(exps) * components))
    return exps, np.array(coeffs).reshape(len(exps), components)


def evaluate_polynomial(poly, x):
    exps, coeffs = poly
    x = np.atleast_2d(x)
    mons = np.stack([x[:, 0] ** a * x[:, 1] ** b for a, b in exps], axis=-1)
    return mons @ coeffs


@given(st.integers(1, 20), st.integers(0, 20), st.integers(0, 20))
def test_quadrature_integrates_monomials(degree, a, b):
    if a + b > degree:
        a, b = a * degree // (a + b), 0
    q = rule(2, degree)
    exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
    approx = float(np.dot(q.weights, q.points[:, 0] ** a * q.points[:, 1] ** b))
    assert approx == pytest.approx(exact, rel=1e-13, abs=1e-16)


@given(st.integers(1, 6), st.data())
def test_lagrange_reproduces_polynomials(k, data):
    poly = data.draw(polynomial(k))
    x = data.draw(reference_point())
    basis = lagrange_basis(k)
    coeffs = evaluate_polynomial(poly, basis.nodes)
    assert np.allclose(basis.reconstruct(coeffs, x), evaluate_polynomial(poly, x)[0], atol=1e-10)


@given(st.integers(1, 4), st.data())
def test_parametrized_geometry_reproduces_polynomial_maps(k, data):
    poly = data.draw(polynomial(k, components=3))
    geo = ParametrizedGeometry.from_function(k, lambda x: evaluate_polynomial(poly, x)[0])
    x = data.draw(reference_point())
    assert np.allclose(geo.global_(x), evaluate_polynomial(poly, x)[0], atol=1e-11)


SPHERE = meshes.sphere_mesh(1)
TORUS = meshes.torus_mesh(0)


@given(st.integers(0, SPHERE.n_triangles - 1), reference_point())
def test_analytic_localization_consistency(e, x):
    proj = SphereProjection(1.0)
    gf = AnalyticGridFunction(SPHERE, proj)
    lf = gf.local_function()
    lf.bind(e)
    assert np.allclose(lf(x), proj(SPHERE.element_geometry(e).global_(x)), atol=1e-13)
    lf.unbind()


@given(st.integers(0, TORUS.n_triangles - 1), st.integers(1, 4), st.data())
def test_local_global_roundtrip(e, k, data):
    x = data.draw(reference_point()) * 0.9 + 0.05 / 1.5
    cs = CurvedSurface(TORUS, AnalyticGridFunction(TORUS, TorusProjection(2.0, 1.0)), order=k)
    g = cs.element_geometry(e)
    assert np.allclose(g.local(g.global_(x)), x, atol=1e-10)
    assert g.integration_element(x) > 0


@given(st.integers(0, SPHERE.n_triangles - 1), st.integers(0, 2), st.floats(0, 1))
def test_discrete_function_is_continuous(e, edge, t):
    X = DiscreteGridViewFunction(SPHERE, 3).interpolate(SphereProjection(1.0))
    cs = CurvedSurface(SPHERE, X, order=3)
    for i in SPHERE.intersections(e):
        if i.index_in_inside == edge and not i.boundary:
            a = cs.intersection_geometry(i.inside, i.index_in_inside).global_([t])
            b = cs.intersection_geometry(i.outside, i.index_in_outside).global_([t])
            assert np.allclose(a, b, atol=1e-12)


GENUS2 = meshes.genus2_mesh(0.2)


@given(st.integers(0, len(GENUS2.vertices) - 1),
       st.lists(st.floats(-0.05, 0.05), min_size=3, max_size=3))
def test_genus2_projection_idempotent_and_on_surface(v, offset):
    p = GENUS2.vertices[v] + np.array(offset)
    for variant in ("simple", "improved"):
        proj = genus2_projection(variant)
        x = proj(p)
        assert abs(genus2_psi(x)) <= 1e-10
        assert np.allclose(proj(x), x, atol=1e-10)


@given(st.lists(st.floats(-1, 1), min_size=9, max_size=9))
def test_flat_refinement_preserves_area(coords):
    base = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float) + 0.3 * np.array(coords).reshape(3, 3)
    m = build(np.vstack([base, base[0] + base[1] - base[2]]), [[0, 1, 2], [1, 0, 3]])
    if m.areas().min() < 1e-3:
        return
    r = refine_uniform(refine_uniform(m))
    assert r.areas().sum() == pytest.approx(m.areas().sum(), rel=1e-12)


@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_vtu_write_read_write_byte_identical(tmp_path_factory, k, seed):
    rng = np.random.default_rng(seed)
    m = meshes.sphere_mesh(0)
    basis = lagrange_basis(k)
    nodes = m.map_points(basis.nodes) + 1e-3 * rng.normal(size=(m.n_triangles, basis.size, 3))
    nodes[:, basis.corner_indices()] = m.vertices[m.triangles]
    data = HigherOrderMeshData(m, k, nodes)
    d = tmp_path_factory.mktemp("vtu")
    write_vtu(d / "a.vtu", data)
    back, _ = read_vtu(d / "a.vtu")
    write_vtu(d / "b.vtu", back)
    assert (d / "a.vtu").read_bytes() == (d / "b.vtu").read_bytes()

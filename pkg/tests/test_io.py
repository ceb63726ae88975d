import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvedsurf import meshes
from curvedsurf.geometry import CurvedSurface
from curvedsurf.gridfunctions import AnalyticGridFunction, DiscreteGridViewFunction
from curvedsurf.io import (HigherOrderMeshData, MshError, ParsedFieldData, VtkError, as_grid_function,
                           canonical_to_vtk, gmsh_to_canonical, parse_msh4, read_msh4, read_vtu,
                           recursive_lattice, vtk_to_canonical, write_vtu)
from curvedsurf.lagrange import MAX_ORDER, lagrange_basis
from curvedsurf.mesh import build
from curvedsurf.projections import SphereProjection

from mshtools import sphere_msh

DATA = os.path.join(os.path.dirname(__file__), "data")


def data(name):
    return os.path.join(DATA, name)


def sphere_surface(level, k):
    m = meshes.sphere_mesh(level)
    return CurvedSurface(m, AnalyticGridFunction(m, SphereProjection(1.0)), order=k)


# -- orderings -------------------------------------------------------------------

@pytest.mark.parametrize("k", range(1, MAX_ORDER + 1))
def test_orderings_are_permutations(k):
    for perm in (gmsh_to_canonical(k), vtk_to_canonical(k)):
        n = (k + 1) * (k + 2) // 2
        assert sorted(perm.tolist()) == list(range(n))
        assert np.array_equal(perm[canonical_to_vtk(k)], np.arange(n))
        assert np.array_equal(canonical_to_vtk(k)[perm], np.arange(n))


def test_cubic_ordering_documented():
    assert recursive_lattice(3) == [(0, 0), (3, 0), (0, 3), (1, 0), (2, 0), (2, 1), (1, 2), (0, 2), (0, 1), (1, 1)]
    b = lagrange_basis(2)
    # order 2: corners then midpoints of edges 0-1, 1-2, 2-0
    assert np.allclose(b.nodes[gmsh_to_canonical(2)], [[0, 0], [1, 0], [0, 1], [.5, 0], [.5, .5], [0, .5]])


# -- MSH ----------------------------------------------------------------------------

def test_read_single_linear_triangle():
    d = read_msh4(data("tri3.msh"))
    assert d.order == 1
    assert d.mesh.n_vertices == 3 and d.mesh.n_triangles == 1
    assert np.allclose(d.mesh.vertices, [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_read_quadratic_sphere_triangle():
    d = read_msh4(data("tri6_sphere.msh"))
    assert d.order == 2
    assert np.allclose(np.linalg.norm(d.element_nodes[0], axis=1), 1, atol=1e-15)
    cs = CurvedSurface(d.mesh, as_grid_function(d), order=2)
    g = cs.element_geometry(0)
    s = 0.7071067811865475  # as written in the file
    assert np.array_equal(d.element_nodes[0, [1, 4, 3]], [[s, s, 0.0], [0.0, s, s], [s, 0.0, s]])
    assert np.allclose(g.global_(np.array([0.5, 0.0])), [s, s, 0.0], rtol=0, atol=1e-15)
    assert np.allclose(g.global_(np.array([0.5, 0.5])), [0.0, s, s], rtol=0, atol=1e-15)
    assert np.allclose(g.global_(np.array([0.0, 0.5])), [s, 0.0, s], rtol=0, atol=1e-15)
    assert np.allclose(g.global_(np.array([1.0, 0.0])), [0.0, 1.0, 0.0], rtol=0, atol=1e-15)


@pytest.mark.parametrize("name,match", [
    ("version22.msh", "version"), ("binary.msh", "binary"), ("partitioned.msh", "partitioned"),
    ("quad.msh", "quadrangle"), ("malformed.msh", "line 16"),
])
def test_msh_errors(name, match):
    with pytest.raises(MshError, match=match):
        read_msh4(data(name))


def test_msh_mixed_orders_rejected():
    text = open(data("tri6_sphere.msh")).read().replace("2 2 1 2\n1 1 1 1\n1 10 13\n2 1 9 1\n",
                                                        "2 2 1 2\n2 1 2 1\n1 10 11 12\n2 1 9 1\n")
    with pytest.raises(MshError, match="mixed"):
        parse_msh4(text)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_msh_higher_order_sphere(k, tmp_path):
    m = meshes.sphere_mesh(1)
    path = tmp_path / "s.msh"
    path.write_text(sphere_msh(m, k, SphereProjection(1.0)))
    d = read_msh4(path)
    assert d.order == k
    assert np.array_equal(d.mesh.triangles, m.triangles)
    cs = sphere_surface(1, k)
    assert np.allclose(d.element_nodes, cs.coefficients(), atol=1e-15)
    # corners agree with an order-1 reading of the same geometry
    lin = tmp_path / "l.msh"
    lin.write_text(sphere_msh(m, 1, SphereProjection(1.0)))
    assert np.array_equal(read_msh4(lin).mesh.vertices, d.mesh.vertices)


# -- VTU ----------------------------------------------------------------------------

def test_flat_triangle_vtu(tmp_path):
    m = build(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float), [[0, 1, 2]])
    cs = CurvedSurface(m, AnalyticGridFunction(m, lambda x: x), order=1)
    p = tmp_path / "t.vtu"
    write_vtu(p, cs, 1)
    text = p.read_text()
    assert 'NumberOfPoints="3" NumberOfCells="1"' in text
    d, _ = read_vtu(p)
    assert d.order == 1 and d.mesh.n_triangles == 1
    import xml.etree.ElementTree as ET

    root = ET.parse(p).getroot()
    arrays = {a.get("Name"): a.text.split() for a in root.iter("DataArray")}
    assert arrays["offsets"] == ["3"] and arrays["types"] == ["5"]


@pytest.mark.parametrize("encoding", ["ascii", "base64-appended"])
def test_order4_sphere_points_on_sphere(tmp_path, encoding):
    p = tmp_path / "s.vtu"
    write_vtu(p, sphere_surface(0, 4), 4, encoding=encoding)
    d, _ = read_vtu(p)
    assert d.order == 4 and d.element_nodes.shape[1] == 15
    assert np.abs(np.linalg.norm(d.element_nodes, axis=-1) - 1).max() <= 1e-12
    assert "69" in p.read_text() or encoding != "ascii"


@pytest.mark.parametrize("k", [1, 2, 4])
@pytest.mark.parametrize("encoding", ["ascii", "binary"])
def test_vtu_roundtrip_bit_stable(tmp_path, k, encoding):
    cs = sphere_surface(1, k)
    fields = ParsedFieldData({"r": lambda x: np.linalg.norm(x, axis=1), "x": lambda x: x},
                             {"id": np.arange(cs.mesh.n_triangles, dtype=float)})
    a, b = tmp_path / "a.vtu", tmp_path / "b.vtu"
    write_vtu(a, cs, k, fields, encoding)
    d, f = read_vtu(a)
    assert np.array_equal(d.mesh.triangles, cs.mesh.triangles)
    assert np.abs(d.element_nodes - cs.coefficients()).max() <= 1e-12
    assert f.point_data["x"].shape[1] == 3 and np.array_equal(f.cell_data["id"], np.arange(cs.mesh.n_triangles))
    write_vtu(b, d, k, f, encoding)
    assert a.read_bytes() == b.read_bytes()
    d2, _ = read_vtu(b)
    assert np.array_equal(d2.element_nodes, d.element_nodes)


def test_vtu_order_inferred_from_count(tmp_path):
    p = tmp_path / "c.vtu"
    write_vtu(p, sphere_surface(0, 3), 3)
    d, _ = read_vtu(p)
    assert d.order == 3 and d.element_nodes.shape[1] == 10


def test_vtu_rejects_quads_mixed_and_bad_xml(tmp_path):
    p = tmp_path / "q.vtu"
    write_vtu(p, sphere_surface(0, 1), 1)
    text = p.read_text()
    types_line = [ln for ln in text.splitlines() if ln.strip().startswith("5 5")][0]
    bad = tmp_path / "bad.vtu"
    bad.write_text(text.replace(types_line, types_line.replace("5 5", "9 5", 1)))
    with pytest.raises(VtkError, match="unsupported cell type"):
        read_vtu(bad)
    offs_line = [ln for ln in text.splitlines() if ln.strip().startswith("3 6 9")][0]
    mixed = tmp_path / "mixed.vtu"
    mixed.write_text(text.replace(offs_line, offs_line.replace("3 6 9", "3 5 9", 1)))
    with pytest.raises(VtkError, match="mixed"):
        read_vtu(mixed)
    broken = tmp_path / "broken.vtu"
    broken.write_text(text[:200])
    with pytest.raises(VtkError, match="malformed"):
        read_vtu(broken)


def test_vtu_writer_errors(tmp_path):
    cs = sphere_surface(0, 2)
    with pytest.raises(ValueError):
        write_vtu(tmp_path / "x.vtu", cs, 7)
    with pytest.raises(OSError):
        write_vtu(tmp_path / "missing" / "x.vtu", cs, 2)
    with pytest.raises(ValueError):
        write_vtu(tmp_path / "x.vtu", cs, 2, ParsedFieldData({"bad": np.zeros(3)}))


def test_vtu_reads_separately_encoded_header(tmp_path):
    import base64

    p = tmp_path / "s.vtu"
    write_vtu(p, sphere_surface(0, 2), 2, encoding="binary")
    d, _ = read_vtu(p)
    # re-encode the appended blocks with header and payload as two base64 streams
    from curvedsurf.io.vtk import _decode_block  # noqa: F401

    text = p.read_text()
    head, blob = text.split("\n   _", 1)
    blob, tail = blob.split("\n", 1)
    import re

    offsets = [int(o) for o in re.findall(r'offset="(\d+)"', head)]
    ends = offsets[1:] + [len(blob)]
    pieces, new_offsets, pos = [], [], 0
    for a, b in zip(offsets, ends):
        raw = base64.b64decode(blob[a:b])
        block = base64.b64encode(raw[:8]).decode() + base64.b64encode(raw[8:]).decode()
        new_offsets.append(pos)
        pieces.append(block)
        pos += len(block)
    for old, new in zip(offsets[::-1], new_offsets[::-1]):
        head = head.replace(f'offset="{old}"', f'offset="{new}"')
    q = tmp_path / "sep.vtu"
    q.write_text(head + "\n   _" + "".join(pieces) + "\n" + tail)
    d2, _ = read_vtu(q)
    assert np.array_equal(d2.element_nodes, d.element_nodes)


# -- grid-function view ------------------------------------------------------------

def test_as_grid_function_properties(tmp_path):
    m = meshes.sphere_mesh(1)
    path = tmp_path / "s.msh"
    path.write_text(sphere_msh(m, 2, SphereProjection(1.0)))
    d = read_msh4(path)
    gf = as_grid_function(d)
    lf = gf.local_function()
    for e in range(0, m.n_triangles, 9):
        lf.bind(e)
        assert np.array_equal(lf([0.0, 0.0]), d.element_nodes[e, 0])
        assert np.allclose(lf([0.5, 0.5]), SphereProjection(1.0)(0.5 * (d.mesh.vertices[d.mesh.triangles[e, 1]]
                                                                         + d.mesh.vertices[d.mesh.triangles[e, 2]])),
                           atol=1e-12)
    X = DiscreteGridViewFunction(d.mesh, 2)
    X.update_coefficients(np.zeros((X.space.n_dofs, 3)))
    coeff = np.empty((X.space.n_dofs, 3))
    coeff[X.space.dofmap.ravel()] = d.element_nodes.reshape(-1, 3)
    X.update_coefficients(coeff)
    x = np.random.default_rng(0).random((7, 2)) * 0.5
    assert np.allclose(X.evaluate_reference(x), gf.evaluate_reference(x), atol=1e-12)


def test_higher_order_data_invariants():
    m = meshes.sphere_mesh(0)
    nodes = sphere_surface(0, 2).coefficients()
    HigherOrderMeshData(m, 2, nodes)
    with pytest.raises(ValueError):
        HigherOrderMeshData(m, 3, nodes)
    bad = nodes.copy()
    bad[:, 0] += 1e-9
    with pytest.raises(ValueError, match="corner"):
        HigherOrderMeshData(m, 2, bad)


@given(st.integers(1, MAX_ORDER))
def test_permutation_composition_identity(k):
    perm = vtk_to_canonical(k)
    inv = canonical_to_vtk(k)
    assert np.array_equal(perm[inv], np.arange(len(perm)))
    lat = np.array(recursive_lattice(k))
    assert np.array_equal(lat[inv], lagrange_basis(k).lattice)

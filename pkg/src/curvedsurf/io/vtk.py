"""VTK XML UnstructuredGrid (.vtu) writer and reader for Lagrange triangles.

Order 1 cells use VTK_TRIANGLE (5), higher orders VTK_LAGRANGE_TRIANGLE (69).
Points are shared between neighbouring cells: vertices first, then edge
nodes, then element interiors.  Two encodings are supported: ``ascii``
(floats printed with ``repr`` so they read back exactly) and
``base64-appended`` (``binary`` is an alias), which stores each array as
one base64 block of a UInt64 byte-count header followed by the raw data.
"""
from __future__ import annotations

import base64
import os
import re
import xml.etree.ElementTree as ET

import numpy as np

from ..lagrange import MAX_ORDER, lagrange_basis
from ..space import ScalarSpace
from .data import HigherOrderMeshData, ParsedFieldData, corner_mesh_from_cells
from .ordering import canonical_to_vtk, order_from_count, vtk_to_canonical

VTK_TRIANGLE = 5
VTK_LAGRANGE_TRIANGLE = 69

_DTYPES = {
    "Float32": np.float32, "Float64": np.float64,
    "Int8": np.int8, "Int16": np.int16, "Int32": np.int32, "Int64": np.int64,
    "UInt8": np.uint8, "UInt16": np.uint16, "UInt32": np.uint32, "UInt64": np.uint64,
}
_NAMES = {np.dtype(v): k for k, v in _DTYPES.items()}


class VtkError(ValueError):
    pass


def _normalize_encoding(encoding):
    if encoding in ("ascii",):
        return "ascii"
    if encoding in ("binary", "base64", "base64-appended", "appended"):
        return "base64-appended"
    raise ValueError(f"unknown encoding {encoding!r}; use 'ascii' or 'base64-appended'")


def _element_nodes_of(source, order):
    """Per-element node coordinates ``(F, n_order, 3)`` and the mesh."""
    nodes = lagrange_basis(order).nodes
    if isinstance(source, HigherOrderMeshData):
        src_basis = lagrange_basis(source.order)
        if source.order == order:
            return source.mesh, np.array(source.element_nodes)
        return source.mesh, np.einsum("qn,fnd->fqd", src_basis.evaluate(nodes), source.element_nodes)
    # CurvedSurface
    cs = source
    if cs.order > 0:
        basis = lagrange_basis(cs.order)
        return cs.mesh, np.einsum("qn,fnd->fqd", basis.evaluate(nodes), cs.coefficients())
    return cs.mesh, cs.gridfunction.evaluate_reference(nodes)


def write_vtu(path, source, order=None, fields: ParsedFieldData | None = None, encoding="ascii"):
    """Write a curved surface (or file data) as Lagrange triangles of ``order``.

    Point fields may be arrays over the written points or callables of the
    point coordinates ``(n, 3)``.
    """
    if order is None:
        order = source.order if source.order > 0 else 1
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    encoding = _normalize_encoding(encoding)
    mesh, element_nodes = _element_nodes_of(source, order)
    space = ScalarSpace(mesh, order)
    points = np.empty((space.n_dofs, 3))
    points[space.dofmap.ravel()] = element_nodes.reshape(-1, 3)
    connectivity = space.dofmap[:, vtk_to_canonical(order)].astype(np.int64)
    n_per = connectivity.shape[1]
    offsets = np.arange(1, mesh.n_triangles + 1, dtype=np.int64) * n_per
    ctype = VTK_TRIANGLE if order == 1 else VTK_LAGRANGE_TRIANGLE
    types = np.full(mesh.n_triangles, ctype, dtype=np.uint8)

    point_data, cell_data = {}, {}
    if fields is not None:
        for name, val in fields.point_data.items():
            arr = np.asarray(val(points) if callable(val) else val, dtype=float)
            point_data[name] = arr
        for name, val in fields.cell_data.items():
            cell_data[name] = np.asarray(val, dtype=float)
        ParsedFieldData(point_data, cell_data).check(len(points), mesh.n_triangles)

    writer = _XmlWriter(encoding)
    text = writer.document(points, connectivity, offsets, types, point_data, cell_data)
    directory = os.path.dirname(os.fspath(path))
    if directory and not os.path.isdir(directory):
        raise OSError(f"directory {directory!r} does not exist")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


class _XmlWriter:
    def __init__(self, encoding):
        self.encoding = encoding
        self.appended = []
        self.offset = 0

    def array(self, name, arr, indent):
        arr = np.ascontiguousarray(arr)
        ncomp = arr.shape[1] if arr.ndim == 2 else 1
        attrs = f'type="{_NAMES[arr.dtype]}"'
        if name:
            attrs += f' Name="{name}"'
        if ncomp > 1:
            attrs += f' NumberOfComponents="{ncomp}"'
        pad = " " * indent
        if self.encoding == "ascii":
            flat = arr.ravel().tolist()
            body = " ".join(repr(v) if isinstance(v, float) else str(v) for v in flat)
            return f'{pad}<DataArray {attrs} format="ascii">\n{pad}  {body}\n{pad}</DataArray>\n'
        raw = arr.tobytes()
        block = base64.b64encode(np.uint64(len(raw)).tobytes() + raw).decode("ascii")
        out = f'{pad}<DataArray {attrs} format="appended" offset="{self.offset}"/>\n'
        self.appended.append(block)
        self.offset += len(block)
        return out

    def document(self, points, connectivity, offsets, types, point_data, cell_data):
        head = ('<?xml version="1.0"?>\n'
                '<VTKFile type="UnstructuredGrid" version="1.0" byte_order="LittleEndian" header_type="UInt64">\n'
                '  <UnstructuredGrid>\n'
                f'    <Piece NumberOfPoints="{len(points)}" NumberOfCells="{len(types)}">\n')
        body = ""
        if point_data:
            body += "      <PointData>\n"
            for name, arr in point_data.items():
                body += self.array(name, arr, 8)
            body += "      </PointData>\n"
        if cell_data:
            body += "      <CellData>\n"
            for name, arr in cell_data.items():
                body += self.array(name, arr, 8)
            body += "      </CellData>\n"
        body += "      <Points>\n" + self.array("Points", points.astype(np.float64), 8) + "      </Points>\n"
        body += "      <Cells>\n"
        body += self.array("connectivity", connectivity.ravel(), 8)
        body += self.array("offsets", offsets, 8)
        body += self.array("types", types, 8)
        body += "      </Cells>\n"
        tail = "    </Piece>\n  </UnstructuredGrid>\n"
        if self.appended:
            tail += '  <AppendedData encoding="base64">\n   _' + "".join(self.appended) + "\n  </AppendedData>\n"
        tail += "</VTKFile>\n"
        return head + body + tail


# -- reader ------------------------------------------------------------------

def read_vtu(path):
    """Read a .vtu file of Lagrange triangles; returns ``(HigherOrderMeshData, ParsedFieldData)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        raise VtkError(f"malformed XML: {exc}") from None
    if root.tag != "VTKFile" or root.get("type") != "UnstructuredGrid":
        raise VtkError("not a VTK UnstructuredGrid file")
    if root.get("byte_order", "LittleEndian") != "LittleEndian":
        raise VtkError("big-endian files are not supported")
    if root.get("compressor"):
        raise VtkError("compressed files are not supported")
    header = _DTYPES[root.get("header_type", "UInt32")]
    appended = root.find("AppendedData")
    blob = None
    if appended is not None:
        if appended.get("encoding") != "base64":
            raise VtkError("only base64 appended data is supported")
        text = appended.text or ""
        start = text.index("_") + 1
        blob = re.sub(r"\s+", "", text[start:])
    piece = root.find("UnstructuredGrid/Piece")
    if piece is None:
        raise VtkError("missing Piece element")
    n_points = int(piece.get("NumberOfPoints"))
    n_cells = int(piece.get("NumberOfCells"))

    def load(elem):
        if elem is None:
            raise VtkError("missing DataArray")
        dtype = np.dtype(_DTYPES[elem.get("type")])
        ncomp = int(elem.get("NumberOfComponents", "1"))
        fmt = elem.get("format", "ascii")
        if fmt == "ascii":
            arr = np.array((elem.text or "").split(), dtype=np.float64 if dtype.kind == "f" else np.int64)
            arr = arr.astype(dtype)
        elif fmt == "appended":
            arr = _decode_block(blob, int(elem.get("offset")), dtype, header)
        elif fmt == "binary":
            arr = _decode_block(re.sub(r"\s+", "", elem.text or ""), 0, dtype, header)
        else:
            raise VtkError(f"unknown DataArray format {fmt!r}")
        return arr.reshape(-1, ncomp) if ncomp > 1 else arr

    def named(parent, name):
        if parent is None:
            return None
        for elem in parent.findall("DataArray"):
            if elem.get("Name") == name:
                return elem
        return None

    points = load(piece.find("Points/DataArray")).astype(float).reshape(-1, 3)
    cells = piece.find("Cells")
    connectivity = load(named(cells, "connectivity")).astype(np.int64)
    offsets = load(named(cells, "offsets")).astype(np.int64)
    types = load(named(cells, "types")).astype(np.int64)
    if len(points) != n_points or len(types) != n_cells:
        raise VtkError("array lengths disagree with NumberOfPoints/NumberOfCells")
    bad = set(np.unique(types).tolist()) - {VTK_TRIANGLE, VTK_LAGRANGE_TRIANGLE}
    if bad:
        raise VtkError(f"unsupported cell type(s) {sorted(bad)}")
    counts = np.diff(np.concatenate([[0], offsets]))
    if len(np.unique(counts)) != 1:
        raise VtkError(f"mixed cell orders: points per cell {sorted(set(counts.tolist()))}")
    order = order_from_count(int(counts[0]))
    if order == 1 and np.any(types != VTK_TRIANGLE) and np.any(types != VTK_LAGRANGE_TRIANGLE):
        raise VtkError("inconsistent cell types")
    cells_file = connectivity.reshape(n_cells, -1)
    canonical = cells_file[:, canonical_to_vtk(order)]
    mesh, element_nodes = corner_mesh_from_cells(points, canonical, order)

    fields = ParsedFieldData()
    for elem in piece.findall("PointData/DataArray"):
        fields.point_data[elem.get("Name")] = load(elem)
    for elem in piece.findall("CellData/DataArray"):
        fields.cell_data[elem.get("Name")] = load(elem)
    fields.check(n_points, n_cells)
    return HigherOrderMeshData(mesh, order, element_nodes), fields


def _decode_block(blob, offset, dtype, header):
    hsize = np.dtype(header).itemsize
    tail = blob[offset:]
    # header and data encoded together
    head = base64.b64decode(tail[: 4 * ((hsize + 2) // 3) + 4])[:hsize]
    nbytes = int(np.frombuffer(head, dtype=header)[0])
    joint_len = 4 * ((hsize + nbytes + 2) // 3)
    data = base64.b64decode(tail[:joint_len])
    if len(data) == hsize + nbytes:
        return np.frombuffer(data[hsize:], dtype=dtype).copy()
    # header and data encoded as separate base64 streams
    hlen = 4 * ((hsize + 2) // 3)
    data = base64.b64decode(tail[hlen: hlen + 4 * ((nbytes + 2) // 3)])
    return np.frombuffer(data[:nbytes], dtype=dtype).copy()

"""Reader for Gmsh MSH 4.1 ASCII files with (higher-order) triangles."""
from __future__ import annotations

import numpy as np

from .data import HigherOrderMeshData, corner_mesh_from_cells
from .ordering import gmsh_to_canonical

# element type -> triangle order
TRIANGLE_TYPES = {2: 1, 9: 2, 21: 3, 23: 4, 25: 5, 42: 6}
# other 2D types we recognise only to reject them
OTHER_2D_TYPES = {3: "4-node quadrangle", 10: "9-node quadrangle", 16: "8-node quadrangle",
                  20: "9-node incomplete triangle", 22: "12-node incomplete triangle",
                  24: "15-node incomplete triangle", 36: "16-node quadrangle"}


class MshError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class _Lines:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    @property
    def lineno(self):
        return self.pos

    def next(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise MshError("unexpected end of file", self.pos)

    def ints(self, count=None):
        line = self.next()
        try:
            vals = [int(t) for t in line.split()]
        except ValueError:
            raise MshError(f"expected integers, got {line!r}", self.pos) from None
        if count is not None and len(vals) < count:
            raise MshError(f"expected {count} integers, got {len(vals)}", self.pos)
        return vals

    def floats(self, count):
        line = self.next()
        try:
            vals = [float(t) for t in line.split()]
        except ValueError:
            raise MshError(f"expected numbers, got {line!r}", self.pos) from None
        if len(vals) < count:
            raise MshError(f"expected {count} numbers, got {len(vals)}", self.pos)
        return vals

    def expect(self, tag):
        line = self.next()
        if line != tag:
            raise MshError(f"expected {tag}, got {line!r}", self.pos)


def read_msh4(path) -> HigherOrderMeshData:
    with open(path, "r") as fh:
        return parse_msh4(fh.read())


def parse_msh4(text: str) -> HigherOrderMeshData:
    src = _Lines(text)
    seen_format = False
    points = {}
    cells = []
    order = None
    while True:
        try:
            header = src.next()
        except MshError:
            break
        if not header.startswith("$"):
            raise MshError(f"expected section header, got {header!r}", src.lineno)
        name = header[1:]
        if name == "MeshFormat":
            tokens = src.next().split()
            if len(tokens) < 3:
                raise MshError("malformed $MeshFormat", src.lineno)
            version, ftype = tokens[0], tokens[1]
            if not version.startswith("4."):
                raise MshError(f"unsupported MSH version {version}; need 4.1", src.lineno)
            if ftype != "0":
                raise MshError("binary MSH files are not supported", src.lineno)
            src.expect("$EndMeshFormat")
            seen_format = True
        elif not seen_format:
            raise MshError("file must start with $MeshFormat", src.lineno)
        elif name in ("PartitionedEntities", "GhostElements", "Parametrizations"):
            raise MshError(f"${name}: partitioned or parametrized files are not supported", src.lineno)
        elif name == "Nodes":
            _read_nodes(src, points)
        elif name == "Elements":
            order = _read_elements(src, cells, order)
        else:
            # $Entities and unrelated sections: skip to the matching end tag
            end = "$End" + name
            while src.next() != end:
                pass
    if not seen_format:
        raise MshError("missing $MeshFormat section")
    if not cells:
        raise MshError("no triangle elements found")
    tags = np.array(cells, dtype=np.int64)
    try:
        ids = np.vectorize(_index_lookup(points), otypes=[np.int64])(tags) if tags.size else tags
    except KeyError as exc:
        raise MshError(f"element references unknown node {exc.args[0]}") from None
    coords = np.array(list(points.values()), dtype=float)
    canonical = ids[:, np.argsort(gmsh_to_canonical(order))]
    mesh, element_nodes = corner_mesh_from_cells(coords, canonical, order)
    return HigherOrderMeshData(mesh, order, element_nodes)


def _index_lookup(points):
    index = {tag: i for i, tag in enumerate(points)}
    return lambda t: index[int(t)]


def _read_nodes(src, points):
    n_blocks, n_nodes, *_ = src.ints(4)
    for _ in range(n_blocks):
        dim, tag, parametric, count = src.ints(4)
        node_tags = [src.ints(1)[0] for _ in range(count)]
        extra = 0
        if parametric:
            extra = dim
        for t in node_tags:
            xyz = src.floats(3 + extra)
            points[t] = xyz[:3]
    src.expect("$EndNodes")
    if len(points) < n_nodes:
        raise MshError(f"$Nodes announced {n_nodes} nodes, found {len(points)}", src.lineno)


def _read_elements(src, cells, order):
    n_blocks, *_ = src.ints(4)
    for _ in range(n_blocks):
        dim, tag, etype, count = src.ints(4)
        block_line = src.lineno
        if dim < 2:
            for _ in range(count):
                src.next()
            continue
        if dim > 2:
            raise MshError(f"volume elements (type {etype}) are not supported", block_line)
        if etype in OTHER_2D_TYPES:
            raise MshError(f"unsupported 2D element type {etype} ({OTHER_2D_TYPES[etype]})", block_line)
        if etype not in TRIANGLE_TYPES:
            raise MshError(f"unknown 2D element type {etype}", block_line)
        k = TRIANGLE_TYPES[etype]
        if order is not None and order != k:
            raise MshError(f"mixed element orders {order} and {k}", block_line)
        order = k
        n = (k + 1) * (k + 2) // 2
        for _ in range(count):
            vals = src.ints(n + 1)
            if len(vals) != n + 1:
                raise MshError(f"element of type {etype} needs {n} nodes, got {len(vals) - 1}", src.lineno)
            cells.append(vals[1:])
    src.expect("$EndElements")
    return order

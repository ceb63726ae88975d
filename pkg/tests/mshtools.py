"""Test-only MSH 4.1 ASCII writer (the package reads MSH but does not write it)."""
import numpy as np

from curvedsurf.io.ordering import gmsh_to_canonical

TYPES = {1: 2, 2: 9, 3: 21, 4: 23, 5: 25, 6: 42}


def msh_text(points, cells_canonical, order):
    """``cells_canonical`` holds 0-based point ids in canonical node order."""
    perm = gmsh_to_canonical(order)
    cells = np.asarray(cells_canonical)[:, perm] + 1
    out = ["$MeshFormat", "4.1 0 8", "$EndMeshFormat",
           "$Entities", "0 0 1 0", "1 -2 -2 -2 2 2 2 0 0", "$EndEntities",
           "$Nodes", f"1 {len(points)} 1 {len(points)}", f"2 1 0 {len(points)}"]
    out += [str(i + 1) for i in range(len(points))]
    out += [" ".join(repr(float(v)) for v in p) for p in points]
    out += ["$EndNodes", "$Elements", f"1 {len(cells)} 1 {len(cells)}", f"2 1 {TYPES[order]} {len(cells)}"]
    out += [" ".join(str(v) for v in [i + 1, *row]) for i, row in enumerate(cells)]
    out += ["$EndElements"]
    return "\n".join(out) + "\n"


def sphere_msh(mesh, order, projection):
    """MSH text of ``mesh`` with Lagrange nodes of ``order`` projected by ``projection``."""
    from curvedsurf.space import ScalarSpace

    space = ScalarSpace(mesh, order)
    pts = projection(space.node_positions())
    return msh_text(pts, space.dofmap, order)

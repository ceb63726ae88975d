import csv
import os
import re

import numpy as np
import pytest

from curvedsurf import cli, meshes
from curvedsurf.io import read_vtu
from curvedsurf.projections import SphereProjection

from mshtools import sphere_msh


def read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    config = [line for line in lines if line.startswith("#")]
    rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
    return config, rows


def test_geometry_errors_writes_csv_and_png(tmp_path, capsys):
    out = str(tmp_path)
    assert cli.main(["geometry-errors", "--geometry", "sphere", "--order", "1,2", "--levels", "2", "--out", out]) == 0
    config, rows = read_csv(tmp_path / "geometry_errors.csv")
    assert "# levels=2" in config and "# order=1,2" in config
    assert list(rows[0]) == ["level", "h", "k", "err_X", "err_n", "err_H", "max_H_h"]
    assert len(rows) == 4
    _, slopes = read_csv(tmp_path / "geometry_slopes.csv")
    assert slopes[0]["slope_H"] == "nan"
    assert (tmp_path / "geometry_errors.png").stat().st_size > 0
    assert "slope X" in capsys.readouterr().out


def test_rerun_is_bit_identical(tmp_path):
    args = ["geometry-errors", "--geometry", "torus", "--order", "2", "--levels", "2", "--out", str(tmp_path)]
    cli.main(args)
    first = (tmp_path / "geometry_errors.csv").read_bytes()
    cli.main(args)
    assert (tmp_path / "geometry_errors.csv").read_bytes() == first


def test_helmholtz_csv_has_no_timings(tmp_path):
    cli.main(["helmholtz", "--order", "1", "--levels", "2", "--out", str(tmp_path)])
    _, rows = read_csv(tmp_path / "helmholtz.csv")
    assert "seconds" not in rows[0]
    assert len(rows) == 2 and float(rows[1]["error"]) < float(rows[0]["error"])
    assert (tmp_path / "helmholtz.png").exists()


def test_mcf_writes_frames(tmp_path):
    out = str(tmp_path)
    assert cli.main(["mcf", "--levels", "0", "--order", "2", "--tau", "0.01", "--t-end", "0.04",
                     "--frames", "2", "--encoding", "binary", "--out", out]) == 0
    _, rows = read_csv(tmp_path / "mcf.csv")
    areas = [float(r["area"]) for r in rows]
    assert np.all(np.diff(areas) < 0)
    frames = sorted(p for p in os.listdir(out) if p.endswith(".vtu"))
    assert frames == ["mcf_000000.vtu", "mcf_000002.vtu", "mcf_000004.vtu"]
    data, _ = read_vtu(tmp_path / frames[-1])
    assert data.order == 2
    assert (tmp_path / "mcf.png").exists()


def test_mcf_no_vtu(tmp_path):
    cli.main(["mcf", "--levels", "0", "--tau", "0.01", "--t-end", "0.02", "--no-vtu", "--out", str(tmp_path)])
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".vtu")]


@pytest.fixture
def quadratic_msh(tmp_path):
    path = tmp_path / "sphere6.msh"
    path.write_text(sphere_msh(meshes.sphere_mesh(1), 2, SphereProjection(1.0)))
    return path


def test_convert_msh_to_vtu(tmp_path, quadratic_msh):
    out = tmp_path / "out.vtu"
    cli.main(["convert", "--mesh", str(quadratic_msh), "--out", str(out)])
    text = out.read_text()
    types = re.search(r'Name="types"[^>]*>([^<]*)<', text).group(1).split()
    assert set(types) == {"69"} and len(types) == 80
    data, _ = read_vtu(out)
    assert data.order == 2 and data.mesh.n_triangles == 80


def test_convert_reorders_and_projects(tmp_path):
    path = tmp_path / "flat.msh"
    m = meshes.sphere_mesh(1)
    from mshtools import msh_text
    path.write_text(msh_text(m.vertices, m.triangles, 1))
    out = tmp_path / "p4.vtu"
    cli.main(["convert", "--mesh", str(path), "--order", "4", "--project", "sphere", "--out", str(out)])
    data, _ = read_vtu(out)
    assert data.order == 4
    norms = np.linalg.norm(data.element_nodes.reshape(-1, 3), axis=1)
    assert np.abs(norms - 1).max() <= 1e-14


def test_convert_vtu_roundtrip_is_idempotent(tmp_path, quadratic_msh):
    a, b = tmp_path / "a.vtu", tmp_path / "b.vtu"
    cli.main(["convert", "--mesh", str(quadratic_msh), "--out", str(a)])
    cli.main(["convert", "--mesh", str(a), "--out", str(b)])
    cli.main(["convert", "--mesh", str(b), "--out", str(tmp_path / "c.vtu")])
    assert b.read_bytes() == (tmp_path / "c.vtu").read_bytes()
    da, _ = read_vtu(a)
    db, _ = read_vtu(b)
    assert np.array_equal(da.element_nodes, db.element_nodes)


@pytest.mark.parametrize("argv", [
    ["geometry-errors", "--order", "0"],
    ["geometry-errors", "--levels", "0"],
    ["helmholtz", "--encoding", "hex"],
    ["convert"],
])
def test_bad_arguments_exit(argv):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code != 0


def test_geometry_errors_rejects_implicit_geometry(tmp_path):
    with pytest.raises(SystemExit, match="analytic"):
        cli.main(["geometry-errors", "--geometry", "genus2", "--out", str(tmp_path)])

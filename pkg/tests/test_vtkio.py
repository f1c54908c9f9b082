"""VTK writer/validator roundtrips and malformation detection."""

import numpy as np
import pytest

from thermoporo.discretization import build_spaces, interpolate
from thermoporo.mesh import build_uniform_rect
from thermoporo.vtkio import validate_vtk, vertex_values, write_vtk


@pytest.fixture()
def setup():
    mesh = build_uniform_rect(3, 2, corner_hi=(1.2, 0.8))
    spaces = build_spaces(mesh, 2)
    return mesh, spaces


def test_vertex_values_slices_vertex_block(setup):
    mesh, spaces = setup
    nv = mesh.num_vertices
    scal = interpolate(spaces.W, lambda x, y: x + 2.0 * y)
    vals = vertex_values(spaces.W, scal)
    assert vals.shape == (nv,)
    assert np.allclose(vals, mesh.vertices[:, 0] + 2.0 * mesh.vertices[:, 1])

    vec = interpolate(spaces.V, lambda x, y: (x * y, x - y))
    vv = vertex_values(spaces.V, vec)
    assert vv.shape == (nv, 2)
    assert np.allclose(vv[:, 0], mesh.vertices[:, 0] * mesh.vertices[:, 1])
    assert np.allclose(vv[:, 1], mesh.vertices[:, 0] - mesh.vertices[:, 1])


def test_scalar_roundtrip(tmp_path, setup):
    mesh, spaces = setup
    vals = np.sin(mesh.vertices[:, 0]) + 0.5 * mesh.vertices[:, 1]
    path = tmp_path / "p.vtk"
    write_vtk(path, mesh, "p", vals, title="pressure snapshot")
    info = validate_vtk(path)
    assert info["points"] == mesh.num_vertices
    assert info["cells"] == mesh.num_triangles
    assert info["kind"] == "scalar" and info["name"] == "p"
    assert np.allclose(info["data"], vals, rtol=1e-9, atol=1e-12)


def test_vector_roundtrip(tmp_path, setup):
    mesh, spaces = setup
    vals = np.column_stack([mesh.vertices[:, 0] ** 2, -mesh.vertices[:, 1]])
    path = tmp_path / "u.vtk"
    write_vtk(path, mesh, "u", vals)
    info = validate_vtk(path)
    assert info["kind"] == "vector" and info["name"] == "u"
    assert info["data"].shape == (mesh.num_vertices, 3)
    assert np.allclose(info["data"][:, :2], vals, rtol=1e-9, atol=1e-12)
    assert np.all(info["data"][:, 2] == 0.0)


def test_write_rejects_wrong_length(tmp_path, setup):
    mesh, _ = setup
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "bad.vtk", mesh, "p", np.zeros(mesh.num_vertices + 1))


def test_validate_rejects_malformations(tmp_path, setup):
    mesh, _ = setup
    vals = np.ones(mesh.num_vertices)
    path = tmp_path / "ok.vtk"
    write_vtk(path, mesh, "p", vals)
    good = path.read_text().split("\n")

    def corrupt(mutate):
        lines = list(good)
        mutate(lines)
        bad = tmp_path / "bad.vtk"
        bad.write_text("\n".join(lines))
        with pytest.raises(ValueError):
            validate_vtk(bad)

    corrupt(lambda ls: ls.__setitem__(0, "# vtk DataFile Version 3.0"))
    corrupt(lambda ls: ls.__setitem__(2, "BINARY"))
    corrupt(lambda ls: ls.__setitem__(3, "DATASET STRUCTURED_GRID"))
    # point count that disagrees with the data blocks
    corrupt(lambda ls: ls.__setitem__(4, f"POINTS {mesh.num_vertices + 1} double"))
    # out-of-range connectivity
    idx = 5 + mesh.num_vertices + 1
    corrupt(lambda ls: ls.__setitem__(idx, f"3 0 1 {mesh.num_vertices}"))
    # non-finite data
    corrupt(lambda ls: ls.__setitem__(len(ls) - 2, "nan"))

"""Uniform rectangle meshes: geometry, boundary loop, tags, refinement."""

import numpy as np
import pytest

from thermoporo.mesh import (
    BoundaryTag,
    build_uniform_rect,
    refine_regular,
    side_clamp_rule,
)


def test_unit_square_counts_and_geometry():
    mesh = build_uniform_rect(4, 4)
    assert mesh.num_vertices == 25
    assert mesh.num_triangles == 32
    assert np.allclose(mesh.areas(), 1.0 / 32.0)
    assert abs(mesh.areas().sum() - 1.0) < 1e-14
    assert abs(mesh.h - np.sqrt(2.0) / 4.0) < 1e-14


def test_general_rectangle_geometry():
    mesh = build_uniform_rect(3, 2, corner_lo=(0.5, -1.0), corner_hi=(2.0, 0.2))
    assert mesh.num_vertices == 12
    assert mesh.num_triangles == 12
    assert abs(mesh.areas().sum() - 1.5 * 1.2) < 1e-12
    assert (mesh.areas() > 0).all()
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    assert np.allclose(lo, (0.5, -1.0)) and np.allclose(hi, (2.0, 0.2))


def test_boundary_edges_form_ccw_loop():
    mesh = build_uniform_rect(4, 3)
    edges = mesh.boundary_edges
    assert edges.shape == (2 * (4 + 3), 2)
    # closed loop: each boundary vertex appears once as start and once as end
    starts = np.bincount(edges[:, 0], minlength=mesh.num_vertices)
    ends = np.bincount(edges[:, 1], minlength=mesh.num_vertices)
    assert (starts == ends).all() and starts.max() == 1
    # CCW orientation: the shoelace sum over the loop equals +area
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    shoelace = 0.5 * np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1])
    assert abs(shoelace - 1.0) < 1e-14


def test_default_tags_clamp_vertical_sides():
    mesh = build_uniform_rect(4, 4)
    mids = 0.5 * (
        mesh.vertices[mesh.boundary_edges[:, 0]]
        + mesh.vertices[mesh.boundary_edges[:, 1]]
    )
    on_x_side = (np.abs(mids[:, 0]) < 1e-12) | (np.abs(mids[:, 0] - 1.0) < 1e-12)
    assert (mesh.boundary_tags[on_x_side] == BoundaryTag.DIRICHLET).all()
    assert (mesh.boundary_tags[~on_x_side] == BoundaryTag.NEUMANN).all()
    assert on_x_side.sum() == 8


def test_side_clamp_rule_respects_corners():
    rule = side_clamp_rule(0.0, 2.0)
    assert rule(0.0, 0.7) == BoundaryTag.DIRICHLET
    assert rule(2.0, 1.3) == BoundaryTag.DIRICHLET
    assert rule(1.0, 0.0) == BoundaryTag.NEUMANN


def test_all_dirichlet_rule():
    mesh = build_uniform_rect(3, 3, tag_rule=lambda x, y: BoundaryTag.DIRICHLET)
    assert (mesh.boundary_tags == BoundaryTag.DIRICHLET).all()


def test_unique_edges_euler_count():
    mesh = build_uniform_rect(4, 4)
    edges = mesh.unique_edges()
    # planar Euler formula: V - E + (T + 1) = 2
    assert edges.shape[0] == mesh.num_vertices + mesh.num_triangles - 1
    assert (edges[:, 0] < edges[:, 1]).all()
    codes = edges[:, 0] * mesh.num_vertices + edges[:, 1]
    assert np.unique(codes).size == codes.size


def test_cell_coords_matches_vertices():
    mesh = build_uniform_rect(2, 3)
    coords = mesh.cell_coords()
    assert coords.shape == (mesh.num_triangles, 3, 2)
    assert np.array_equal(coords, mesh.vertices[mesh.triangles])


def test_refine_regular_halves_h():
    mesh = build_uniform_rect(4, 4)
    fine = refine_regular(mesh)
    assert fine.num_vertices == 81
    assert fine.num_triangles == 128
    assert abs(fine.h - mesh.h / 2.0) < 1e-14
    assert abs(fine.areas().sum() - 1.0) < 1e-14
    assert fine.boundary_edges.shape[0] == 2 * mesh.boundary_edges.shape[0]
    # tags are inherited pairwise from the parent edges
    assert np.array_equal(fine.boundary_tags, np.repeat(mesh.boundary_tags, 2))


def test_invalid_arguments_raise():
    with pytest.raises(ValueError):
        build_uniform_rect(0, 4)
    with pytest.raises(ValueError):
        build_uniform_rect(4, 4, corner_lo=(1.0, 0.0), corner_hi=(0.0, 1.0))

"""Uniform triangular meshes of axis-aligned rectangles with tagged boundaries."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable

import numpy as np


class BoundaryTag(IntEnum):
    """Role of a boundary edge for the displacement field.

    DIRICHLET edges clamp the displacement; NEUMANN edges carry traction
    data.  Pressure and temperature are constrained on the whole boundary
    regardless of the tag.
    """

    DIRICHLET = 1
    NEUMANN = 2


# Maps an edge midpoint (x, y) to the tag of that edge.
TagRule = Callable[[float, float], BoundaryTag]


def side_clamp_rule(x_lo: float, x_hi: float, tol: float = 1e-12) -> TagRule:
    """Tag rule clamping the two vertical sides x = x_lo and x = x_hi.

    Edges on either vertical side become DIRICHLET; the horizontal sides
    carry NEUMANN (traction) data.
    """

    def rule(x: float, y: float) -> BoundaryTag:
        if abs(x - x_lo) <= tol or abs(x - x_hi) <= tol:
            return BoundaryTag.DIRICHLET
        return BoundaryTag.NEUMANN

    return rule


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming triangulation of a rectangle.

    Attributes
    ----------
    vertices : (nv, 2) float array of vertex coordinates.
    triangles : (nt, 3) int array of vertex indices, counter-clockwise.
    boundary_edges : (nb, 2) int array; each row (a, b) is one boundary edge
        oriented counter-clockwise around the domain, so the outward normal
        is (t_y, -t_x)/|t| with t = vertices[b] - vertices[a].
    boundary_tags : (nb,) int array of BoundaryTag values.
    h : max element diameter (the cell diagonal for uniform meshes).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    h: float

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def cell_coords(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    def areas(self) -> np.ndarray:
        """Signed triangle areas (positive for CCW orientation)."""
        xy = self.cell_coords()
        d1 = xy[:, 1] - xy[:, 0]
        d2 = xy[:, 2] - xy[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def unique_edges(self) -> np.ndarray:
        """All mesh edges as sorted vertex pairs, lexicographically ordered."""
        t = self.triangles
        pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0)


def _max_diameter(vertices: np.ndarray, triangles: np.ndarray) -> float:
    xy = vertices[triangles]
    sides = np.stack(
        [
            np.linalg.norm(xy[:, 1] - xy[:, 0], axis=1),
            np.linalg.norm(xy[:, 2] - xy[:, 1], axis=1),
            np.linalg.norm(xy[:, 0] - xy[:, 2], axis=1),
        ]
    )
    return float(sides.max())


def build_uniform_rect(
    nx: int,
    ny: int,
    corner_lo: tuple[float, float] = (0.0, 0.0),
    corner_hi: tuple[float, float] = (1.0, 1.0),
    tag_rule: TagRule | None = None,
) -> TriMesh:
    """Build a uniform triangulation of the rectangle [lo, hi].

    Each of the nx*ny cells is split along its bottom-left-to-top-right
    diagonal, giving 2*nx*ny congruent triangles.  Boundary edges are tagged
    by ``tag_rule`` evaluated at the edge midpoint; the default clamps the
    two vertical sides.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    x0, y0 = map(float, corner_lo)
    x1, y1 = map(float, corner_hi)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle: corner_hi must exceed corner_lo")
    if tag_rule is None:
        tag_rule = side_clamp_rule(x0, x1)

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # index [iy, ix]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(ix, iy):
        return iy * (nx + 1) + ix

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny))
    ix, iy = ix.ravel(), iy.ravel()
    n00 = vid(ix, iy)
    n10 = vid(ix + 1, iy)
    n01 = vid(ix, iy + 1)
    n11 = vid(ix + 1, iy + 1)
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    # Boundary edges oriented CCW around the rectangle.
    bot = np.column_stack([vid(np.arange(nx), 0), vid(np.arange(1, nx + 1), 0)])
    right = np.column_stack([vid(nx, np.arange(ny)), vid(nx, np.arange(1, ny + 1))])
    top = np.column_stack([vid(np.arange(nx, 0, -1), ny), vid(np.arange(nx - 1, -1, -1), ny)])
    left = np.column_stack([vid(0, np.arange(ny, 0, -1)), vid(0, np.arange(ny - 1, -1, -1))])
    boundary_edges = np.concatenate([bot, right, top, left]).astype(np.int64)

    mids = 0.5 * (vertices[boundary_edges[:, 0]] + vertices[boundary_edges[:, 1]])
    boundary_tags = np.array([int(tag_rule(x, y)) for x, y in mids], dtype=np.int64)

    h = _max_diameter(vertices, triangles)
    return TriMesh(vertices, triangles, boundary_edges, boundary_tags, h)


def refine_regular(mesh: TriMesh) -> TriMesh:
    """Refine every triangle into 4 congruent children via edge midpoints.

    Child boundary edges inherit the parent edge's tag and orientation, and
    h is halved.
    """
    nv = mesh.num_vertices
    edges = mesh.unique_edges()
    codes = edges[:, 0] * nv + edges[:, 1]  # sorted along with `edges`

    def edge_vertex(a, b):
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        return nv + np.searchsorted(codes, lo * nv + hi)

    midpoints = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.concatenate([mesh.vertices, midpoints])

    a, b, c = mesh.triangles[:, 0], mesh.triangles[:, 1], mesh.triangles[:, 2]
    mab = edge_vertex(a, b)
    mbc = edge_vertex(b, c)
    mca = edge_vertex(c, a)
    children = np.empty((4 * mesh.num_triangles, 3), dtype=np.int64)
    children[0::4] = np.column_stack([a, mab, mca])
    children[1::4] = np.column_stack([mab, b, mbc])
    children[2::4] = np.column_stack([mca, mbc, c])
    children[3::4] = np.column_stack([mab, mbc, mca])

    be = mesh.boundary_edges
    m = edge_vertex(be[:, 0], be[:, 1])
    child_edges = np.empty((2 * be.shape[0], 2), dtype=np.int64)
    child_edges[0::2] = np.column_stack([be[:, 0], m])
    child_edges[1::2] = np.column_stack([m, be[:, 1]])
    child_tags = np.repeat(mesh.boundary_tags, 2)

    h = _max_diameter(vertices, children)
    return TriMesh(vertices, children, child_edges, child_tags, h)

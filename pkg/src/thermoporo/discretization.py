"""Lagrange reference elements (degrees 1-3), triangle quadrature, DOF maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from .mesh import BoundaryTag, TriMesh

MAX_QUAD_EXACTNESS = 10


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Quadrature on the reference triangle {x >= 0, y >= 0, x + y <= 1}."""

    points: np.ndarray  # (nq, 2)
    weights: np.ndarray  # (nq,), sum 1/2
    exactness: int


def _conical_rule(n: int) -> QuadratureRule:
    """Conical-product Gauss rule with n^2 positive points, exact to degree 2n-1.

    The square (s, t) in [0,1]^2 maps to the triangle by x = s, y = t(1-s);
    the Jacobian factor (1-s) is absorbed into a Gauss-Jacobi rule in s.
    """
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (1.0 + xj)
    ws = 0.25 * wj
    xl, wl = leggauss(n)
    t = 0.5 * (1.0 + xl)
    wt = 0.5 * wl
    S, T = np.meshgrid(s, t, indexing="ij")
    X = S.ravel()
    Y = (T * (1.0 - S)).ravel()
    W = np.outer(ws, wt).ravel()
    return QuadratureRule(np.column_stack([X, Y]), W, 2 * n - 1)


@lru_cache(maxsize=None)
def quadrature(exactness: int) -> QuadratureRule:
    """Return a positive-weight rule exact for polynomials up to ``exactness``."""
    if not 0 <= exactness <= MAX_QUAD_EXACTNESS:
        raise ValueError(f"unsupported quadrature exactness {exactness}")
    n = max(1, -(-(exactness + 1) // 2))
    return _conical_rule(n)


def _monomial_exponents(degree: int) -> list[tuple[int, int]]:
    return [(a, tot - a) for tot in range(degree + 1) for a in range(tot, -1, -1)]


def _lagrange_nodes(degree: int) -> np.ndarray:
    v = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    nodes = list(v)
    # Edge nodes run from the first to the second vertex of each local edge.
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for j in range(1, degree):
            s = j / degree
            nodes.append(
                (v[a][0] + s * (v[b][0] - v[a][0]), v[a][1] + s * (v[b][1] - v[a][1]))
            )
    if degree == 3:
        nodes.append((1 / 3, 1 / 3))
    return np.array(nodes)


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """Lagrange element on the reference triangle.

    Nodes are ordered: the 3 vertices, then degree-1 nodes per local edge
    (edges (0,1), (1,2), (2,0), nodes running along each edge), then the
    centroid for degree 3.
    """

    degree: int
    nodes: np.ndarray  # (nloc, 2)
    _coeffs: np.ndarray  # monomial coefficients, column i = basis i

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Basis values at reference points, shape (npts, nloc)."""
        pts = np.asarray(points, dtype=float)
        mono = np.stack(
            [pts[:, 0] ** a * pts[:, 1] ** b for a, b in _monomial_exponents(self.degree)],
            axis=1,
        )
        return mono @ self._coeffs

    def eval_grad(self, points: np.ndarray) -> np.ndarray:
        """Basis gradients at reference points, shape (npts, nloc, 2)."""
        pts = np.asarray(points, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        dx_cols, dy_cols = [], []
        for a, b in _monomial_exponents(self.degree):
            dx_cols.append(a * x ** max(a - 1, 0) * y**b if a > 0 else np.zeros_like(x))
            dy_cols.append(b * x**a * y ** max(b - 1, 0) if b > 0 else np.zeros_like(x))
        dmx = np.stack(dx_cols, axis=1) @ self._coeffs
        dmy = np.stack(dy_cols, axis=1) @ self._coeffs
        return np.stack([dmx, dmy], axis=2)


@lru_cache(maxsize=None)
def reference_element(degree: int) -> ReferenceElement:
    """Standard Lagrange element of the given degree (1, 2, or 3)."""
    if degree not in (1, 2, 3):
        raise ValueError(f"unsupported element degree {degree}")
    nodes = _lagrange_nodes(degree)
    vand = np.stack(
        [nodes[:, 0] ** a * nodes[:, 1] ** b for a, b in _monomial_exponents(degree)],
        axis=1,
    )
    coeffs = np.linalg.inv(vand)
    return ReferenceElement(degree, nodes, coeffs)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global Lagrange DOF layout for a scalar or 2-vector field.

    Scalar numbering: vertex dofs first (vertex index order), then edge dofs
    (edges sorted lexicographically by vertex pair, interior nodes running
    from the lower- to the higher-numbered vertex), then one cell dof per
    triangle for degree 3.  Vector fields stack two scalar blocks: global
    dof = component * nscalar + scalar dof.
    """

    mesh: TriMesh
    element: ReferenceElement
    kind: str  # "scalar" | "vector"
    nscalar: int
    ndof: int
    cell_dofs: np.ndarray  # (nt, nloc * ncomp)
    dof_coords: np.ndarray  # (nscalar, 2)
    _edge_codes: np.ndarray  # sorted codes lo*nv+hi of the unique edges

    @property
    def degree(self) -> int:
        return self.element.degree

    @property
    def ncomp(self) -> int:
        return 2 if self.kind == "vector" else 1

    def edge_index(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._edge_codes, lo * self.mesh.num_vertices + hi)

    def edge_scalar_dofs(self, a: int, b: int) -> np.ndarray:
        """Scalar dofs of nodes interior to edge (a, b), ordered from a to b."""
        d = self.degree
        if d == 1:
            return np.empty(0, dtype=np.int64)
        lo, hi = (a, b) if a < b else (b, a)
        eid = int(self.edge_index(np.int64(lo), np.int64(hi)))
        base = self.mesh.num_vertices + eid * (d - 1)
        dofs = np.arange(base, base + d - 1)
        return dofs if a < b else dofs[::-1]


def build_dofmap(mesh: TriMesh, kind: str, degree: int) -> DofMap:
    """Build the DofMap for a scalar or vector Lagrange space on ``mesh``."""
    if kind not in ("scalar", "vector"):
        raise ValueError(f"unknown space kind {kind!r}")
    element = reference_element(degree)
    nv = mesh.num_vertices
    nt = mesh.num_triangles
    edges = mesh.unique_edges()
    edge_codes = edges[:, 0] * nv + edges[:, 1]
    ne = edges.shape[0]
    d = degree

    nscalar = nv + ne * (d - 1) + (nt if d == 3 else 0)
    nloc = element.node_count
    cell_dofs = np.empty((nt, nloc), dtype=np.int64)
    cell_dofs[:, :3] = mesh.triangles

    if d >= 2:
        col = 3
        for la, lb in ((0, 1), (1, 2), (2, 0)):
            a = mesh.triangles[:, la]
            b = mesh.triangles[:, lb]
            lo = np.minimum(a, b)
            hi = np.maximum(a, b)
            eid = np.searchsorted(edge_codes, lo * nv + hi)
            base = nv + eid * (d - 1)
            if d == 2:
                cell_dofs[:, col] = base
            else:
                forward = a < b
                cell_dofs[:, col] = np.where(forward, base, base + 1)
                cell_dofs[:, col + 1] = np.where(forward, base + 1, base)
            col += d - 1
    if d == 3:
        cell_dofs[:, 9] = nv + ne * 2 + np.arange(nt)

    dof_coords = np.empty((nscalar, 2))
    dof_coords[:nv] = mesh.vertices
    if d >= 2:
        va = mesh.vertices[edges[:, 0]]
        vb = mesh.vertices[edges[:, 1]]
        for j in range(d - 1):
            s = (j + 1) / d
            dof_coords[nv + j : nv + ne * (d - 1) : d - 1] = va + s * (vb - va)
    if d == 3:
        dof_coords[nv + 2 * ne :] = mesh.cell_coords().mean(axis=1)

    if kind == "vector":
        cell_dofs = np.hstack([cell_dofs, cell_dofs + nscalar])
        ndof = 2 * nscalar
    else:
        ndof = nscalar
    return DofMap(mesh, element, kind, nscalar, ndof, cell_dofs, dof_coords, edge_codes)


def boundary_dofs(
    dofmap: DofMap, mesh: TriMesh, selector: BoundaryTag | None = None
) -> np.ndarray:
    """Dofs whose node lies on a selected boundary edge (both components for vectors).

    ``selector=None`` selects the whole boundary.
    """
    scalar: list[np.ndarray] = []
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        if selector is not None and tag != int(selector):
            continue
        scalar.append(np.array([a, b], dtype=np.int64))
        scalar.append(dofmap.edge_scalar_dofs(int(a), int(b)))
    if not scalar:
        return np.empty(0, dtype=np.int64)
    dofs = np.unique(np.concatenate(scalar))
    if dofmap.kind == "vector":
        dofs = np.concatenate([dofs, dofs + dofmap.nscalar])
    return dofs


def interpolate(dofmap: DofMap, fn) -> np.ndarray:
    """Nodal interpolation: evaluate ``fn(x, y)`` at the dof nodes.

    Vector fields expect ``fn`` to return an array of shape (2, n); the
    result stacks the two component blocks.
    """
    x, y = dofmap.dof_coords[:, 0], dofmap.dof_coords[:, 1]
    vals = np.asarray(fn(x, y), dtype=float)
    if dofmap.kind == "vector":
        if vals.shape != (2, dofmap.nscalar):
            raise ValueError("vector interpolation needs fn returning shape (2, n)")
        return np.concatenate([vals[0], vals[1]])
    return vals.reshape(dofmap.nscalar)


@dataclass(frozen=True, eq=False)
class Spaces:
    """The three discrete spaces of the four-field formulation.

    V: vector displacement space of degree k; Q: scalar space of degree k-1
    for the volumetric-stress variable (no boundary conditions); W: scalar
    space of degree l shared by pressure and temperature (Dirichlet on the
    whole boundary).
    """

    V: DofMap
    Q: DofMap
    W: DofMap

    @property
    def k(self) -> int:
        return self.V.degree

    @property
    def l(self) -> int:
        return self.W.degree


def build_spaces(mesh: TriMesh, k: int, l: int | None = None) -> Spaces:
    """Build the displacement/volumetric/pressure-temperature spaces."""
    if k not in (2, 3):
        raise ValueError("displacement degree k must be 2 or 3")
    if l is None:
        l = k - 1
    return Spaces(
        V=build_dofmap(mesh, "vector", k),
        Q=build_dofmap(mesh, "scalar", k - 1),
        W=build_dofmap(mesh, "scalar", l),
    )

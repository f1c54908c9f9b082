"""Assembly of the bilinear forms and load vectors of the four-field system."""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .discretization import DofMap, QuadratureRule, Spaces, quadrature
from .linalg import from_triplets
from .mesh import BoundaryTag, TriMesh

LOAD_EXACTNESS = 8

# Per-object caches for data rebuilt at every time level otherwise.  Keys
# carry the owning object's id; a weak reference guards against id reuse
# after garbage collection, so entries never outlive their owner's identity.
_GEOMETRY_CACHE: dict = {}
_POINTS_CACHE: dict = {}
_COORDS_CACHE: dict = {}
_LOAD_CACHE: dict = {}


def _id_cached(cache: dict, owner, extra: tuple, build):
    key = (id(owner),) + extra
    hit = cache.get(key)
    if hit is not None and hit[0]() is owner:
        return hit[1]
    data = build()
    cache[key] = (weakref.ref(owner), data)
    return data


def _geometry(mesh: TriMesh):
    """Affine map data per triangle: Jacobian, |det J|, inverse-transpose."""

    def build():
        xy = mesh.cell_coords()
        J = np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 0]], axis=2)  # (nt,2,2)
        detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        inv[:, 1, 1] = J[:, 0, 0]
        inv /= detJ[:, None, None]
        invJT = inv.transpose(0, 2, 1)
        return J, detJ, invJT

    return _id_cached(_GEOMETRY_CACHE, mesh, (), build)


def physical_points(mesh: TriMesh, rule: QuadratureRule) -> np.ndarray:
    """Quadrature points mapped to every triangle, shape (nt, nq, 2)."""

    def build():
        xy = mesh.cell_coords()
        J, _, _ = _geometry(mesh)
        return xy[:, None, 0, :] + np.einsum("tde,qe->tqd", J, rule.points)

    # quadrature() caches rules for the life of the process, so keying on
    # the rule's id is stable.
    return _id_cached(_POINTS_CACHE, mesh, (id(rule),), build)


def _point_coords(mesh: TriMesh, rule: QuadratureRule):
    """Contiguous x and y coordinate arrays of the mapped quadrature points.

    The arrays keep a stable identity per (mesh, rule), so load integrands
    that memoize on their point arguments can reuse evaluations across
    fields and time levels.
    """

    def build():
        pts = physical_points(mesh, rule)
        return np.ascontiguousarray(pts[..., 0]), np.ascontiguousarray(pts[..., 1])

    return _id_cached(_COORDS_CACHE, mesh, (id(rule),), build)


def _scatter_matrix(nrows, ncols, row_dofs, col_dofs, local):
    """Accumulate per-cell local matrices (nt, nr, nc) into a global CSR."""
    nr = row_dofs.shape[1]
    nc = col_dofs.shape[1]
    rows = np.repeat(row_dofs, nc, axis=1).ravel()
    cols = np.tile(col_dofs, (1, nr)).ravel()
    return from_triplets(nrows, ncols, rows, cols, local.ravel())


def _phys_grads(mesh: TriMesh, dofmap: DofMap, rule: QuadratureRule):
    gref = dofmap.element.eval_grad(rule.points)  # (nq, nloc, 2)
    _, detJ, invJT = _geometry(mesh)
    gphys = np.einsum("tde,qie->tqid", invJT, gref)  # (nt, nq, nloc, 2)
    return gphys, detJ


def assemble_mass(
    mesh: TriMesh, row_map: DofMap, col_map: DofMap | None = None, exactness=None
) -> sp.csr_matrix:
    """(phi_j, phi_i) mass matrix; rectangular when the spaces differ."""
    col_map = col_map or row_map
    ex = exactness or 2 * max(row_map.degree, col_map.degree)
    rule = quadrature(ex)
    phi_r = row_map.element.eval(rule.points)
    phi_c = col_map.element.eval(rule.points)
    _, detJ, _ = _geometry(mesh)
    local = np.einsum("q,qi,qj,t->tij", rule.weights, phi_r, phi_c, detJ)
    return _scatter_matrix(
        row_map.ndof, col_map.ndof, row_map.cell_dofs, col_map.cell_dofs, local
    )


def assemble_stiffness(
    mesh: TriMesh, dofmap: DofMap, tensor: np.ndarray, exactness=None
) -> sp.csr_matrix:
    """(tensor grad phi_j, grad phi_i) for a scalar space and constant 2x2 tensor."""
    ex = exactness or max(1, 2 * dofmap.degree)
    rule = quadrature(ex)
    g, detJ = _phys_grads(mesh, dofmap, rule)
    local = np.einsum("q,tqid,de,tqje,t->tij", rule.weights, g, np.asarray(tensor), g, detJ)
    return _scatter_matrix(dofmap.ndof, dofmap.ndof, dofmap.cell_dofs, dofmap.cell_dofs, local)


def assemble_elasticity(mesh: TriMesh, vec_map: DofMap, mu: float, exactness=None) -> sp.csr_matrix:
    """2*mu*(eps(u), eps(v)) on the vector space with eps the symmetric gradient."""
    ex = exactness or max(1, 2 * vec_map.degree)
    rule = quadrature(ex)
    g, detJ = _phys_grads(mesh, vec_map, rule)
    gx, gy = g[..., 0], g[..., 1]
    w, dJ = rule.weights, detJ

    def form(a, b, scale):
        return scale * np.einsum("q,tqi,tqj,t->tij", w, a, b, dJ)

    axx = form(gx, gx, 2.0) + form(gy, gy, 1.0)
    ayy = form(gy, gy, 2.0) + form(gx, gx, 1.0)
    axy = form(gy, gx, 1.0)  # test in x-component, trial in y-component
    nloc = vec_map.element.node_count
    local = np.empty((mesh.num_triangles, 2 * nloc, 2 * nloc))
    local[:, :nloc, :nloc] = axx
    local[:, :nloc, nloc:] = axy
    local[:, nloc:, :nloc] = axy.transpose(0, 2, 1)
    local[:, nloc:, nloc:] = ayy
    local *= mu
    return _scatter_matrix(vec_map.ndof, vec_map.ndof, vec_map.cell_dofs, vec_map.cell_dofs, local)


def assemble_div_coupling(
    mesh: TriMesh, vec_map: DofMap, q_map: DofMap, exactness=None
) -> sp.csr_matrix:
    """(div v, q): rows are vector dofs, columns scalar dofs."""
    ex = exactness or 2 * max(vec_map.degree, q_map.degree)
    rule = quadrature(ex)
    g, detJ = _phys_grads(mesh, vec_map, rule)
    psi = q_map.element.eval(rule.points)
    dx = np.einsum("q,tqi,qj,t->tij", rule.weights, g[..., 0], psi, detJ)
    dy = np.einsum("q,tqi,qj,t->tij", rule.weights, g[..., 1], psi, detJ)
    local = np.concatenate([dx, dy], axis=1)
    return _scatter_matrix(vec_map.ndof, q_map.ndof, vec_map.cell_dofs, q_map.cell_dofs, local)


def _load_tables(mesh: TriMesh, dofmap: DofMap, exactness: int):
    def build():
        rule = quadrature(exactness)
        px, py = _point_coords(mesh, rule)
        _, detJ, _ = _geometry(mesh)
        wphi = rule.weights[:, None] * dofmap.element.eval(rule.points)  # (nq, nloc)
        return px, py, detJ, wphi

    return _id_cached(_LOAD_CACHE, dofmap, (id(mesh), exactness), build)


def assemble_load(
    mesh: TriMesh, dofmap: DofMap, fn, t: float, exactness: int = LOAD_EXACTNESS
) -> np.ndarray:
    """(f(., t), phi_i) with the high-order load quadrature.

    Scalar spaces expect ``fn(x, y, t) -> (...)``; vector spaces expect an
    array of shape (2, ...).  Mapped points and the weighted basis table are
    cached so repeated calls inside a time loop only pay for evaluating
    ``fn`` and one matrix product.
    """
    px, py, detJ, wphi = _load_tables(mesh, dofmap, exactness)
    vals = np.asarray(fn(px, py, t), dtype=float)
    if dofmap.kind == "vector":
        local = (vals * detJ[None, :, None]) @ wphi  # (2, nt, nloc)
        local = np.concatenate([local[0], local[1]], axis=1)
    else:
        local = (vals * detJ[:, None]) @ wphi
    return np.bincount(
        dofmap.cell_dofs.ravel(), weights=local.ravel(), minlength=dofmap.ndof
    )


def _edge_trace_table(degree: int, s_pts: np.ndarray) -> np.ndarray:
    """1D Lagrange trace basis on an edge parametrized from node a to node b.

    Column order matches [a, b, interior nodes running from a to b], the
    same order ``edge_scalar_dofs`` returns for any (a, b).
    """
    interior = [(j + 1) / degree for j in range(degree - 1)]
    nodes = np.array([0.0, 1.0] + interior)
    coeffs = np.linalg.inv(np.vander(nodes, increasing=True))
    return np.vander(s_pts, N=len(nodes), increasing=True) @ coeffs


def assemble_neumann_traction(
    mesh: TriMesh,
    dofmap_u: DofMap,
    traction,
    t: float,
    tags: tuple[BoundaryTag, ...] = (BoundaryTag.NEUMANN,),
    n_gauss: int = 5,
) -> np.ndarray:
    """Boundary line-integral load for the displacement space.

    ``traction(x, y, nx, ny, t)`` returns the two traction components at
    boundary points with outward normal (nx, ny); edges sharing one normal
    are evaluated in a single batched call.
    """
    xg, wg = leggauss(n_gauss)
    s = 0.5 * (1.0 + xg)
    w = 0.5 * wg
    table = _edge_trace_table(dofmap_u.degree, s)
    out = np.zeros(dofmap_u.ndof)
    tag_vals = {int(tag) for tag in tags}
    sel = [i for i, tag in enumerate(mesh.boundary_tags) if int(tag) in tag_vals]
    if not sel:
        return out
    edges = mesh.boundary_edges[sel]
    pa = mesh.vertices[edges[:, 0]]
    tang = mesh.vertices[edges[:, 1]] - pa
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    pts = pa[:, None, :] + s[None, :, None] * tang[:, None, :]  # (m, nq, 2)
    dofs = np.array(
        [
            np.concatenate([e, dofmap_u.edge_scalar_dofs(int(e[0]), int(e[1]))])
            for e in edges
        ]
    )
    keys = np.round(normals, 12)
    for nvec in np.unique(keys, axis=0):
        grp = np.flatnonzero((keys == nvec).all(axis=1))
        tx, ty = traction(
            pts[grp, :, 0].ravel(),
            pts[grp, :, 1].ravel(),
            float(nvec[0]),
            float(nvec[1]),
            t,
        )
        tx = np.asarray(tx, dtype=float).reshape(grp.size, -1)
        ty = np.asarray(ty, dtype=float).reshape(grp.size, -1)
        contrib_x = lengths[grp, None] * ((tx * w) @ table)
        contrib_y = lengths[grp, None] * ((ty * w) @ table)
        gdofs = dofs[grp].ravel()
        out += np.bincount(gdofs, weights=contrib_x.ravel(), minlength=out.size)
        out += np.bincount(
            gdofs + dofmap_u.nscalar, weights=contrib_y.ravel(), minlength=out.size
        )
    return out


def apply_dirichlet(A: sp.spmatrix, rhs: np.ndarray | None, dofs: np.ndarray):
    """Symmetric elimination of homogeneous Dirichlet dofs.

    Constrained rows and columns are zeroed, the diagonal set to one, and
    the matching rhs entries zeroed.  Returns (A, rhs) with rhs passed
    through (possibly None).
    """
    n = A.shape[0]
    dofs = np.asarray(dofs, dtype=np.int64)
    mask = np.zeros(n, dtype=bool)
    mask[dofs] = True
    coo = A.tocoo()
    keep = ~(mask[coo.row] | mask[coo.col])
    rows = np.concatenate([coo.row[keep], dofs])
    cols = np.concatenate([coo.col[keep], dofs])
    vals = np.concatenate([coo.data[keep], np.ones(dofs.size)])
    out = from_triplets(n, n, rows, cols, vals)
    if rhs is not None:
        rhs = rhs.copy()
        rhs[dofs] = 0.0
    return out, rhs


@dataclass(frozen=True, eq=False)
class FormSet:
    """Every matrix of the discrete four-field system.

    p and T share one space, so M_p, M_T, M_pT alias a single mass matrix
    and M_xip, M_xiT alias one rectangular coupling; the named fields keep
    the block layout explicit.
    """

    A_elast: sp.csr_matrix  # 2*mu*(eps(u), eps(v)) on V
    B_div: sp.csr_matrix  # (div v, q): V rows, Q columns
    M_xi: sp.csr_matrix  # mass on Q
    M_p: sp.csr_matrix  # mass on W
    M_T: sp.csr_matrix  # mass on W
    M_pT: sp.csr_matrix  # mass coupling on W x W
    M_xip: sp.csr_matrix  # mass coupling, Q rows x W columns
    M_xiT: sp.csr_matrix  # mass coupling, Q rows x W columns
    K_p: sp.csr_matrix  # stiffness with tensor K on W
    K_T: sp.csr_matrix  # stiffness with tensor Theta on W


def assemble_forms(mesh: TriMesh, spaces: Spaces, params) -> FormSet:
    """Assemble all bilinear forms for the given parameter set."""
    A_elast = assemble_elasticity(mesh, spaces.V, params.mu)
    B_div = assemble_div_coupling(mesh, spaces.V, spaces.Q)
    M_xi = assemble_mass(mesh, spaces.Q)
    M_W = assemble_mass(mesh, spaces.W)
    M_xiW = assemble_mass(mesh, spaces.Q, spaces.W)
    K_p = assemble_stiffness(mesh, spaces.W, params.K.as_matrix())
    K_T = assemble_stiffness(mesh, spaces.W, params.Theta.as_matrix())
    return FormSet(
        A_elast=A_elast,
        B_div=B_div,
        M_xi=M_xi,
        M_p=M_W,
        M_T=M_W,
        M_pT=M_W,
        M_xip=M_xiW,
        M_xiT=M_xiW,
        K_p=K_p,
        K_T=K_T,
    )


def eval_field(mesh: TriMesh, dofmap: DofMap, coeffs: np.ndarray, rule: QuadratureRule):
    """Field and gradient values at the rule's points in every cell.

    Scalar: values (nt, nq), gradients (nt, nq, 2).
    Vector: values (nt, nq, 2), gradients (nt, nq, 2, 2) with [c, d] = d_d u_c.
    """
    phi = dofmap.element.eval(rule.points)
    g, _ = _phys_grads(mesh, dofmap, rule)
    if dofmap.kind == "vector":
        nloc = dofmap.element.node_count
        cx = coeffs[dofmap.cell_dofs[:, :nloc]]
        cy = coeffs[dofmap.cell_dofs[:, nloc:]]
        vals = np.stack([cx @ phi.T, cy @ phi.T], axis=2)
        grads = np.stack(
            [np.einsum("ti,tqid->tqd", cx, g), np.einsum("ti,tqid->tqd", cy, g)], axis=2
        )
        return vals, grads
    c = coeffs[dofmap.cell_dofs]
    vals = c @ phi.T
    grads = np.einsum("ti,tqid->tqd", c, g)
    return vals, grads

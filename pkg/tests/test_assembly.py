"""Bilinear-form assembly against closed forms and integral identities."""

import numpy as np
import pytest

from thermoporo.assembly import (
    apply_dirichlet,
    assemble_div_coupling,
    assemble_elasticity,
    assemble_forms,
    assemble_load,
    assemble_mass,
    assemble_neumann_traction,
    assemble_stiffness,
    eval_field,
    physical_points,
)
from thermoporo.discretization import build_dofmap, build_spaces, interpolate, quadrature
from thermoporo.linalg import is_symmetric
from thermoporo.mesh import BoundaryTag, build_uniform_rect
from thermoporo.model import SPD2, example1_params


def _p1_dense_oracle(mesh):
    """Dense P1 mass and identity-tensor stiffness from per-triangle formulas."""
    nv = mesh.num_vertices
    M = np.zeros((nv, nv))
    K = np.zeros((nv, nv))
    for tri in mesh.triangles:
        xy = mesh.vertices[tri]
        J = np.column_stack([xy[1] - xy[0], xy[2] - xy[0]])
        area = 0.5 * abs(np.linalg.det(J))
        grads_ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        grads = grads_ref @ np.linalg.inv(J)
        M[np.ix_(tri, tri)] += area / 12.0 * (np.ones((3, 3)) + np.eye(3))
        K[np.ix_(tri, tri)] += area * grads @ grads.T
    return M, K


def test_p1_mass_and_stiffness_match_dense_oracle():
    mesh = build_uniform_rect(3, 2, corner_lo=(0.0, 0.0), corner_hi=(1.2, 0.8))
    p1 = build_dofmap(mesh, "scalar", 1)
    M_ref, K_ref = _p1_dense_oracle(mesh)
    M = assemble_mass(mesh, p1).toarray()
    K = assemble_stiffness(mesh, p1, SPD2.isotropic(1.0).as_matrix()).toarray()
    assert np.allclose(M, M_ref, atol=1e-14)
    assert np.allclose(K, K_ref, atol=1e-13)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_mass_and_stiffness_integral_identities(degree):
    mesh = build_uniform_rect(3, 3, corner_lo=(0.0, 0.0), corner_hi=(1.5, 1.0))
    dofmap = build_dofmap(mesh, "scalar", degree)
    area = 1.5
    ones = np.ones(dofmap.ndof)
    x = dofmap.dof_coords[:, 0].copy()
    y = dofmap.dof_coords[:, 1].copy()

    M = assemble_mass(mesh, dofmap)
    assert is_symmetric(M)
    assert abs(ones @ M @ ones - area) < 1e-13

    tensor = SPD2(2.0, 0.3, 1.5)
    K = assemble_stiffness(mesh, dofmap, tensor.as_matrix())
    assert is_symmetric(K)
    assert np.abs(K @ ones).max() < 1e-12  # constants in the kernel
    # energies of linear fields read off the tensor entries
    assert abs(x @ K @ x - tensor.xx * area) < 1e-12
    assert abs(x @ K @ y - tensor.xy * area) < 1e-12
    assert abs(y @ K @ y - tensor.yy * area) < 1e-12


def test_rectangular_mass_consistency():
    mesh = build_uniform_rect(2, 3)
    p1 = build_dofmap(mesh, "scalar", 1)
    p2 = build_dofmap(mesh, "scalar", 2)
    M = assemble_mass(mesh, p1, p2)
    assert M.shape == (p1.ndof, p2.ndof)
    # applying the rectangular mass to the constant-one P2 vector gives the
    # P1 load of the constant function
    assert np.allclose(M @ np.ones(p2.ndof),
                       assemble_mass(mesh, p1) @ np.ones(p1.ndof), atol=1e-14)


def test_elasticity_rigid_modes_and_energies():
    mesh = build_uniform_rect(3, 3)
    vec = build_dofmap(mesh, "vector", 2)
    mu = 0.7
    A = assemble_elasticity(mesh, vec, mu)
    assert is_symmetric(A)
    n = vec.nscalar
    x = vec.dof_coords[:n, 0].copy()
    y = vec.dof_coords[:n, 1].copy()
    translation = np.concatenate([np.ones(n), 2.0 * np.ones(n)])
    rotation = np.concatenate([-y, x])
    assert np.abs(A @ translation).max() < 1e-12
    assert np.abs(A @ rotation).max() < 1e-12
    stretch = np.concatenate([x, np.zeros(n)])  # strain diag(1, 0)
    assert abs(stretch @ A @ stretch - 2.0 * mu) < 1e-12
    shear = np.concatenate([y, np.zeros(n)])  # strain offdiag 1/2
    assert abs(shear @ A @ shear - mu) < 1e-12


def test_div_coupling_on_linear_fields():
    mesh = build_uniform_rect(3, 2)
    vec = build_dofmap(mesh, "vector", 2)
    q = build_dofmap(mesh, "scalar", 1)
    B = assemble_div_coupling(mesh, vec, q)
    assert B.shape == (vec.ndof, q.ndof)
    n = vec.nscalar
    x = vec.dof_coords[:n, 0].copy()
    y = vec.dof_coords[:n, 1].copy()
    u_div1 = np.concatenate([x, np.zeros(n)])  # div = 1
    u_div0 = np.concatenate([y, np.zeros(n)])  # div = 0
    q_load = assemble_mass(mesh, q) @ np.ones(q.ndof)  # (psi_j, 1)
    assert np.allclose(u_div1 @ B, q_load, atol=1e-13)
    assert np.abs(u_div0 @ B).max() < 1e-13


def test_load_vector_scaling_and_time():
    mesh = build_uniform_rect(2, 2)
    scalar = build_dofmap(mesh, "scalar", 2)

    def g(x, y, t):
        return (1.0 + t) * (x + 2.0 * y)

    load0 = assemble_load(mesh, scalar, g, 0.0)
    load1 = assemble_load(mesh, scalar, g, 1.0)
    assert np.allclose(load1, 2.0 * load0, atol=1e-14)
    # (x + 2y, 1) over the unit square = 3/2
    assert abs(load0.sum() - 1.5) < 1e-13

    vec = build_dofmap(mesh, "vector", 2)

    def f(x, y, t):
        return np.stack([np.ones_like(x), np.zeros_like(x)])

    vload = assemble_load(mesh, vec, f, 0.0)
    n = vec.nscalar
    assert abs(vload[:n].sum() - 1.0) < 1e-14
    assert np.abs(vload[n:]).max() == 0.0


def test_neumann_traction_resultants():
    all_neumann = build_uniform_rect(2, 2, tag_rule=lambda x, y: BoundaryTag.NEUMANN)
    vec = build_dofmap(all_neumann, "vector", 2)

    def pull(x, y, nx, ny, t):
        return np.ones_like(x), np.zeros_like(x)

    load = assemble_neumann_traction(all_neumann, vec, pull, 0.0)
    n = vec.nscalar
    assert abs(load[:n].sum() - 4.0) < 1e-12  # whole perimeter
    assert np.abs(load[n:]).max() == 0.0

    def normal(x, y, nx, ny, t):
        return np.full_like(x, nx), np.full_like(x, ny)

    load = assemble_neumann_traction(all_neumann, vec, normal, 0.0)
    # constant normal pressure has zero resultant on a closed boundary
    assert abs(load[:n].sum()) < 1e-12 and abs(load[n:].sum()) < 1e-12

    clamped = build_uniform_rect(2, 2)  # x-sides Dirichlet, y-sides Neumann
    vec_c = build_dofmap(clamped, "vector", 2)
    load = assemble_neumann_traction(clamped, vec_c, pull, 0.0)
    assert abs(load[: vec_c.nscalar].sum() - 2.0) < 1e-12  # y-sides only


def test_apply_dirichlet_structure():
    rng = np.random.default_rng(5)
    dense = rng.standard_normal((5, 5))
    dense = dense + dense.T
    from thermoporo.linalg import from_triplets

    idx = np.indices((5, 5))
    A = from_triplets(5, 5, idx[0].ravel(), idx[1].ravel(), dense.ravel())
    rhs = rng.standard_normal(5)
    fixed = np.array([1, 3])
    out, new_rhs = apply_dirichlet(A, rhs, fixed)
    dense_out = out.toarray()
    free = np.array([0, 2, 4])
    assert np.allclose(dense_out[np.ix_(free, free)], dense[np.ix_(free, free)])
    assert np.allclose(dense_out[fixed][:, free], 0.0)
    assert np.allclose(dense_out[free][:, fixed], 0.0)
    assert np.allclose(dense_out[fixed][:, fixed], np.eye(2))
    assert (new_rhs[fixed] == 0.0).all()
    assert np.allclose(new_rhs[free], rhs[free])
    # rhs may be omitted
    out2, none_rhs = apply_dirichlet(A, None, fixed)
    assert none_rhs is None
    assert np.allclose(out2.toarray(), dense_out)


def test_eval_field_reproduces_polynomials():
    mesh = build_uniform_rect(3, 2)
    rule = quadrature(4)
    pts = physical_points(mesh, rule)
    x, y = pts[..., 0], pts[..., 1]

    scalar = build_dofmap(mesh, "scalar", 2)
    coeffs = interpolate(scalar, lambda X, Y: X**2 + Y)
    vals, grads = eval_field(mesh, scalar, coeffs, rule)
    assert np.allclose(vals, x**2 + y, atol=1e-13)
    assert np.allclose(grads[..., 0], 2.0 * x, atol=1e-12)
    assert np.allclose(grads[..., 1], 1.0, atol=1e-12)

    vec = build_dofmap(mesh, "vector", 2)
    vcoef = interpolate(vec, lambda X, Y: np.stack([X**2, X * Y]))
    vvals, vgrads = eval_field(mesh, vec, vcoef, rule)
    assert np.allclose(vvals[..., 0], x**2, atol=1e-13)
    assert np.allclose(vvals[..., 1], x * y, atol=1e-13)
    # vgrads[..., c, d] = d u_c / d x_d
    assert np.allclose(vgrads[..., 0, 0], 2.0 * x, atol=1e-12)
    assert np.allclose(vgrads[..., 0, 1], 0.0, atol=1e-12)
    assert np.allclose(vgrads[..., 1, 0], y, atol=1e-12)
    assert np.allclose(vgrads[..., 1, 1], x, atol=1e-12)


def test_assemble_forms_shapes_and_symmetry():
    mesh = build_uniform_rect(2, 2)
    spaces = build_spaces(mesh, 2)
    forms = assemble_forms(mesh, spaces, example1_params())
    nu, nq, nw = spaces.V.ndof, spaces.Q.ndof, spaces.W.ndof
    assert forms.A_elast.shape == (nu, nu)
    assert forms.B_div.shape == (nu, nq)
    assert forms.M_xi.shape == (nq, nq)
    assert forms.M_xip.shape == (nq, nw)
    assert forms.M_xiT.shape == (nq, nw)
    assert forms.M_p.shape == (nw, nw) and forms.M_pT.shape == (nw, nw)
    assert forms.K_p.shape == (nw, nw) and forms.K_T.shape == (nw, nw)
    for name in ("A_elast", "M_xi", "M_p", "M_T", "M_pT", "K_p", "K_T"):
        assert is_symmetric(getattr(forms, name)), name

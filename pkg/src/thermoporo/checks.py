"""Self-verification battery: assembly oracles, SPD checks, patch tests, lag probes.

Every check returns a CheckResult; ``run_all`` executes the whole battery.
The checks are deliberately independent of the assembly code paths they
verify (dense closed-form oracles, divergence-theorem identities, random
parameter draws) so a regression in one module cannot hide itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import error_report
from .assembly import (
    _phys_grads,
    assemble_load,
    assemble_mass,
    assemble_neumann_traction,
    assemble_stiffness,
    physical_points,
)
from .discretization import build_dofmap, build_spaces, quadrature
from .linalg import is_symmetric
from .mesh import BoundaryTag, build_uniform_rect
from .model import (
    AssumptionError,
    ModelParams,
    SPD2,
    example1_exact,
    example1_params,
    initial_data_from_exact,
    initial_state,
    make_traction,
    manufacture_sources,
    polynomial_exact,
    rd_coefficient_matrix,
)
from .steppers import ALGORITHMS, Stepper


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # PASS | FAIL | WARN
    detail: str

    @property
    def ok(self) -> bool:
        return self.status != "FAIL"


def _result(name: str, ok: bool, detail: str) -> CheckResult:
    return CheckResult(name, "PASS" if ok else "FAIL", detail)


def check_quadrature_exactness() -> CheckResult:
    """Integrate all monomials x^a y^b against the closed form a! b! / (a+b+2)!."""
    worst = 0.0
    for exactness in range(0, 11):
        rule = quadrature(exactness)
        for a in range(exactness + 1):
            for b in range(exactness + 1 - a):
                val = np.sum(rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b)
                ref = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
                worst = max(worst, abs(val - ref) / ref)
    return _result(
        "quadrature-exactness",
        worst <= 1e-13,
        f"max relative monomial defect {worst:.2e} over exactness 0..10",
    )


def _p1_local_oracles(mesh):
    """Dense P1 mass and stiffness assembled from per-triangle closed forms."""
    nv = mesh.num_vertices
    M = np.zeros((nv, nv))
    K = np.zeros((nv, nv))
    m_local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    for tri, area in zip(mesh.triangles, mesh.areas()):
        p = mesh.vertices[tri]
        # grad of barycentric i: rotate the opposite edge by 90 degrees.
        g = np.array(
            [
                [p[1, 1] - p[2, 1], p[2, 0] - p[1, 0]],
                [p[2, 1] - p[0, 1], p[0, 0] - p[2, 0]],
                [p[0, 1] - p[1, 1], p[1, 0] - p[0, 0]],
            ]
        ) / (2.0 * area)
        M[np.ix_(tri, tri)] += area * m_local
        K[np.ix_(tri, tri)] += area * (g @ g.T)
    return M, K


def check_p1_assembly_oracles() -> CheckResult:
    mesh = build_uniform_rect(3, 2, corner_hi=(1.2, 0.8))
    dofmap = build_dofmap(mesh, "scalar", 1)
    M_ref, K_ref = _p1_local_oracles(mesh)
    dM = np.abs(assemble_mass(mesh, dofmap).toarray() - M_ref).max()
    dK = np.abs(assemble_stiffness(mesh, dofmap, np.eye(2)).toarray() - K_ref).max()
    ok = dM <= 1e-14 and dK <= 1e-13
    return _result(
        "p1-assembly-oracles",
        ok,
        f"mass defect {dM:.2e}, stiffness defect {dK:.2e} vs dense closed forms",
    )


def _traction_defect(exact, params, k: int) -> float:
    """Max dof defect of int_bdy (sigma n) . phi = int (div sigma) . phi + int sigma : grad phi.

    The boundary side uses the production edge quadrature; the volume side an
    independent cell rule with div sigma = -f.
    """
    sources = manufacture_sources(exact, params)
    traction = make_traction(exact, params)
    t = 0.3
    mesh = build_uniform_rect(8, 8, tag_rule=lambda x, y: BoundaryTag.NEUMANN)
    V = build_dofmap(mesh, "vector", k)
    got = assemble_neumann_traction(mesh, V, traction, t)

    rule = quadrature(8)
    pts = physical_points(mesh, rule)
    x, y = pts[..., 0], pts[..., 1]
    gu = np.asarray(exact.grad_u(x, y, t))
    iso = (
        params.lam * exact.div_u(x, y, t)
        - params.alpha * exact.p(x, y, t)
        - params.beta * exact.T(x, y, t)
    )
    sxx = 2.0 * params.mu * gu[0, 0] + iso
    syy = 2.0 * params.mu * gu[1, 1] + iso
    sxy = params.mu * (gu[0, 1] + gu[1, 0])
    g, detJ = _phys_grads(mesh, V, rule)
    w = rule.weights
    loc_x = np.einsum("q,tqi,t->ti", w, sxx[..., None] * g[..., 0] + sxy[..., None] * g[..., 1], detJ)
    loc_y = np.einsum("q,tqi,t->ti", w, sxy[..., None] * g[..., 0] + syy[..., None] * g[..., 1], detJ)
    expected = -assemble_load(mesh, V, sources.f, t)
    nloc = V.element.node_count
    np.add.at(expected, V.cell_dofs[:, :nloc], loc_x)
    np.add.at(expected, V.cell_dofs[:, nloc:], loc_y)
    return float(np.abs(got - expected).max())


def check_traction_divergence_identity() -> CheckResult:
    """Boundary load must satisfy the divergence theorem against volume integrals.

    Polynomial data is integrated exactly, so any defect there is an assembly
    bug (edge dof order, normals, scaling); trigonometric data additionally
    bounds the edge-rule truncation on analytic tractions.
    """
    params = example1_params()
    worst_poly = max(_traction_defect(polynomial_exact(params, k), params, k) for k in (2, 3))
    worst_trig = max(_traction_defect(example1_exact(params), params, k) for k in (2, 3))
    ok = worst_poly <= 1e-12 and worst_trig <= 1e-8
    return _result(
        "traction-divergence-identity",
        ok,
        f"polynomial defect {worst_poly:.2e} (exact quadrature), "
        f"trigonometric defect {worst_trig:.2e} (edge-rule truncation)",
    )


def check_rd_coefficient_spd(ndraws: int = 1000, seed: int = 20260814) -> CheckResult:
    """The 2x2 pressure-temperature coefficient matrix is SPD under the assumptions."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(ndraws):
        lam, mu, alpha, beta = 10.0 ** rng.uniform(-2.0, 3.0, size=4)
        b0 = rng.uniform(0.0, 1.0)
        a0 = b0 + 10.0 ** rng.uniform(-6.0, 1.0)
        c0 = b0 + 10.0 ** rng.uniform(-6.0, 1.0)
        params = ModelParams(
            lam, mu, alpha, beta, a0, b0, c0, SPD2.isotropic(1.0), SPD2.isotropic(1.0)
        )
        params.validate()
        m = rd_coefficient_matrix(params)
        if not (m[0, 0] > 0.0 and np.linalg.det(m) > 0.0 and m[0, 1] == m[1, 0]):
            bad += 1
    return _result(
        "rd-coefficient-spd",
        bad == 0,
        f"{ndraws - bad}/{ndraws} random admissible draws give an SPD matrix",
    )


def _example1_stepper(k: int = 2, n: int = 4, dt: float = 0.25, params=None, strict=True):
    params = params or example1_params()
    exact = example1_exact(params)
    mesh = build_uniform_rect(n, n)
    spaces = build_spaces(mesh, k)
    stepper = Stepper(
        mesh,
        spaces,
        params,
        manufacture_sources(exact, params),
        dt,
        traction=make_traction(exact, params),
        strict=strict,
    )
    state0 = initial_state(mesh, spaces, initial_data_from_exact(exact), params)
    return stepper, state0, exact, mesh, spaces


def check_system_matrices() -> CheckResult:
    """Pressure-temperature block SPD; saddle symmetric; all systems solvable.

    The monolithic matrix is deliberately non-symmetric (the volumetric-stress
    coupling enters the two row groups with opposite signs), so only the two
    subproblem matrices carry a symmetry contract.
    """
    stepper, _, _, _, _ = _example1_stepper()
    rd = stepper.system_matrix("rd")
    sym_ok = is_symmetric(rd) and is_symmetric(stepper.system_matrix("saddle"))
    eig_min = float(np.linalg.eigvalsh(rd.toarray()).min())
    # Factorizations exist (construction succeeded); probe one solve each.
    rng = np.random.default_rng(7)
    resid = 0.0
    for name in ("rd", "saddle", "coupled"):
        A = stepper.system_matrix(name)
        b = rng.standard_normal(A.shape[0])
        x = stepper._factor(name).solve(b)
        resid = max(resid, np.linalg.norm(A @ x - b) / np.linalg.norm(b))
    ok = sym_ok and eig_min > 0.0 and resid <= 1e-10
    return _result(
        "system-matrices",
        ok,
        f"rd/saddle symmetric={sym_ok}, rd min eigenvalue {eig_min:.3e}, "
        f"worst solve residual {resid:.2e}",
    )


def check_patch_exactness(k: int) -> CheckResult:
    """Each algorithm reproduces a space-time polynomial contained in the spaces."""
    params = example1_params()
    exact = polynomial_exact(params, k)
    mesh = build_uniform_rect(4, 4)
    spaces = build_spaces(mesh, k)
    sources = manufacture_sources(exact, params)
    traction = make_traction(exact, params)
    state0 = initial_state(mesh, spaces, initial_data_from_exact(exact), params)
    worst = 0.0
    for algorithm in ALGORITHMS:
        stepper = Stepper(mesh, spaces, params, sources, 0.25, traction=traction)
        result = stepper.run(algorithm, state0, tau=1.0)
        errs = error_report(result.state, exact, mesh, spaces).as_tuple()
        worst = max(worst, max(errs))
    return _result(
        f"patch-exactness-k{k}",
        worst <= 1e-9,
        f"max error {worst:.2e} over all algorithms and fields",
    )


def check_decoupled_equivalence() -> CheckResult:
    """With alpha = beta = 0 every algorithm must match the monolithic solve."""
    base = example1_params()
    params = ModelParams(
        lam=base.lam,
        mu=base.mu,
        alpha=0.0,
        beta=0.0,
        a0=base.a0,
        b0=base.b0,
        c0=base.c0,
        K=base.K,
        Theta=base.Theta,
    )
    stepper, state0, exact, mesh, spaces = _example1_stepper(params=params, strict=False)
    reference = stepper.run("coupled", state0, tau=1.0, record=True).trajectory
    worst = 0.0
    for algorithm in ("alg1", "alg2", "alg3"):
        trajectory = stepper.run(algorithm, state0, tau=1.0, record=True).trajectory
        for state, ref in zip(trajectory, reference):
            for field in ("u", "xi", "p", "T"):
                worst = max(
                    worst, np.abs(getattr(state, field) - getattr(ref, field)).max()
                )
    return _result(
        "decoupled-equivalence",
        worst <= 1e-10,
        f"max coefficient deviation from monolithic {worst:.2e} at any level "
        "with zero coupling",
    )


def check_lag_bookkeeping() -> CheckResult:
    """The lagged algorithms read exactly the advertised volumetric-stress history.

    Replays every recorded alg2 level through the block solver and checks the
    stored xi history; NaN-poisons the final alg3 elasticity output to prove
    the pressure-temperature block never reads it within a level.
    """
    stepper, state0, _, _, _ = _example1_stepper(dt=0.2)
    run2 = stepper.run("alg2", state0, tau=1.0, record=True)
    traj = run2.trajectory
    history_ok = all(
        np.array_equal(traj[i].xi_prev, traj[i - 1].xi) for i in range(1, len(traj))
    )
    replay_ok = True
    for i in range(2, len(traj)):
        prev = traj[i - 1]
        p_new, T_new = stepper.reaction_diffusion_substep(
            prev.p, prev.T, prev.xi - prev.xi_prev, traj[i].t
        )
        replay_ok &= np.array_equal(p_new, traj[i].p) and np.array_equal(T_new, traj[i].T)

    clean = stepper.run("alg3", state0, tau=1.0, workers=2).state
    poisoned = stepper.run(
        "alg3", state0, tau=1.0, workers=2, poison_final_elasticity=True
    ).state
    poison_ok = (
        np.array_equal(clean.p, poisoned.p)
        and np.array_equal(clean.T, poisoned.T)
        and np.isnan(poisoned.u).all()
        and np.isnan(poisoned.xi).all()
    )
    ok = history_ok and replay_ok and poison_ok
    return _result(
        "lag-bookkeeping",
        ok,
        f"xi history {history_ok}, level replay {replay_ok}, "
        f"parallel independence under poisoning {poison_ok}",
    )


def check_degenerate_storage() -> CheckResult:
    """a0 = b0 = c0 = 0 must fail strict validation but run in permissive mode."""
    params = example1_params(storage=(0.0, 0.0, 0.0))
    try:
        params.validate(strict=True)
        return CheckResult(
            "degenerate-storage", "FAIL", "strict validation accepted a0=b0=c0=0"
        )
    except AssumptionError:
        pass
    warnings = params.validate(strict=False)
    if not warnings:
        return CheckResult(
            "degenerate-storage", "FAIL", "permissive validation returned no warnings"
        )
    stepper, state0, _, _, _ = _example1_stepper(params=params, strict=False)
    state = stepper.run("alg1", state0, tau=1.0).state
    finite = all(np.isfinite(getattr(state, f)).all() for f in ("u", "xi", "p", "T"))
    if not finite:
        return CheckResult(
            "degenerate-storage", "FAIL", "permissive run produced non-finite fields"
        )
    return CheckResult(
        "degenerate-storage",
        "WARN",
        f"accepted with warnings: {'; '.join(warnings)}",
    )


def run_all() -> list[CheckResult]:
    """Execute the whole battery in a stable order."""
    return [
        check_quadrature_exactness(),
        check_p1_assembly_oracles(),
        check_traction_divergence_identity(),
        check_rd_coefficient_spd(),
        check_system_matrices(),
        check_patch_exactness(2),
        check_patch_exactness(3),
        check_decoupled_equivalence(),
        check_lag_bookkeeping(),
        check_degenerate_storage(),
    ]

"""Error norms, observed rates, convergence studies, benchmark plumbing."""

import math

import numpy as np

from thermoporo.analysis import (
    benchmark,
    convergence_study,
    error_report,
    observed_rate,
    state_difference_norms,
)
from thermoporo.discretization import build_spaces, interpolate
from thermoporo.mesh import build_uniform_rect
from thermoporo.model import (
    example1_exact,
    example1_params,
    initial_data_from_exact,
    initial_state,
    polynomial_exact,
)
from thermoporo.steppers import State


def test_observed_rate_matches_published_rounding():
    # the printed two-decimal rates follow log2(coarse/fine)
    rate = observed_rate(5.29628e-01, 1.45381e-01, 2.0)
    assert abs(rate - math.log2(5.29628e-01 / 1.45381e-01)) < 1e-12
    assert round(rate, 2) == 1.87
    assert observed_rate(1.0, 0.25, 2.0) == 2.0
    assert observed_rate(0.0, 1.0, 2.0) == 0.0
    assert observed_rate(1.0, 0.0, 2.0) == 0.0


def test_error_report_is_exact_on_interpolated_polynomials():
    params = example1_params()
    exact = polynomial_exact(params, 2)
    mesh = build_uniform_rect(4, 4)
    spaces = build_spaces(mesh, 2)
    state = initial_state(mesh, spaces, initial_data_from_exact(exact), params)
    report = error_report(state, exact, mesh, spaces)
    assert max(report.as_tuple()) < 1e-12


def test_error_report_quadrature_stability():
    params = example1_params()
    exact = example1_exact(params)
    mesh = build_uniform_rect(4, 4)
    spaces = build_spaces(mesh, 2)
    state = initial_state(mesh, spaces, initial_data_from_exact(exact), params)
    coarse = error_report(state, exact, mesh, spaces, exactness=8)
    fine = error_report(state, exact, mesh, spaces, exactness=10)
    for a, b in zip(coarse.as_tuple(), fine.as_tuple()):
        # trig integrands are not integrated exactly by either rule; the
        # reported norms must still agree far below discretization error
        assert abs(a - b) <= 1e-6 * max(1.0, abs(b))


def test_state_difference_norms_closed_forms():
    params = example1_params()
    mesh = build_uniform_rect(5, 5)
    spaces = build_spaces(mesh, 2)
    nv = spaces.V.nscalar
    xv, yv = spaces.V.dof_coords[:nv, 0], spaces.V.dof_coords[:nv, 1]
    xq, yq = spaces.Q.dof_coords[:, 0], spaces.Q.dof_coords[:, 1]
    xw = spaces.W.dof_coords[:, 0]

    def zeros_state():
        return State(
            t=0.0,
            u=np.zeros(spaces.V.ndof),
            xi=np.zeros(spaces.Q.ndof),
            p=np.zeros(spaces.W.ndof),
            T=np.zeros(spaces.W.ndof),
            xi_prev=np.zeros(spaces.Q.ndof),
        )

    a = zeros_state()
    b = zeros_state()
    same = state_difference_norms(a, b, mesh, spaces)
    assert max(same.as_tuple()) == 0.0

    # u differs by (0.7 x (1-x), 0), xi by 2x - y, p by x, T by -y;
    # all lie in the spaces, so the interpolants are exact
    b.u[:nv] = 0.7 * xv * (1.0 - xv)
    b.xi[:] = 2.0 * xq - yq
    b.p[:] = xw
    b.T[:] = -spaces.W.dof_coords[:, 1]
    diff = state_difference_norms(a, b, mesh, spaces)
    assert abs(diff.u_H1 - math.sqrt(0.49 * (1.0 / 30.0 + 1.0 / 3.0))) < 1e-12
    assert abs(diff.xi_L2 - math.sqrt(4.0 / 3.0 - 1.0 + 1.0 / 3.0)) < 1e-12
    assert abs(diff.p_H1 - math.sqrt(1.0 / 3.0 + 1.0)) < 1e-12
    assert abs(diff.T_H1 - math.sqrt(1.0 / 3.0 + 1.0)) < 1e-12


def test_convergence_study_rates_and_layout():
    params = example1_params()
    exact = example1_exact(params)
    rows = convergence_study([(4, 0.25), (8, 0.0625)], "alg1", 2, params, exact)
    assert [row.n for row in rows] == [4, 8]
    assert rows[0].rates == (0.0, 0.0, 0.0, 0.0)
    assert rows[0].h == 0.25 and rows[1].dt == 0.0625
    assert rows[1].algorithm == "alg1"
    expect = observed_rate(rows[0].errors.u_H1, rows[1].errors.u_H1, 2.0)
    assert abs(rows[1].rates[0] - expect) < 1e-12
    # errors genuinely shrink under refinement
    for i in range(4):
        assert rows[1].errors.as_tuple()[i] < rows[0].errors.as_tuple()[i]


def test_convergence_study_fixed_mesh_uses_dt_ratio():
    params = example1_params()
    exact = example1_exact(params)
    rows = convergence_study([(4, 0.5), (4, 0.25)], "alg2", 2, params, exact)
    expect = observed_rate(rows[0].errors.u_H1, rows[1].errors.u_H1, 2.0)
    assert abs(rows[1].rates[0] - expect) < 1e-12


def test_benchmark_errors_match_convergence_run():
    params = example1_params()
    exact = example1_exact(params)
    reports = benchmark(4, 0.25, 2, params, exact, reps=2, workers=2)
    assert [r.algorithm for r in reports] == ["coupled", "alg1", "alg2", "alg3"]
    for rep in reports:
        assert rep.seconds > 0.0
        assert rep.timings["total"] >= 0.0
        row = convergence_study([(4, 0.25)], rep.algorithm, 2, params, exact)[0]
        for got, want in zip(rep.errors.as_tuple(), row.errors.as_tuple()):
            assert abs(got - want) <= 1e-14 * max(1.0, want)

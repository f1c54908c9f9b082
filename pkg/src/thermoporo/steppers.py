"""Backward-Euler time stepping: monolithic scheme and three decoupled variants.

Every algorithm computes the first time level with the monolithic step.
Afterwards, per level:

* coupled  - solve the full four-field system;
* alg1     - elasticity with the previous (p, T), then the pressure-
             temperature block with the fresh volumetric-stress difference;
* alg2     - pressure-temperature block with the lagged difference
             xi^n - xi^(n-1), then elasticity with the fresh (p, T);
* alg3     - both subproblems on two workers, elasticity using the previous
             (p, T) and the pressure-temperature block using the lagged
             difference; results join at the level boundary.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import (
    apply_dirichlet,
    assemble_forms,
    assemble_load,
    assemble_neumann_traction,
)
from .discretization import Spaces, boundary_dofs
from .linalg import SparseFactor
from .mesh import BoundaryTag, TriMesh

ALGORITHMS = ("coupled", "alg1", "alg2", "alg3")


@dataclass
class State:
    """Coefficient vectors of one time level plus the previous-level xi."""

    t: float
    u: np.ndarray
    xi: np.ndarray
    p: np.ndarray
    T: np.ndarray
    xi_prev: np.ndarray


@dataclass
class RunResult:
    state: State
    timings: dict[str, float]
    steps: int
    trajectory: list[State] | None = None


class Stepper:
    """Discrete operators for one (mesh, spaces, params, dt) configuration.

    Matrices and factorizations are built once on first use and reused at
    every level; only right-hand sides are rebuilt inside the time loop.
    """

    def __init__(
        self,
        mesh: TriMesh,
        spaces: Spaces,
        params,
        sources,
        dt: float,
        traction=None,
        strict: bool = True,
    ):
        self.warnings = params.validate(strict=strict)
        self.mesh = mesh
        self.spaces = spaces
        self.params = params
        self.sources = sources
        self.traction = traction
        self.dt = float(dt)

        self.forms = assemble_forms(mesh, spaces, params)
        self.dirichlet_u = boundary_dofs(spaces.V, mesh, BoundaryTag.DIRICHLET)
        self.dirichlet_w = boundary_dofs(spaces.W, mesh, None)

        f = self.forms
        lam = params.lam
        al, be = params.alpha, params.beta
        # Constant blocks of the pressure-temperature system (16a-d naming:
        # cpp, cpT, cTT are the storage coefficients of the 2x2 block).
        self._cpp = params.c0 + al * al / lam
        self._cpT = al * be / lam - params.b0
        self._cTT = params.a0 + be * be / lam
        # Right-hand-side product matrices, prescaled.
        self._CWxi = (f.M_xip.T).tocsr()  # W rows x Q cols
        self._Mw = f.M_pT

        self._cached: dict[str, SparseFactor] = {}
        self.sizes = {
            "u": spaces.V.ndof,
            "xi": spaces.Q.ndof,
            "w": spaces.W.ndof,
        }

    # ------------------------------------------------------------------ setup

    def _factor(self, name: str) -> SparseFactor:
        if name not in self._cached:
            build = {
                "coupled": self._build_coupled,
                "saddle": self._build_saddle,
                "rd": self._build_rd,
            }[name]
            self._cached[name] = SparseFactor(build(), label=name)
        return self._cached[name]

    def system_matrix(self, name: str) -> sp.csc_matrix:
        """The matrix of one cached system: 'coupled', 'saddle', or 'rd'."""
        return self._factor(name).A

    def _build_coupled(self) -> sp.csr_matrix:
        f = self.forms
        lam = self.params.lam
        al, be = self.params.alpha, self.params.beta
        dt = self.dt
        C = f.M_xip
        A = sp.bmat(
            [
                [f.A_elast, -f.B_div, None, None],
                [-f.B_div.T, -(1.0 / lam) * f.M_xi, (al / lam) * C, (be / lam) * C],
                [
                    None,
                    -(al / lam) * C.T,
                    self._cpp * f.M_p + dt * f.K_p,
                    self._cpT * f.M_pT,
                ],
                [
                    None,
                    -(be / lam) * C.T,
                    self._cpT * f.M_pT,
                    self._cTT * f.M_T + dt * f.K_T,
                ],
            ],
            format="csr",
        )
        nu, nq, nw = self.sizes["u"], self.sizes["xi"], self.sizes["w"]
        constrained = np.concatenate(
            [
                self.dirichlet_u,
                nu + nq + self.dirichlet_w,
                nu + nq + nw + self.dirichlet_w,
            ]
        )
        A, _ = apply_dirichlet(A, None, constrained)
        return A

    def _build_saddle(self) -> sp.csr_matrix:
        f = self.forms
        lam = self.params.lam
        A = sp.bmat(
            [[f.A_elast, -f.B_div], [-f.B_div.T, -(1.0 / lam) * f.M_xi]], format="csr"
        )
        A, _ = apply_dirichlet(A, None, self.dirichlet_u)
        return A

    def _build_rd(self) -> sp.csr_matrix:
        f = self.forms
        dt = self.dt
        A = sp.bmat(
            [
                [self._cpp * f.M_p + dt * f.K_p, self._cpT * f.M_pT],
                [self._cpT * f.M_pT, self._cTT * f.M_T + dt * f.K_T],
            ],
            format="csr",
        )
        nw = self.sizes["w"]
        constrained = np.concatenate([self.dirichlet_w, nw + self.dirichlet_w])
        A, _ = apply_dirichlet(A, None, constrained)
        return A

    # ------------------------------------------------------------------ loads

    def _load_f(self, t: float) -> np.ndarray:
        out = assemble_load(self.mesh, self.spaces.V, self.sources.f, t)
        if self.traction is not None:
            out = out + assemble_neumann_traction(
                self.mesh, self.spaces.V, self.traction, t
            )
        out[self.dirichlet_u] = 0.0
        return out

    def _load_g(self, t: float) -> np.ndarray:
        return assemble_load(self.mesh, self.spaces.W, self.sources.g, t)

    def _load_h(self, t: float) -> np.ndarray:
        return assemble_load(self.mesh, self.spaces.W, self.sources.Hs, t)

    # ------------------------------------------------------------------ steps

    def coupled_step(self, state: State) -> State:
        """One monolithic backward-Euler step from ``state``."""
        t_new = state.t + self.dt
        al, be, lam = self.params.alpha, self.params.beta, self.params.lam
        nq = self.sizes["xi"]
        Mp, MT = self._Mw @ state.p, self._Mw @ state.T
        Cxi = self._CWxi @ state.xi
        rhs_p = (
            self._cpp * Mp
            + self._cpT * MT
            - (al / lam) * Cxi
            + self.dt * self._load_g(t_new)
        )
        rhs_T = (
            self._cpT * Mp
            + self._cTT * MT
            - (be / lam) * Cxi
            + self.dt * self._load_h(t_new)
        )
        rhs_p[self.dirichlet_w] = 0.0
        rhs_T[self.dirichlet_w] = 0.0
        rhs = np.concatenate([self._load_f(t_new), np.zeros(nq), rhs_p, rhs_T])
        x = self._factor("coupled").solve(rhs)
        nu = self.sizes["u"]
        nw = self.sizes["w"]
        return State(
            t=t_new,
            u=x[:nu],
            xi=x[nu : nu + nq],
            p=x[nu + nq : nu + nq + nw],
            T=x[nu + nq + nw :],
            xi_prev=state.xi,
        )

    def initial_step(self, state0: State) -> State:
        """The shared first level: one monolithic step from the initial state."""
        return self.coupled_step(state0)

    def elasticity_substep(self, p_in: np.ndarray, T_in: np.ndarray, t_new: float):
        """Solve the mixed elasticity block given pressure/temperature data.

        The constitutive row is stored negated so the saddle matrix is
        symmetric; the solution is unchanged.
        """
        al, be, lam = self.params.alpha, self.params.beta, self.params.lam
        rhs2 = -(al / lam) * (self.forms.M_xip @ p_in) - (be / lam) * (
            self.forms.M_xiT @ T_in
        )
        rhs = np.concatenate([self._load_f(t_new), rhs2])
        x = self._factor("saddle").solve(rhs)
        nu = self.sizes["u"]
        return x[:nu], x[nu:]

    def reaction_diffusion_substep(
        self,
        p_n: np.ndarray,
        T_n: np.ndarray,
        xi_diff: np.ndarray,
        t_new: float,
    ):
        """Solve the pressure-temperature block given a volumetric-stress difference.

        ``xi_diff`` is xi^(n+1) - xi^n for the elasticity-first algorithm and
        xi^n - xi^(n-1) for the lagged ones; the caller chooses.
        """
        al, be, lam = self.params.alpha, self.params.beta, self.params.lam
        lag = self._CWxi @ xi_diff
        Mp, MT = self._Mw @ p_n, self._Mw @ T_n
        rhs_p = (
            self._cpp * Mp
            + self._cpT * MT
            + (al / lam) * lag
            + self.dt * self._load_g(t_new)
        )
        rhs_T = (
            self._cpT * Mp
            + self._cTT * MT
            + (be / lam) * lag
            + self.dt * self._load_h(t_new)
        )
        rhs_p[self.dirichlet_w] = 0.0
        rhs_T[self.dirichlet_w] = 0.0
        x = self._factor("rd").solve(np.concatenate([rhs_p, rhs_T]))
        nw = self.sizes["w"]
        return x[:nw], x[nw:]

    # -------------------------------------------------------------------- run

    def run(
        self,
        algorithm: str,
        state0: State,
        tau: float,
        workers: int = 1,
        record: bool = False,
        poison_final_elasticity: bool = False,
    ) -> RunResult:
        """Advance from ``state0`` to time ``tau``.

        ``poison_final_elasticity`` (alg3 only) overwrites the last level's
        elasticity output with NaNs after the join; the pressure-temperature
        result must be unaffected because it never reads that output within
        the level.
        """
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        nsteps = round(tau / self.dt)
        if abs(nsteps * self.dt - tau) > 1e-9 * max(1.0, tau) or nsteps < 1:
            raise ValueError(f"tau = {tau!r} is not a multiple of dt = {self.dt!r}")

        timings: dict[str, float] = {
            "setup": 0.0,
            "loads_and_rhs": 0.0,
            "solve_coupled": 0.0,
            "solve_elasticity": 0.0,
            "solve_rd": 0.0,
        }
        t_total = time.perf_counter()

        t0 = time.perf_counter()
        if algorithm == "coupled":
            self._factor("coupled")
        else:
            self._factor("coupled")  # shared monolithic initial step
            self._factor("saddle")
            self._factor("rd")
        timings["setup"] = time.perf_counter() - t0

        trajectory: list[State] | None = [state0] if record else None
        pool = ThreadPoolExecutor(max_workers=2) if (algorithm == "alg3" and workers >= 2) else None
        try:
            state = state0
            for level in range(1, nsteps + 1):
                t_new = state0.t + level * self.dt
                t_lvl = time.perf_counter()
                try:
                    if algorithm == "coupled" or level == 1:
                        state = self.coupled_step(state)
                        timings["solve_coupled"] += time.perf_counter() - t_lvl
                    elif algorithm == "alg1":
                        u_new, xi_new = self.elasticity_substep(state.p, state.T, t_new)
                        t_mid = time.perf_counter()
                        timings["solve_elasticity"] += t_mid - t_lvl
                        p_new, T_new = self.reaction_diffusion_substep(
                            state.p, state.T, xi_new - state.xi, t_new
                        )
                        timings["solve_rd"] += time.perf_counter() - t_mid
                        state = State(t_new, u_new, xi_new, p_new, T_new, state.xi)
                    elif algorithm == "alg2":
                        p_new, T_new = self.reaction_diffusion_substep(
                            state.p, state.T, state.xi - state.xi_prev, t_new
                        )
                        t_mid = time.perf_counter()
                        timings["solve_rd"] += t_mid - t_lvl
                        u_new, xi_new = self.elasticity_substep(p_new, T_new, t_new)
                        timings["solve_elasticity"] += time.perf_counter() - t_mid
                        state = State(t_new, u_new, xi_new, p_new, T_new, state.xi)
                    else:  # alg3
                        xi_diff = state.xi - state.xi_prev
                        if pool is not None:
                            fut_el = pool.submit(
                                self.elasticity_substep, state.p, state.T, t_new
                            )
                            fut_rd = pool.submit(
                                self.reaction_diffusion_substep,
                                state.p,
                                state.T,
                                xi_diff,
                                t_new,
                            )
                            u_new, xi_new = fut_el.result()
                            p_new, T_new = fut_rd.result()
                        else:
                            u_new, xi_new = self.elasticity_substep(
                                state.p, state.T, t_new
                            )
                            p_new, T_new = self.reaction_diffusion_substep(
                                state.p, state.T, xi_diff, t_new
                            )
                        if poison_final_elasticity and level == nsteps:
                            u_new = np.full_like(u_new, np.nan)
                            xi_new = np.full_like(xi_new, np.nan)
                        timings["solve_elasticity"] += time.perf_counter() - t_lvl
                        state = State(t_new, u_new, xi_new, p_new, T_new, state.xi)
                except Exception as exc:
                    raise RuntimeError(
                        f"{algorithm}: step to level {level} (t = {t_new:g}) failed"
                    ) from exc
                if record:
                    trajectory.append(state)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

        timings["total"] = time.perf_counter() - t_total
        return RunResult(state=state, timings=timings, steps=nsteps, trajectory=trajectory)

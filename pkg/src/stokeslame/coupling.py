"""Partitioned Dirichlet-Neumann coupling and its fixed-point driver.

The composed map sends an interface displacement history through the solid
Dirichlet-to-Neumann operator and feeds the recovered traction loads to the
(regularized) fluid Neumann problem, whose accumulated interface displacement
closes the loop.  The driver iterates u <- (1-omega) u + omega * rho * T(u)
with continuation over a decreasing regularization schedule, warm-starting
each level from the previous fixed point.

A single traction-load convention is used end to end: the loads recovered
from the solid residual are applied to the fluid verbatim, so no sign flip
appears anywhere in the composition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import (ConfigError, IterationFailureError, NumericalFailureError,
                     PreconditionError)
from .fem import Discretization, interface_load_rows
from .fluid import FluidModel, FluidStateSeries, accumulate_displacement
from .geometry import TimeGrid
from .laws import FluidParams, SolidParams, eval_law
from .norms import InterfaceGram, build_gram, dual_half_norm, trace_l2_norm, x_norm_value
from .solid import SolidModel, SolidStateSeries
from .traces import DISPLACEMENT, TraceSeries, zero_trace


@dataclass(frozen=True)
class CouplingConfig:
    """Continuation schedule and fixed-point controls."""

    eps_schedule: Sequence[float] = (1e-2,)
    omega: float = 0.7
    rho: float = 1.0
    tol_rel: float = 1e-8
    tol_abs: float = 1e-12
    max_outer: int = 50

    def __post_init__(self):
        sched = tuple(float(e) for e in self.eps_schedule)
        if not sched or any(e < 0 for e in sched):
            raise ConfigError("eps_schedule must be nonempty and nonnegative")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("eps_schedule must be strictly decreasing")
        object.__setattr__(self, "eps_schedule", sched)
        if not 0.0 < self.omega <= 1.0:
            raise ConfigError("omega must lie in (0, 1]")
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError("rho must lie in (0, 1]")
        if self.tol_rel < 0 or self.tol_abs < 0 or self.tol_rel + self.tol_abs == 0:
            raise ConfigError("tolerances must be nonnegative and not both zero")
        if self.max_outer < 1:
            raise ConfigError("max_outer must be at least 1")


@dataclass
class HistoryRecord:
    eps: float
    k: int
    update_norm_x: float
    contraction_factor: float   # nan for the first iterate at each eps
    picard_total: int

    def csv_row(self) -> str:
        return (f"{self.eps!r},{self.k},{self.update_norm_x!r},"
                f"{self.contraction_factor!r},{self.picard_total}")


@dataclass
class CoupledSolution:
    u_star: TraceSeries
    solid_state: SolidStateSeries
    fluid_state: FluidStateSeries
    history: List[HistoryRecord]
    displacement_gap: float
    traction_gap: float
    u_input_final: TraceSeries = None
    u_image_final: TraceSeries = None
    traction_final: TraceSeries = None


class CoupledProblem:
    """Shared discretization, parameters and cached factorizations."""

    def __init__(self, disc: Discretization, solid_params: SolidParams,
                 fluid_params: FluidParams, grid: TimeGrid,
                 fluid_body_loads: Optional[np.ndarray] = None,
                 v0: Optional[np.ndarray] = None, newton: bool = False,
                 fluid_tol: float = 1e-10, fluid_max_it: int = 200):
        self.disc = disc
        self.grid = grid
        self.solid_params = solid_params
        self.fluid_params = fluid_params
        self.fluid_body_loads = fluid_body_loads
        self.v0 = v0
        self.newton = newton
        self.fluid_tol = fluid_tol
        self.fluid_max_it = fluid_max_it
        self.solid_model = SolidModel(disc, solid_params, grid)
        self.gram: InterfaceGram = build_gram(disc.iface)
        self._fluid_models: Dict[float, FluidModel] = {}

    def fluid_model(self, eps: float) -> FluidModel:
        if eps not in self._fluid_models:
            self._fluid_models[eps] = FluidModel(
                self.disc, self.fluid_params, self.grid, eps=eps,
                newton=self.newton)
        return self._fluid_models[eps]

    def zero_displacement(self) -> TraceSeries:
        return zero_trace(self.grid.n_steps, self.disc.iface.n_nodes,
                          role=DISPLACEMENT)


@dataclass
class ApplyResult:
    displacement: TraceSeries
    traction: TraceSeries
    solid_state: SolidStateSeries
    fluid_state: FluidStateSeries
    picard_total: int


def apply_teps(problem: CoupledProblem, u_s: TraceSeries, eps: float) -> ApplyResult:
    """One sweep of the composed map: displacement -> traction -> displacement."""
    solid_state = problem.solid_model.solve_dirichlet(u_s)
    g = problem.solid_model.recover_traction(solid_state)
    fmodel = problem.fluid_model(eps)
    fluid_state = fmodel.solve_series(
        g_f=g, body_loads=problem.fluid_body_loads, v0=problem.v0,
        tol=problem.fluid_tol, max_it=problem.fluid_max_it)
    disp = accumulate_displacement(fmodel, fluid_state)
    return ApplyResult(displacement=disp, traction=g, solid_state=solid_state,
                       fluid_state=fluid_state,
                       picard_total=int(sum(fluid_state.iterations)))


def operator_teps(problem: CoupledProblem, u_s: TraceSeries, eps: float) -> TraceSeries:
    """The displacement-to-displacement coupling map for one regularization level."""
    return apply_teps(problem, u_s, eps).displacement


def fixed_point_solve(problem: CoupledProblem, config: CouplingConfig,
                      initial: Optional[TraceSeries] = None) -> CoupledSolution:
    """Damped fixed-point iteration with regularization continuation.

    At each level eps the iterate is u <- (1-omega) u + omega * rho * T_eps(u),
    stopped when the update drops below tol_abs + tol_rel * ||u||_X; the next
    level warm-starts from the converged iterate.
    """
    gram, grid = problem.gram, problem.grid
    u = initial.copy() if initial is not None else problem.zero_displacement()
    if np.any(u.values[0] != 0.0):
        raise PreconditionError("initial iterate must vanish at t = 0")

    history: List[HistoryRecord] = []
    last: Optional[ApplyResult] = None
    u_in = u
    for eps in config.eps_schedule:
        prev_update = np.nan
        converged = False
        for k in range(1, config.max_outer + 1):
            u_in = u
            res = apply_teps(problem, u_in, eps)
            last = res
            u_next = ((1.0 - config.omega) * u_in
                      + (config.omega * config.rho) * res.displacement)
            upd = x_norm_value(gram, grid, u_next - u_in)
            if not np.isfinite(upd):
                raise NumericalFailureError("non-finite fixed-point update norm")
            factor = upd / prev_update if prev_update > 0 else np.nan
            history.append(HistoryRecord(eps=eps, k=k, update_norm_x=upd,
                                         contraction_factor=float(factor),
                                         picard_total=res.picard_total))
            base = x_norm_value(gram, grid, u_in)
            u = u_next
            prev_update = upd
            if upd <= config.tol_abs + config.tol_rel * base:
                converged = True
                break
        if not converged:
            raise IterationFailureError(
                f"no convergence at eps = {eps} within {config.max_outer} "
                "outer iterations", history=history)

    image = last.displacement.copy()
    image.values[:] *= config.rho
    disp_gap = _displacement_gap(gram, u_in, image)
    trac_gap = _traction_gap(problem, config.eps_schedule[-1], last)
    return CoupledSolution(
        u_star=u, solid_state=last.solid_state, fluid_state=last.fluid_state,
        history=history, displacement_gap=disp_gap, traction_gap=trac_gap,
        u_input_final=u_in, u_image_final=image, traction_final=last.traction)


def _displacement_gap(gram: InterfaceGram, u_s: TraceSeries,
                      u_f: TraceSeries) -> float:
    diff = u_f - u_s
    return float(max(trace_l2_norm(gram, diff.values[n])
                     for n in range(diff.n_steps + 1)))


def fluid_consistent_traction(model: FluidModel, state: FluidStateSeries,
                              body_loads: Optional[np.ndarray] = None) -> TraceSeries:
    """Physical-stress consistent flux on the interface from a fluid series.

    Pairs the discrete momentum residual without the regularization term and
    without interface loads against the interface basis; at a converged step
    this recovers the applied traction load up to eps * R v and solver
    tolerance.
    """
    from .traces import TRACTION
    grid = model.grid
    n1 = grid.n_steps + 1
    dt = grid.dt
    out = np.zeros((n1, model.disc.iface.n_nodes, 2))
    for n in range(1, n1):
        v, p = state.v[n], state.p[n]
        r = ((1.0 / dt) * (model.mass_v @ (v - state.v[n - 1]))
             + model.nonlinear_load(grid.times[n], v)
             + model.a_visc @ v - model.b.T @ p)
        if body_loads is not None:
            r = r - body_loads[n]
        rows = interface_load_rows(model.disc.iface, "fluid", r)
        out[n, 1:-1] = rows[1:-1]
    return TraceSeries(out, role=TRACTION)


def _traction_gap(problem: CoupledProblem, eps: float, res: ApplyResult) -> float:
    fmodel = problem.fluid_model(eps)
    g_fluid = fluid_consistent_traction(fmodel, res.fluid_state,
                                        problem.fluid_body_loads)
    diff = g_fluid - res.traction
    gram, dt = problem.gram, problem.grid.dt
    return float(np.sqrt(sum(
        dt * dual_half_norm(gram, diff.values[n][1:-1]) ** 2
        for n in range(1, diff.n_steps + 1))))


def coupling_residuals(solution: CoupledSolution) -> tuple[float, float]:
    """Interface-condition residuals of a converged solution."""
    return solution.displacement_gap, solution.traction_gap


@dataclass
class StudyRow:
    eps: float
    u_gap_x: float        # ||u*_eps - u*_ref||_X against the last level
    grad_gap: float       # ||grad v_eps - grad v_ref||_{L2(0,T;L2)}
    a_gap: float          # same distance through the diffusion law
    reg_energy: float     # eps * sum_n dt * v_n^T R v_n

    def csv_row(self) -> str:
        return (f"{self.eps!r},{self.u_gap_x!r},{self.grad_gap!r},"
                f"{self.a_gap!r},{self.reg_energy!r}")


def epsilon_limit_study(problem: CoupledProblem, config: CouplingConfig,
                        eps_list: Sequence[float]) -> List[StudyRow]:
    """Fixed points along a decreasing regularization sequence.

    Runs the continuation over eps_list (warm-started), then tabulates the
    distance of each level's fixed point to the final (smallest-eps) one in
    the trace, gradient and law images, plus the regularization energy.
    """
    eps_list = tuple(float(e) for e in eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])) or not eps_list:
        raise ConfigError("eps list must be nonempty and strictly decreasing")
    gram, grid = problem.gram, problem.grid
    fixed: List[tuple[float, TraceSeries, FluidStateSeries]] = []
    u = problem.zero_displacement()
    for eps in eps_list:
        cfg = CouplingConfig(eps_schedule=(eps,), omega=config.omega,
                             rho=config.rho, tol_rel=config.tol_rel,
                             tol_abs=config.tol_abs, max_outer=config.max_outer)
        sol = fixed_point_solve(problem, cfg, initial=u)
        fixed.append((eps, sol.u_star, sol.fluid_state))
        u = sol.u_star
    ref_u, ref_state = fixed[-1][1], fixed[-1][2]
    space = problem.disc.fluid
    law = problem.fluid_params.law
    dt, times = grid.dt, grid.times
    reg = problem.fluid_model(eps_list[0]).reg

    def grad_series(state):
        return [space.grad_at_qpoints(vn) for vn in state.v]

    ref_grads = grad_series(ref_state)
    rows = []
    from .fem import QUAD_W
    for eps, u_eps, state in fixed:
        grads = grad_series(state)
        g2 = a2 = regE = 0.0
        for n in range(1, grid.n_steps + 1):
            dg = grads[n] - ref_grads[n]
            g2 += dt * float(np.einsum("q,eqcd,eqcd,e->", QUAD_W, dg, dg, space.area))
            da = (eval_law(law, times[n], grads[n])
                  - eval_law(law, times[n], ref_grads[n]))
            a2 += dt * float(np.einsum("q,eqcd,eqcd,e->", QUAD_W, da, da, space.area))
            regE += dt * float(state.v[n] @ (reg @ state.v[n]))
        rows.append(StudyRow(
            eps=eps, u_gap_x=x_norm_value(gram, grid, u_eps - ref_u),
            grad_gap=float(np.sqrt(g2)), a_gap=float(np.sqrt(a2)),
            reg_energy=eps * regE))
    return rows

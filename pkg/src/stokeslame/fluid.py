"""Quasi-linear Stokes flow with interface traction data.

Backward-Euler stepping of the incompressible momentum equation with the
nonlinear diffusion flux a(t, grad v), Taylor-Hood (P2/P1) in space, optional
broken-H2 regularization eps*R, and a damped preconditioned Picard
(Zarantonello) iteration per step.  The preconditioner replaces the law by
its monotonicity constant: P = (1/dt) M + c_m A_grad + A_visc + eps R,
saddle-coupled with the divergence constraint; the damping is tau = c_m/L^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (AssemblyError, NonlinearDivergenceError, NumericalFailureError,
                     ShapeError)
from .fem import Discretization, boundary_p2_nodes, scatter_interface_load, trace_values
from .geometry import FLUID_DIRICHLET, INTERFACE, TimeGrid
from .laws import FluidParams, eval_law, eval_law_jacobian
from .traces import DISPLACEMENT, TRACTION, TraceSeries

DEFAULT_TOL = 1e-10
DEFAULT_MAX_IT = 200


@dataclass
class FluidStateSeries:
    v: np.ndarray                     # (n_steps+1, 2*np2)
    p: np.ndarray                     # (n_steps+1, nv)
    iterations: List[int] = field(default_factory=list)
    final_residuals: List[float] = field(default_factory=list)


class FluidModel:
    """Assembled fluid operators for one mesh/grid/law/epsilon combination."""

    def __init__(self, disc: Discretization, params: FluidParams, grid: TimeGrid,
                 eps: float = 0.0, newton: bool = False):
        if eps < 0:
            raise AssemblyError("regularization strength must be >= 0")
        self.disc = disc
        self.params = params
        self.grid = grid
        self.eps = eps
        self.newton = newton
        space = disc.fluid
        self.space = space
        self.ndof = 2 * space.n_nodes
        self.n_pressure = space.n_vertices

        self.mass_v = space.vector_mass()
        self.a_grad = space.vector_grad_stiffness()
        self.a_visc = space.vector_eps_stiffness()
        self.reg = space.broken_h2()
        self.b = space.divergence_matrix()

        dir_nodes = boundary_p2_nodes(
            space, disc.mesh.fluid_boundary, disc.mesh.fluid_boundary_tags,
            FLUID_DIRICHLET)
        free = np.ones(self.ndof, dtype=bool)
        free[(2 * dir_nodes[:, None] + np.arange(2)).ravel()] = False
        self.free = np.flatnonzero(free)

        law = params.law
        self.tau = law.c_m / law.lip ** 2
        dt = grid.dt
        self.p_vel = ((1.0 / dt) * self.mass_v + law.c_m * self.a_grad
                      + self.a_visc + eps * self.reg).tocsr()
        self._p_ff = self.p_vel[self.free][:, self.free].tocsc()
        b_f = self.b[:, self.free].tocsr()
        self._b_f = b_f
        has_iface = np.any(disc.mesh.fluid_boundary_tags == INTERFACE)
        if not has_iface:
            # pressure is only defined up to a constant: pin the first dof
            pin = sp.csr_matrix(
                (np.ones(1), (np.zeros(1, dtype=int), np.zeros(1, dtype=int))),
                shape=(self.n_pressure, self.n_pressure))
        else:
            pin = sp.csr_matrix((self.n_pressure, self.n_pressure))
        saddle = sp.bmat([[self._p_ff, -b_f.T], [b_f, pin]], format="csc")
        try:
            self._saddle_lu = spla.splu(saddle)
        except RuntimeError as exc:
            raise AssemblyError(f"singular fluid saddle system: {exc}") from exc
        self._nf = self.free.size

    # -- operator evaluation --------------------------------------------

    def nonlinear_load(self, t: float, v: np.ndarray) -> np.ndarray:
        """Assembled form (a(t, grad v), grad phi) as a load vector."""
        grads = self.space.grad_at_qpoints(v)
        flux = eval_law(self.params.law, t, grads)
        return self.space.scatter_flux(flux)

    def momentum_residual(self, t: float, v: np.ndarray, v_prev: np.ndarray,
                          p: np.ndarray, load: np.ndarray) -> np.ndarray:
        dt = self.grid.dt
        out = load - ((1.0 / dt) * (self.mass_v @ (v - v_prev))
                      + self.nonlinear_load(t, v)
                      + self.a_visc @ v + self.eps * (self.reg @ v))
        out += self.b.T @ p
        return out

    def p_norm(self, w_free: np.ndarray) -> float:
        return float(np.sqrt(w_free @ (self._p_ff @ w_free)))

    def _saddle_solve(self, rm_free: np.ndarray, rc: np.ndarray):
        sol = self._saddle_lu.solve(np.concatenate([rm_free, rc]))
        return sol[:self._nf], sol[self._nf:]

    # -- per-step solver -------------------------------------------------

    def solve_step(self, t: float, v_prev: np.ndarray, load: np.ndarray,
                   tol: float = DEFAULT_TOL, max_it: int = DEFAULT_MAX_IT,
                   residual_history: Optional[list] = None):
        """Backward-Euler step: returns (v, p, iterations).

        Iterates v <- v + tau * P^{-1} residual on the saddle system until the
        P-norm of the preconditioned residual drops below tol.
        """
        if tol <= 0:
            raise AssemblyError("tolerance must be positive")
        v = v_prev.copy()
        p = np.zeros(self.n_pressure)
        eta = np.inf
        for k in range(1, max_it + 1):
            rm = self.momentum_residual(t, v, v_prev, p, load)
            rc = -(self.b @ v)
            dv, dp = self._saddle_solve(rm[self.free], rc)
            eta = self.p_norm(dv)
            if residual_history is not None:
                residual_history.append(eta)
            if not np.isfinite(eta):
                raise NumericalFailureError("non-finite residual in fluid step")
            if eta <= tol:
                return v, p, k
            if self.newton:
                accepted = self._newton_update(t, v, p, v_prev, load, eta)
                if accepted is not None:
                    v, p = accepted
                    continue
            v = v.copy()
            v[self.free] += self.tau * dv
            p = p + self.tau * dp
        raise NonlinearDivergenceError(
            f"monotone step iteration exceeded {max_it} iterations "
            f"(last residual {eta:.3e})", last_residual=eta)

    def _newton_update(self, t, v, p, v_prev, load, eta):
        """Try a full Newton step; return updated (v, p) or None on non-decrease."""
        grads = self.space.grad_at_qpoints(v)
        jac = eval_law_jacobian(self.params.law, t, grads)
        jmat = self._assemble_jacobian(jac)
        op = ((1.0 / self.grid.dt) * self.mass_v + self.a_visc
              + self.eps * self.reg + jmat)
        op_ff = op.tocsr()[self.free][:, self.free].tocsc()
        saddle = sp.bmat([[op_ff, -self._b_f.T],
                          [self._b_f, sp.csr_matrix((self.n_pressure,) * 2)]],
                         format="csc")
        try:
            lu = spla.splu(saddle)
        except RuntimeError:
            return None
        rm = self.momentum_residual(t, v, v_prev, p, load)
        rc = -(self.b @ v)
        sol = lu.solve(np.concatenate([rm[self.free], rc]))
        v_new = v.copy()
        v_new[self.free] += sol[:self._nf]
        p_new = p + sol[self._nf:]
        rm_new = self.momentum_residual(t, v_new, v_prev, p_new, load)
        dv, _ = self._saddle_solve(rm_new[self.free], -(self.b @ v_new))
        if self.p_norm(dv) < eta:
            return v_new, p_new
        return None

    def _assemble_jacobian(self, jac: np.ndarray) -> sp.csr_matrix:
        """Assemble (J_a(grad v) grad u, grad phi); jac is (nt, nq, 2, 2, 2)."""
        space = self.space
        from .fem import QUAD_W
        # jac[e,q,c,a,b]: component c couples only with itself
        nt = space.tris.shape[0]
        full = np.zeros((nt, 12, 12))
        for c in range(2):
            blk = np.einsum("q,eqab,eqia,eqjb->eij", QUAD_W, jac[:, :, c],
                            space.grads, space.grads)
            full[:, c::2, c::2] = blk * space.area[:, None, None]
        return space._accumulate(full, block=2)

    # -- sweeps ----------------------------------------------------------

    def solve_series(self, g_f: Optional[TraceSeries] = None, body_loads=None,
                     v0: Optional[np.ndarray] = None, tol: float = DEFAULT_TOL,
                     max_it: int = DEFAULT_MAX_IT) -> FluidStateSeries:
        """Backward-Euler sweep with per-step Neumann loads from g_f."""
        grid = self.grid
        n1 = grid.n_steps + 1
        if g_f is not None:
            if g_f.role != TRACTION:
                raise ShapeError("fluid interface data must be a traction trace")
            if g_f.n_steps != grid.n_steps:
                raise ShapeError("traction series does not match the time grid")
        if body_loads is None:
            body_loads = np.zeros((n1, self.ndof))
        elif body_loads.shape != (n1, self.ndof):
            raise ShapeError("body load series has the wrong shape")

        v = np.zeros((n1, self.ndof))
        p = np.zeros((n1, self.n_pressure))
        if v0 is not None:
            if v0.shape != (self.ndof,):
                raise ShapeError("initial velocity has the wrong shape")
            v[0] = v0
            v[0, np.setdiff1d(np.arange(self.ndof), self.free)] = 0.0
        state = FluidStateSeries(v=v, p=p)
        times = grid.times
        for n in range(1, n1):
            load = body_loads[n].copy()
            if g_f is not None:
                load += scatter_interface_load(
                    self.disc.iface, "fluid", g_f.values[n], self.ndof)
            hist: List[float] = []
            vn, pn, its = self.solve_step(times[n], v[n - 1], load,
                                          tol=tol, max_it=max_it,
                                          residual_history=hist)
            v[n], p[n] = vn, pn
            state.iterations.append(its)
            state.final_residuals.append(hist[-1] if hist else 0.0)
        return state

    def divergence_residual(self, state: FluidStateSeries) -> float:
        return float(max(np.linalg.norm(self.b @ vn) for vn in state.v))

    def step_energy_margin(self, state: FluidStateSeries, loads: np.ndarray,
                           n: int) -> float:
        """Slack of the discrete per-step energy inequality at step n >= 1.

        Nonnegative (up to round-off) for every converged step.
        """
        dt = self.grid.dt
        vn, vp = state.v[n], state.v[n - 1]
        lhs = 0.5 * vn @ (self.mass_v @ vn) \
            + dt * self.params.law.c_m * vn @ (self.a_grad @ vn) \
            + dt * vn @ (self.a_visc @ vn)
        rhs = 0.5 * vp @ (self.mass_v @ vp) + dt * float(loads[n] @ vn)
        return rhs - lhs


def accumulate_displacement(model: FluidModel, state: FluidStateSeries) -> TraceSeries:
    """Trapezoid accumulation of the interface velocity trace."""
    iface = model.disc.iface
    n1 = model.grid.n_steps + 1
    dt = model.grid.dt
    out = np.zeros((n1, iface.n_nodes, 2))
    tr_prev = trace_values(iface, "fluid", state.v[0])
    for n in range(1, n1):
        tr = trace_values(iface, "fluid", state.v[n])
        out[n] = out[n - 1] + 0.5 * dt * (tr_prev + tr)
        tr_prev = tr
    return TraceSeries(out, role=DISPLACEMENT)


def operator_t2eps(model: FluidModel, g_f: TraceSeries, body_loads=None,
                   v0=None, tol: float = DEFAULT_TOL,
                   max_it: int = DEFAULT_MAX_IT) -> TraceSeries:
    """Neumann-to-displacement map of the (regularized) fluid problem."""
    state = model.solve_series(g_f=g_f, body_loads=body_loads, v0=v0,
                               tol=tol, max_it=max_it)
    return accumulate_displacement(model, state)

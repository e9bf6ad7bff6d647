"""Lame elastodynamics with interface Dirichlet data and traction recovery.

Realizes the solid half of the coupling: Newmark (beta=1/4, gamma=1/2) time
stepping of M u'' + K u = F with the interface displacement prescribed
strongly, and consistent-flux recovery of the interface traction load by
pairing the discrete residual with interface basis functions lifted by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, PreconditionError, ShapeError
from .fem import (Discretization, boundary_p2_nodes, interface_load_rows)
from .geometry import SOLID_DIRICHLET, TimeGrid
from .laws import SolidParams
from .traces import DISPLACEMENT, TRACTION, TraceSeries

NEWMARK_BETA = 0.25
NEWMARK_GAMMA = 0.5


@dataclass
class SolidStateSeries:
    """Displacement, velocity and acceleration coefficient histories."""

    u: np.ndarray  # (n_steps+1, ndof)
    v: np.ndarray
    a: np.ndarray


class SolidModel:
    """Assembled operators and factorizations for one mesh/grid/parameter set."""

    def __init__(self, disc: Discretization, params: SolidParams, grid: TimeGrid):
        self.disc = disc
        self.params = params
        self.grid = grid
        space = disc.solid
        self.space = space
        self.ndof = 2 * space.n_nodes

        self.mass = space.vector_mass()
        self.stiffness = space.elasticity_stiffness(params.mu, params.lam)

        hom_nodes = boundary_p2_nodes(
            space, disc.mesh.solid_boundary, disc.mesh.solid_boundary_tags,
            SOLID_DIRICHLET)
        iface_nodes = disc.iface.solid_dofs
        self.hom_dofs = np.unique(
            (2 * hom_nodes[:, None] + np.arange(2)).ravel())
        iface_int = iface_nodes[1:-1]
        self.iface_dofs = (2 * iface_int[:, None] + np.arange(2)).ravel()
        constrained = np.unique(np.concatenate([self.hom_dofs, self.iface_dofs]))
        free = np.ones(self.ndof, dtype=bool)
        free[constrained] = False
        self.free = np.flatnonzero(free)
        self.constrained = constrained

        dt = grid.dt
        self._a0 = 1.0 / (NEWMARK_BETA * dt ** 2)
        self._a2 = 1.0 / (NEWMARK_BETA * dt)
        self._a3 = 1.0 / (2.0 * NEWMARK_BETA) - 1.0
        k_eff = (self._a0 * self.mass + self.stiffness).tocsc()
        try:
            self._lu = spla.splu(k_eff[self.free][:, self.free])
            self._mass_lu = spla.splu(self.mass.tocsc()[self.free][:, self.free])
        except RuntimeError as exc:  # singular factorization
            raise AssemblyError(f"singular constrained solid system: {exc}") from exc
        self._k_eff = k_eff

    # -- data handling --------------------------------------------------

    def _apply_trace(self, vec: np.ndarray, g: np.ndarray):
        """Write interface interior trace values (n_if-2, 2) into a dof vector."""
        vec[self.iface_dofs] = g.ravel()

    def check_dirichlet_data(self, u_d: TraceSeries):
        if u_d.role != DISPLACEMENT:
            raise PreconditionError("solid Dirichlet data must be a displacement trace")
        if u_d.n_steps != self.grid.n_steps:
            raise ShapeError("Dirichlet trace does not match the time grid")
        if u_d.n_if != self.disc.iface.n_nodes:
            raise ShapeError("Dirichlet trace does not match the interface")
        vals = u_d.values
        if np.any(vals[0] != 0.0):
            raise PreconditionError("Dirichlet trace must vanish at t = 0")
        if u_d.n_steps >= 4:
            incr = np.max(np.abs(np.diff(vals, axis=0)), axis=(1, 2))
            if incr[0] > 1e-12 + 0.75 * incr.max():
                raise PreconditionError(
                    "Dirichlet trace is incompatible with zero initial velocity")

    # -- time stepping --------------------------------------------------

    def solve_dirichlet(self, u_d: TraceSeries, body_loads=None) -> SolidStateSeries:
        """Newmark advance with the interface trace imposed strongly.

        body_loads: optional (n_steps+1, ndof) array of assembled load vectors.
        """
        self.check_dirichlet_data(u_d)
        grid = self.grid
        n1 = grid.n_steps + 1
        if body_loads is None:
            body_loads = np.zeros((n1, self.ndof))
        elif body_loads.shape != (n1, self.ndof):
            raise ShapeError("body load series has the wrong shape")

        u = np.zeros((n1, self.ndof))
        v = np.zeros((n1, self.ndof))
        a = np.zeros((n1, self.ndof))

        # consistent initial acceleration on free dofs (zero data elsewhere)
        r0 = body_loads[0] - self.stiffness @ u[0]
        a[0, self.free] = self._mass_lu.solve(r0[self.free])

        dt, g = grid.dt, NEWMARK_GAMMA
        for n in range(grid.n_steps):
            un = np.zeros(self.ndof)
            self._apply_trace(un, u_d.values[n + 1][1:-1])
            rhs = body_loads[n + 1] + self.mass @ (
                self._a0 * u[n] + self._a2 * v[n] + self._a3 * a[n])
            rhs_f = rhs[self.free] - (self._k_eff @ un)[self.free]
            un[self.free] = self._lu.solve(rhs_f)
            u[n + 1] = un
            a[n + 1] = self._a0 * (u[n + 1] - u[n]) - self._a2 * v[n] - self._a3 * a[n]
            v[n + 1] = v[n] + dt * ((1.0 - g) * a[n] + g * a[n + 1])
        return SolidStateSeries(u=u, v=v, a=a)

    def residual(self, state: SolidStateSeries, n: int, body_loads=None) -> np.ndarray:
        load = 0.0 if body_loads is None else body_loads[n]
        return self.mass @ state.a[n] + self.stiffness @ state.u[n] - load

    def recover_traction(self, state: SolidStateSeries, body_loads=None) -> TraceSeries:
        """Consistent-flux interface traction loads for every time step.

        Entry g[phi] is the residual paired with the zero-extended lifting of
        the interface basis function phi; endpoints carry no test function and
        stay zero.
        """
        n1 = self.grid.n_steps + 1
        if state.u.shape != (n1, self.ndof):
            raise ShapeError("state series does not match this model")
        if body_loads is not None and body_loads.shape != (n1, self.ndof):
            raise ShapeError("body load series has the wrong shape")
        out = np.zeros((n1, self.disc.iface.n_nodes, 2))
        for n in range(n1):
            r = self.residual(state, n, body_loads)
            rows = interface_load_rows(self.disc.iface, "solid", r)
            out[n, 1:-1] = rows[1:-1]
        return TraceSeries(out, role=TRACTION)

    def energy(self, state: SolidStateSeries, n: int) -> float:
        return 0.5 * state.v[n] @ (self.mass @ state.v[n]) \
            + 0.5 * state.u[n] @ (self.stiffness @ state.u[n])


def operator_t1(model: SolidModel, u_s: TraceSeries) -> TraceSeries:
    """Dirichlet-to-Neumann map: interface displacement to traction loads."""
    state = model.solve_dirichlet(u_s)
    return model.recover_traction(state)

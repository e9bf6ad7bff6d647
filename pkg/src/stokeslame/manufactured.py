"""Manufactured solutions with symbolically derived forcing terms.

Solid: u*(t,x,y) = t^2 w(x,y) with w vanishing on the non-interface solid
boundary; quadratic in time, so the trapezoidal Newmark recurrence commits no
time error and the study isolates the spatial order.

Fluid: v*(t,x,y) = t curl psi with psi chosen so v* vanishes on the fluid
Dirichlet boundary and is divergence-free; linear in time, so backward Euler
is exact in time.  Forcing and the interface traction datum are derived for
the linear diffusion law, matching the discrete stress kappa*grad v + eps(v)
- pi I used by the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sym

from .fem import Discretization, interface_boundary_load
from .geometry import TimeGrid
from .laws import SolidParams
from .traces import DISPLACEMENT, TRACTION, TraceSeries

_T, _X, _Y = sym.symbols("t x y", real=True)


def _lambdify_vec(fx, fy):
    f1 = sym.lambdify((_T, _X, _Y), fx, modules="numpy")
    f2 = sym.lambdify((_T, _X, _Y), fy, modules="numpy")

    def f(t, x, y):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (2,))
        out[..., 0] = np.broadcast_to(f1(t, x, y), x.shape)
        out[..., 1] = np.broadcast_to(f2(t, x, y), x.shape)
        return out

    return f


@dataclass
class SolidMMS:
    exact: Callable          # (t, x, y) -> (..., 2)
    exact_grad: Callable     # (t, x, y) -> (..., 2, 2)
    force: Callable          # (t, x, y) -> (..., 2)

    def body_loads(self, disc: Discretization, grid: TimeGrid) -> np.ndarray:
        space = disc.solid
        out = np.empty((grid.n_steps + 1, 2 * space.n_nodes))
        for n, t in enumerate(grid.times):
            out[n] = space.load_vector(lambda x, y, _t=t: self.force(_t, x, y))
        return out

    def dirichlet_trace(self, disc: Discretization, grid: TimeGrid) -> TraceSeries:
        c = disc.iface.coords
        vals = np.stack([self.exact(t, c[:, 0], c[:, 1]) for t in grid.times])
        return TraceSeries(vals, role=DISPLACEMENT)


def solid_mms(params: SolidParams) -> SolidMMS:
    """u* = t^2 ((y+1) sin(pi x), 0) on the solid strip [0,1] x [-1,0]."""
    mu, lam = params.mu, params.lam
    u = sym.Matrix([_T ** 2 * (_Y + 1) * sym.sin(sym.pi * _X), 0])
    grad = u.jacobian([_X, _Y])
    eps = (grad + grad.T) / 2
    sigma = 2 * mu * eps + lam * sym.trace(eps) * sym.eye(2)
    div_sigma = sym.Matrix([
        sym.diff(sigma[0, 0], _X) + sym.diff(sigma[0, 1], _Y),
        sym.diff(sigma[1, 0], _X) + sym.diff(sigma[1, 1], _Y)])
    force = sym.simplify(u.diff(_T, 2) - div_sigma)

    g11 = sym.lambdify((_T, _X, _Y), grad[0, 0], "numpy")
    g12 = sym.lambdify((_T, _X, _Y), grad[0, 1], "numpy")

    def exact_grad(t, x, y):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (2, 2))
        out[..., 0, 0] = g11(t, x, y)
        out[..., 0, 1] = g12(t, x, y)
        return out

    return SolidMMS(exact=_lambdify_vec(u[0], u[1]), exact_grad=exact_grad,
                    force=_lambdify_vec(force[0], force[1]))


@dataclass
class FluidMMS:
    exact: Callable          # velocity (t, x, y) -> (..., 2)
    exact_grad: Callable     # (t, x, y) -> (..., 2, 2)
    exact_pressure: Callable
    force: Callable
    traction: Callable       # interface datum (t, x, y) -> (..., 2)

    def body_loads(self, disc: Discretization, grid: TimeGrid) -> np.ndarray:
        space = disc.fluid
        out = np.empty((grid.n_steps + 1, 2 * space.n_nodes))
        for n, t in enumerate(grid.times):
            out[n] = space.load_vector(lambda x, y, _t=t: self.force(_t, x, y))
        return out

    def traction_series(self, disc: Discretization, grid: TimeGrid) -> TraceSeries:
        vals = np.stack([
            interface_boundary_load(disc.iface,
                                    lambda x, y, _t=t: self.traction(_t, x, y))
            for t in grid.times])
        return TraceSeries(vals, role=TRACTION)


def fluid_mms(kappa: float = 1.0) -> FluidMMS:
    """Divergence-free v* = t curl psi on the unit square, free on y = 0.

    Built for the linear law a = kappa * grad v: the forcing balances
    dv/dt - div(kappa grad v + eps(v) - pi I) and the traction is the
    conormal trace of the same stress with the outward normal (0, -1).
    """
    psi = _X ** 2 * (1 - _X) ** 2 * (1 - _Y) ** 2
    v = sym.Matrix([sym.diff(psi, _Y), -sym.diff(psi, _X)]) * _T
    pi = _T * _X * _Y
    grad = v.jacobian([_X, _Y])
    eps = (grad + grad.T) / 2
    stress = kappa * grad + eps - pi * sym.eye(2)
    div_stress = sym.Matrix([
        sym.diff(stress[0, 0], _X) + sym.diff(stress[0, 1], _Y),
        sym.diff(stress[1, 0], _X) + sym.diff(stress[1, 1], _Y)])
    force = sym.simplify(v.diff(_T) - div_stress)
    traction = sym.simplify(-stress[:, 1])  # stress . n with n = (0, -1)

    comps = [sym.lambdify((_T, _X, _Y), grad[i, j], "numpy")
             for i in range(2) for j in range(2)]

    def exact_grad(t, x, y):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (2, 2))
        for k, fn in enumerate(comps):
            out[..., k // 2, k % 2] = np.broadcast_to(fn(t, x, y), x.shape)
        return out

    p_fn = sym.lambdify((_T, _X, _Y), pi, "numpy")
    return FluidMMS(
        exact=_lambdify_vec(v[0], v[1]), exact_grad=exact_grad,
        exact_pressure=lambda t, x, y: np.asarray(p_fn(t, x, y), dtype=float),
        force=_lambdify_vec(force[0], force[1]),
        traction=_lambdify_vec(traction[0], traction[1]))

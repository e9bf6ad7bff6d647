import numpy as np
import pytest

from stokeslame.coupling import (CoupledProblem, CouplingConfig, HistoryRecord,
                                 apply_teps, coupling_residuals,
                                 epsilon_limit_study, fixed_point_solve,
                                 fluid_consistent_traction, operator_teps)
from stokeslame.errors import ConfigError, IterationFailureError
from stokeslame.geometry import TimeGrid
from stokeslame.laws import FluidParams, SolidParams, saturating_law
from stokeslame.norms import x_norm_value
from stokeslame.traces import TRACTION


GRID = TimeGrid(1.0, 4)
CFG = CouplingConfig(eps_schedule=(1e-2,), omega=0.7, rho=1.0,
                     tol_rel=1e-7, tol_abs=1e-9, max_outer=40)


def _problem(disc, forced=True):
    params = FluidParams(saturating_law(1.0, 1.0))
    body = None
    if forced:
        f = disc.fluid.load_vector(
            lambda x, y: np.broadcast_to([1.0, 0.0], x.shape + (2,)))
        body = np.tile(f, (GRID.n_steps + 1, 1))
    return CoupledProblem(disc, SolidParams(), params, GRID,
                          fluid_body_loads=body)


@pytest.fixture(scope="module")
def forced(flat_r0):
    return _problem(flat_r0)


@pytest.fixture(scope="module")
def solution(forced):
    return fixed_point_solve(forced, CFG)


def test_config_validation():
    with pytest.raises(ConfigError):
        CouplingConfig(eps_schedule=())
    with pytest.raises(ConfigError):
        CouplingConfig(eps_schedule=(1e-3, 1e-2))
    with pytest.raises(ConfigError):
        CouplingConfig(eps_schedule=(1e-2, 1e-2))
    with pytest.raises(ConfigError):
        CouplingConfig(omega=0.0)
    with pytest.raises(ConfigError):
        CouplingConfig(rho=1.5)
    with pytest.raises(ConfigError):
        CouplingConfig(tol_rel=0.0, tol_abs=0.0)
    with pytest.raises(ConfigError):
        CouplingConfig(max_outer=0)


def test_zero_data_zero_fixed_point(flat_r0):
    problem = _problem(flat_r0, forced=False)
    image = operator_teps(problem, problem.zero_displacement(), 1e-2)
    assert np.all(image.values == 0.0)
    sol = fixed_point_solve(problem, CFG)
    assert len(sol.history) == 1
    assert x_norm_value(problem.gram, GRID, sol.u_star) == 0.0
    assert sol.displacement_gap == 0.0


def test_forced_run_converges(forced, solution):
    last = solution.history[-1]
    base = x_norm_value(forced.gram, GRID, solution.u_star)
    assert last.update_norm_x <= CFG.tol_abs + CFG.tol_rel * base * 1.01
    assert base > 0.0
    # contraction factors settle below 1 after the first iterate
    factors = [h.contraction_factor for h in solution.history[1:]]
    assert all(f < 1.0 for f in factors)
    assert all(h.picard_total > 0 for h in solution.history)


def test_fixed_point_property(forced, solution):
    """Re-applying the damped map at u* moves it by at most the tolerance."""
    u = solution.u_star
    res = apply_teps(forced, u, CFG.eps_schedule[-1])
    image = (1.0 - CFG.omega) * u + (CFG.omega * CFG.rho) * res.displacement
    upd = x_norm_value(forced.gram, GRID, image - u)
    base = x_norm_value(forced.gram, GRID, u)
    # one extra application contracts further: stays within the stop band
    assert upd <= (CFG.tol_abs + CFG.tol_rel * base) * 1.1


def test_coupling_residuals(forced, solution):
    dgap, tgap = coupling_residuals(solution)
    assert dgap == solution.displacement_gap
    assert 0.0 < dgap < 1e-6
    assert np.isfinite(tgap) and tgap > 0.0
    # the fluid consistent flux reproduces the applied traction up to eps*R*v
    fmodel = forced.fluid_model(CFG.eps_schedule[-1])
    g_fluid = fluid_consistent_traction(fmodel, solution.fluid_state,
                                        forced.fluid_body_loads)
    assert g_fluid.role == TRACTION
    diff = g_fluid.values - solution.traction_final.values
    for n in range(1, GRID.n_steps + 1):
        reg_rows = fmodel.eps * (fmodel.reg @ solution.fluid_state.v[n])
        from stokeslame.fem import interface_load_rows
        expect = -interface_load_rows(forced.disc.iface, "fluid", reg_rows)
        # exact only at the true fixed point; allow for the stopping band
        assert np.abs(diff[n, 1:-1] - expect[1:-1]).max() < 1e-6


def test_iteration_failure_carries_history(forced):
    cfg = CouplingConfig(eps_schedule=(1e-2,), omega=0.7, rho=1.0,
                         tol_rel=1e-12, tol_abs=1e-14, max_outer=1)
    with pytest.raises(IterationFailureError) as exc:
        fixed_point_solve(forced, cfg)
    assert len(exc.value.history) == 1
    assert exc.value.history[0].k == 1


def test_determinism(flat_r0):
    a = fixed_point_solve(_problem(flat_r0), CFG)
    b = fixed_point_solve(_problem(flat_r0), CFG)
    assert np.array_equal(a.u_star.values, b.u_star.values)
    for ha, hb in zip(a.history, b.history):
        assert ha.csv_row() == hb.csv_row()


def test_history_csv_row():
    rec = HistoryRecord(eps=1e-2, k=3, update_norm_x=0.5,
                        contraction_factor=0.4, picard_total=12)
    eps, k, upd, fac, pic = rec.csv_row().split(",")
    assert float(eps) == 1e-2 and int(k) == 3
    assert float(upd) == 0.5 and float(fac) == 0.4 and int(pic) == 12


def test_epsilon_limit_study(flat_r0):
    problem = _problem(flat_r0)
    rows = epsilon_limit_study(problem, CFG, (1e-1, 1e-2, 1e-3, 1e-4))
    assert [r.eps for r in rows] == [1e-1, 1e-2, 1e-3, 1e-4]
    ug = [r.u_gap_x for r in rows]
    gg = [r.grad_gap for r in rows]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(ug, ug[1:]))
    assert all(b <= a * (1 + 1e-9) for a, b in zip(gg, gg[1:]))
    assert ug[-1] == 0.0 and gg[-1] == 0.0
    lip = problem.fluid_params.law.lip
    for r in rows:
        assert r.a_gap <= lip * r.grad_gap * (1 + 1e-9)
        assert r.reg_energy >= 0.0
    # the regularization energy eps*(Rv, v) vanishes linearly in eps: three
    # decades of eps drop it by 1e-3, within the study's 10% slack convention
    assert rows[3].reg_energy <= 1.1e-3 * rows[0].reg_energy
    with pytest.raises(ConfigError):
        epsilon_limit_study(problem, CFG, (1e-3, 1e-2))

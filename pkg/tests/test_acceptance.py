"""Acceptance criteria, one test per criterion, one PASS/FAIL line each.

The coupled "contraction replay" configuration (shared by several criteria)
is the damped fixed point of the composed interface map on the unit
horizontal body force at fixed regularization eps = 1e-2, omega = 0.7,
tol_rel = 1e-8, tol_abs = 1e-9.  Expensive runs are shared
through module-scoped fixtures.
"""

import time

import numpy as np
import pytest

from stokeslame.cli import main
from stokeslame.coupling import CoupledProblem, CouplingConfig, fixed_point_solve
from stokeslame.fem import discretize
from stokeslame.fluid import FluidModel
from stokeslame.geometry import TimeGrid, build_geometry
from stokeslame.laws import FluidParams, SolidParams, linear_law, saturating_law
from stokeslame.manufactured import fluid_mms, solid_mms
from stokeslame.norms import build_gram
from stokeslame.solid import SolidModel
from stokeslame.verify import (VerifySetting, measure_lame_constant,
                               measure_t2_constant, poincare_ratio,
                               poincare_sharp_constant, run_full_report,
                               verify_poincare_time)

GRID = TimeGrid(1.0, 8)
REPLAY_TOL_REL = 1e-8
REPLAY_TOL_ABS = 1e-9
FLUID_TOL = 1e-10


def _report(name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    print(f"[PRIMARY] {name}: {tag} {detail}".rstrip())
    return ok


def _forced_problem(preset, amplitude, refinement):
    disc = discretize(build_geometry(preset, amplitude, refinement))
    f = disc.fluid.load_vector(
        lambda x, y: np.broadcast_to([1.0, 0.0], x.shape + (2,)))
    body = np.tile(f, (GRID.n_steps + 1, 1))
    return CoupledProblem(disc, SolidParams(), FluidParams(saturating_law(1.0, 1.0)),
                          GRID, fluid_body_loads=body)


@pytest.fixture(scope="module")
def constants():
    """Measured operator constants on flat-channel r=1 (fixed seeds)."""
    p = _forced_problem("flat-channel", 0.0, 1)
    cs = measure_lame_constant(p.solid_model, p.gram, 10, 0)
    cf = measure_t2_constant(p.fluid_model(1e-2), p.gram, 5, 1)
    return cs, cf


def _replay(preset, amplitude, refinement, rho):
    cfg = CouplingConfig(eps_schedule=(1e-2,), omega=0.7, rho=rho,
                         tol_rel=REPLAY_TOL_REL, tol_abs=REPLAY_TOL_ABS,
                         max_outer=30)
    problem = _forced_problem(preset, amplitude, refinement)
    t0 = time.monotonic()
    sol = fixed_point_solve(problem, cfg)
    return sol, time.monotonic() - t0


@pytest.fixture(scope="module")
def rho(constants):
    cs, cf = constants
    return float(min(1.0, 0.5 / (cs * cf)))


@pytest.fixture(scope="module")
def flat_replays(rho):
    return {r: _replay("flat-channel", 0.0, r, rho) for r in (1, 2)}


@pytest.fixture(scope="module")
def curved_replays(rho):
    return {r: _replay("curved-interface", 0.1, r, rho) for r in (1, 2)}


def _per_level(history):
    levels = {}
    for rec in history:
        levels.setdefault(rec.eps, []).append(rec)
    return levels


def _replay_criteria(solution, elapsed):
    """(converged within 30 per level, factors <= 0.6 for k >= 2, runtime)."""
    levels = _per_level(solution.history)
    iters_ok = all(len(recs) <= 30 for recs in levels.values())
    factors = [rec.contraction_factor for recs in levels.values()
               for rec in recs if rec.k >= 2]
    factor_ok = all(f <= 0.6 for f in factors)
    return iters_ok, factor_ok, max(factors), elapsed


def test_zero_data_fixed_point(tmp_path):
    cfg = tmp_path / "config.ini"
    cfg.write_text("[coupling]\ntol_abs = 1e-9\n")  # defaults: flat r=1, F=0
    out = tmp_path / "out"
    t0 = time.monotonic()
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    elapsed = time.monotonic() - t0
    hist = (out / "history.csv").read_text().splitlines()
    norm = float((out / "norms.csv").read_text().splitlines()[1].split(",")[1])
    ok = code == 0 and len(hist) == 2 and norm <= 1e-12 and elapsed < 10.0
    assert _report("zero-data fixed point", ok,
                   f"(outer={len(hist) - 1}, |u*|_X={norm:.2e}, {elapsed:.1f}s)")


def test_solid_mms_order():
    t0 = time.monotonic()
    grid = TimeGrid(1.0, 4)
    params = SolidParams()
    mms = solid_mms(params)
    errs = []
    for r in (1, 2, 3):
        disc = discretize(build_geometry("flat-channel", 0.0, r))
        model = SolidModel(disc, params, grid)
        state = model.solve_dirichlet(mms.dirichlet_trace(disc, grid),
                                      mms.body_loads(disc, grid))
        errs.append(disc.solid.l2_error(
            state.u[-1], lambda x, y: mms.exact(grid.t_final, x, y)))
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    elapsed = time.monotonic() - t0
    ok = all(o >= 1.9 for o in orders) and elapsed < 120.0
    assert _report("solid MMS order >= 1.9",
                   ok, f"(orders={[round(float(o), 2) for o in orders]}, {elapsed:.0f}s)")


def test_fluid_mms_order():
    t0 = time.monotonic()
    grid = TimeGrid(1.0, 4)
    mms = fluid_mms(1.0)
    errs, div_ok = [], True
    for r in (1, 2, 3):
        disc = discretize(build_geometry("flat-channel", 0.0, r))
        model = FluidModel(disc, FluidParams(linear_law(1.0)), grid, eps=0.0)
        state = model.solve_series(g_f=mms.traction_series(disc, grid),
                                   body_loads=mms.body_loads(disc, grid),
                                   tol=FLUID_TOL)
        tf = grid.t_final
        errs.append(np.hypot(
            disc.fluid.l2_error(state.v[-1], lambda x, y: mms.exact(tf, x, y)),
            disc.fluid.h1_semi_error(state.v[-1],
                                     lambda x, y: mms.exact_grad(tf, x, y))))
        div_ok = div_ok and model.divergence_residual(state) <= 10 * FLUID_TOL
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    elapsed = time.monotonic() - t0
    ok = all(o >= 1.7 for o in orders) and div_ok and elapsed < 180.0
    assert _report("fluid MMS H1 order >= 1.7 + divergence",
                   ok, f"(orders={[round(float(o), 2) for o in orders]}, "
                       f"div_ok={div_ok}, {elapsed:.0f}s)")


def test_monotone_step_decay():
    disc = discretize(build_geometry("flat-channel", 0.0, 1))
    model = FluidModel(disc, FluidParams(saturating_law(1.0, 1.0)), GRID,
                       eps=1e-2)
    load = 5.0 * disc.fluid.load_vector(
        lambda x, y: np.broadcast_to([1.0, 0.0], x.shape + (2,)))
    hist = []
    model.solve_step(GRID.times[1], np.zeros(model.ndof), load,
                     residual_history=hist)
    r = np.asarray(hist)
    slope = np.polyfit(np.arange(r.size), np.log(r), 1)[0]
    factor = float(np.exp(slope))
    bound = np.sqrt(3) / 2 + 0.05
    ok = r.size >= 8 and factor <= bound
    assert _report("monotone step decay <= sqrt(3)/2 + 0.05",
                   ok, f"(factor={factor:.3f}, its={r.size})")


def test_contraction_replay(constants, rho, flat_replays):
    cs, cf = constants
    solution, elapsed = flat_replays[1]
    iters_ok, factor_ok, worst, _ = _replay_criteria(solution, elapsed)
    ok = iters_ok and factor_ok and elapsed < 300.0
    assert _report("contraction replay (flat r=1)",
                   ok, f"(Cs={cs:.2f}, Cf={cf:.2f}, rho={rho:g}, "
                       f"max factor={worst:.3f}, {elapsed:.0f}s)")


def test_eps_limit():
    from stokeslame.coupling import epsilon_limit_study
    t0 = time.monotonic()
    schedule = (1e-1, 1e-2, 1e-3, 1e-4)
    cfg = CouplingConfig(eps_schedule=(1e-2,), omega=0.7, rho=1.0,
                         tol_rel=1e-8, tol_abs=1e-12, max_outer=60)
    rows = epsilon_limit_study(_forced_problem("flat-channel", 0.0, 1),
                               cfg, schedule)

    def nonincreasing(col):
        vals = [getattr(r, col) for r in rows]
        return all(b <= 1.1 * a for a, b in zip(vals, vals[1:]))

    mono_ok = all(nonincreasing(c) for c in ("u_gap_x", "grad_gap", "reg_energy"))

    # linear law: fixed-point distance to the smallest-eps level ~ O(eps)
    disc = discretize(build_geometry("flat-channel", 0.0, 1))
    f = disc.fluid.load_vector(
        lambda x, y: np.broadcast_to([1.0, 0.0], x.shape + (2,)))
    lin = CoupledProblem(disc, SolidParams(), FluidParams(linear_law(1.0)),
                         GRID, fluid_body_loads=np.tile(f, (GRID.n_steps + 1, 1)))
    lin_rows = epsilon_limit_study(lin, cfg, schedule)
    gaps = [r.u_gap_x for r in lin_rows[:-1]]
    slope = float(np.polyfit(np.log([r.eps for r in lin_rows[:-1]]),
                             np.log(gaps), 1)[0])
    elapsed = time.monotonic() - t0
    ok = mono_ok and slope >= 0.8 and elapsed < 600.0
    assert _report("eps-limit monotone + linear slope >= 0.8",
                   ok, f"(monotone={mono_ok}, slope={slope:.2f}, {elapsed:.0f}s)")


def test_poincare_in_time(flat_r1):
    gram = build_gram(flat_r1.iface)
    fine = TimeGrid(1.0, 400)
    v = np.cos(np.pi * fine.times / 2.0)[:, None, None] * np.ones((1, gram.m, 2))
    ratio = poincare_ratio(gram, fine, v)
    bound = poincare_sharp_constant(1.0)
    extremal_ok = abs(ratio - bound) / bound < 0.05
    rec = verify_poincare_time(gram, TimeGrid(1.0, 16), samples=25, seed=0)
    random_ok = rec.constant <= bound * 1.1
    ok = extremal_ok and random_ok
    assert _report("Poincare-in-time sharp constant",
                   ok, f"(extremal={ratio:.4f} vs {bound:.4f}, "
                       f"random max={rec.constant:.4f})")


def test_estimate_stability():
    t0 = time.monotonic()
    setting = VerifySetting()          # flat-channel, r=(1,2), fixed seed
    first = run_full_report(setting)
    second = run_full_report(setting)
    rows = {}
    for rec in first.records:
        rows.setdefault(rec.estimate_id, []).append(rec)
    growth_ok = all(
        rows[key][1].constant <= 2.0 * rows[key][0].constant
        for key in ("LAME_INVERSE", "T2_LIPSCHITZ"))
    bitwise_ok = first.csv_lines() == second.csv_lines()
    elapsed = time.monotonic() - t0
    ok = first.all_pass and growth_ok and bitwise_ok
    assert _report("estimate stability + bitwise report",
                   ok, f"(all_pass={first.all_pass}, growth_ok={growth_ok}, "
                       f"bitwise={bitwise_ok}, {elapsed:.0f}s)")


def test_coupling_residuals(flat_replays):
    sol1, _ = flat_replays[1]
    sol2, _ = flat_replays[2]
    dgap_ok = sol1.displacement_gap <= 10 * REPLAY_TOL_ABS
    ratio = sol1.traction_gap / sol2.traction_gap
    ok = dgap_ok and ratio >= 1.5
    assert _report("coupling residuals (dgap, tgap refinement)",
                   ok, f"(dgap={sol1.displacement_gap:.2e}, "
                       f"tgap r1/r2={ratio:.2f})")


def test_curved_interface_parity(curved_replays):
    sol1, t1 = curved_replays[1]
    sol2, _ = curved_replays[2]
    iters_ok, factor_ok, worst, _ = _replay_criteria(sol1, t1)
    dgap_ok = sol1.displacement_gap <= 10 * REPLAY_TOL_ABS
    ratio = sol1.traction_gap / sol2.traction_gap
    ok = iters_ok and factor_ok and dgap_ok and ratio >= 1.5
    assert _report("curved-interface parity (amplitude 0.1)",
                   ok, f"(max factor={worst:.3f}, dgap={sol1.displacement_gap:.2e}, "
                       f"tgap r1/r2={ratio:.2f})")

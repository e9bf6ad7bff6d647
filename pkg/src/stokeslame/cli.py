"""Command-line entry point and all file output.

Subcommands: run (coupled fixed point), solid (Dirichlet-to-Neumann sample),
fluid (Neumann-to-displacement sample), verify (estimate report), study
(refinement and regularization studies).  Every command writes only under
--out, copies the effective config there verbatim, and emits CSVs with '.'
decimals, ',' separators, a header row and LF line endings; alongside the
CSVs it renders matplotlib summary figures when a backend is available.

Exit codes: 0 success, 1 configuration error, 2 iteration/verification
failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as config_mod
from .config import RunConfig, parse_config, serialize_config
from .coupling import CoupledProblem, epsilon_limit_study, fixed_point_solve
from .errors import ConfigError, IterationFailureError, NonlinearDivergenceError
from .fem import discretize
from .fluid import FluidModel
from .geometry import TimeGrid, build_geometry, write_mesh_csv
from .laws import certify_constants, linear_law, FluidParams
from .manufactured import fluid_mms, solid_mms
from .norms import x_norm
from .solid import SolidModel, operator_t1
from .verify import (VerifySetting, measure_lame_constant, measure_t2_constant,
                     random_displacement_trace, random_traction_trace,
                     run_full_report)


def _write_lines(path: str, lines):
    with open(path, "w", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def _write_trace_csv(path: str, grid: TimeGrid, arclength: np.ndarray,
                     values: np.ndarray, cols=("u_x", "u_y")):
    lines = [f"t,arclength,{cols[0]},{cols[1]}"]
    for n, t in enumerate(grid.times):
        for i, s in enumerate(arclength):
            lines.append(f"{float(t)!r},{float(s)!r},"
                         f"{float(values[n, i, 0])!r},{float(values[n, i, 1])!r}")
    _write_lines(path, lines)


def _write_history_csv(path: str, history):
    _write_lines(path, ["eps,k,update_norm_X,contraction_factor,picard_total"]
                 + [rec.csv_row() for rec in history])


def _write_iterations_csv(path: str, state):
    lines = ["step,picard_its,final_residual"]
    for n, (its, res) in enumerate(zip(state.iterations, state.final_residuals), 1):
        lines.append(f"{n},{its},{res!r}")
    _write_lines(path, lines)


def _maybe_plot(fn):
    """Render a figure, silently skipping when matplotlib is unusable."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception:
        return
    fn(plt)
    plt.close("all")


def _plot_history(outdir: str, history):
    def draw(plt):
        by_eps = {}
        for rec in history:
            if rec.update_norm_x > 0:
                by_eps.setdefault(rec.eps, []).append(rec)
        if not by_eps:
            return
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for eps, recs in by_eps.items():
            ax.semilogy([r.k for r in recs], [r.update_norm_x for r in recs],
                        marker="o", label=f"eps={eps:g}")
        ax.set_xlabel("outer iteration k")
        ax.set_ylabel("update norm (X)")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "history.png"), dpi=120)

    _maybe_plot(draw)


def _plot_eps_study(outdir: str, rows):
    def draw(plt):
        pts = [(r.eps, r.u_gap_x) for r in rows if r.u_gap_x > 0 and r.eps > 0]
        if not pts:
            return
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.loglog(*zip(*pts), marker="s")
        ax.set_xlabel("eps")
        ax.set_ylabel("fixed-point distance (X)")
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "eps_study.png"), dpi=120)

    _maybe_plot(draw)


def _plot_orders(outdir: str, table):
    def draw(plt):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for side in sorted({row[0] for row in table}):
            pts = [(h, e) for s, _r, h, e, _o in table if s == side and e > 0]
            if pts:
                ax.loglog(*zip(*pts), marker="o", label=side)
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "mms_orders.png"), dpi=120)

    _maybe_plot(draw)


def _prepare_out(cfg: RunConfig, args) -> str:
    outdir = args.out or cfg.out
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.ini"), "w", newline="\n") as f:
        f.write(serialize_config(cfg))
    return outdir


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else config_mod.default_config()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.dump_fields:
        overrides["dump_fields"] = True
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return cfg


def _build_problem(cfg: RunConfig, refinement=None) -> CoupledProblem:
    mesh = build_geometry(cfg.preset, cfg.amplitude,
                          cfg.refinement if refinement is None else refinement)
    disc = discretize(mesh)
    grid = cfg.grid()
    law = cfg.law()
    certify_constants(law, seed=cfg.seed)
    body = None
    if cfg.body_force != "none":
        # note: on the flat channel a downward constant force is conservative
        # and exactly balanced by the linear pressure -y, so it drives no flow
        f = {"unit-right": np.array([1.0, 0.0]),
             "unit-down": np.array([0.0, -1.0])}[cfg.body_force]
        body = np.tile(disc.fluid.load_vector(
            lambda x, y: np.broadcast_to(f, x.shape + (2,))),
            (grid.n_steps + 1, 1))
    return CoupledProblem(disc, cfg.solid_params(), FluidParams(law), grid,
                          fluid_body_loads=body, newton=cfg.newton)


def _resolve_rho(cfg: RunConfig, problem: CoupledProblem) -> float:
    if cfg.rho_mode == "one":
        return 1.0
    cs = measure_lame_constant(problem.solid_model, problem.gram, 5, cfg.seed)
    cf = measure_t2_constant(problem.fluid_model(cfg.eps_schedule[0]),
                             problem.gram, 3, cfg.seed + 1)
    return float(min(1.0, 0.5 / (cs * cf)))


def _dump_fields(outdir: str, problem: CoupledProblem, solution):
    fdir = os.path.join(outdir, "fields")
    os.makedirs(fdir, exist_ok=True)
    u = solution.solid_state.u
    for n in range(u.shape[0]):
        lines = ["id,u_x,u_y"]
        w = u[n].reshape(-1, 2)
        for i in range(w.shape[0]):
            lines.append(f"{i},{float(w[i, 0])!r},{float(w[i, 1])!r}")
        _write_lines(os.path.join(fdir, f"solid_{n:04d}.csv"), lines)
    v, p = solution.fluid_state.v, solution.fluid_state.p
    nvert = problem.disc.fluid.n_vertices
    for n in range(v.shape[0]):
        lines = ["id,v_x,v_y,pi"]
        w = v[n].reshape(-1, 2)
        for i in range(w.shape[0]):
            pi = repr(float(p[n, i])) if i < nvert else ""
            lines.append(f"{i},{float(w[i, 0])!r},{float(w[i, 1])!r},{pi}")
        _write_lines(os.path.join(fdir, f"fluid_{n:04d}.csv"), lines)


def cmd_run(cfg: RunConfig, args) -> int:
    outdir = _prepare_out(cfg, args)
    problem = _build_problem(cfg)
    write_mesh_csv(problem.disc.mesh, os.path.join(outdir, "mesh"))
    rho = _resolve_rho(cfg, problem)
    ccfg = cfg.coupling_config(rho=rho)
    try:
        solution = fixed_point_solve(problem, ccfg)
    except IterationFailureError as exc:
        _write_history_csv(os.path.join(outdir, "history.csv"), exc.history)
        print(f"iteration failure: {exc}", file=sys.stderr)
        return 2
    _write_history_csv(os.path.join(outdir, "history.csv"), solution.history)
    _plot_history(outdir, solution.history)
    _write_trace_csv(os.path.join(outdir, "trace.csv"), problem.grid,
                     problem.disc.iface.arclength, solution.u_star.values)
    _write_iterations_csv(os.path.join(outdir, "iterations.csv"),
                          solution.fluid_state)
    report = x_norm(problem.gram, problem.grid, solution.u_star)
    _write_lines(os.path.join(outdir, "norms.csv"),
                 ["name,value,component1,component2,component3",
                  report.csv_row()])
    _write_lines(os.path.join(outdir, "residuals.csv"),
                 ["displacement_gap,traction_gap",
                  f"{solution.displacement_gap!r},{solution.traction_gap!r}"])
    if cfg.dump_fields:
        _dump_fields(outdir, problem, solution)
    print(f"converged: |u*|_X = {report.value:.6e}, rho = {rho:g}")
    return 0


def cmd_solid(cfg: RunConfig, args) -> int:
    outdir = _prepare_out(cfg, args)
    problem = _build_problem(cfg)
    write_mesh_csv(problem.disc.mesh, os.path.join(outdir, "mesh"))
    rng = np.random.default_rng(cfg.seed)
    u = random_displacement_trace(problem.gram, problem.grid, rng)
    g = operator_t1(problem.solid_model, u)
    _write_trace_csv(os.path.join(outdir, "trace.csv"), problem.grid,
                     problem.disc.iface.arclength, u.values)
    _write_trace_csv(os.path.join(outdir, "traction.csv"), problem.grid,
                     problem.disc.iface.arclength, g.values, cols=("g_x", "g_y"))
    report = x_norm(problem.gram, problem.grid, u)
    _write_lines(os.path.join(outdir, "norms.csv"),
                 ["name,value,component1,component2,component3",
                  report.csv_row()])
    print("solid sample written")
    return 0


def cmd_fluid(cfg: RunConfig, args) -> int:
    outdir = _prepare_out(cfg, args)
    problem = _build_problem(cfg)
    write_mesh_csv(problem.disc.mesh, os.path.join(outdir, "mesh"))
    rng = np.random.default_rng(cfg.seed)
    g = random_traction_trace(problem.gram, problem.grid, rng)
    model = problem.fluid_model(cfg.eps_schedule[0])
    try:
        state = model.solve_series(g_f=g, body_loads=problem.fluid_body_loads)
    except NonlinearDivergenceError as exc:
        print(f"iteration failure: {exc}", file=sys.stderr)
        return 2
    from .fluid import accumulate_displacement
    disp = accumulate_displacement(model, state)
    _write_trace_csv(os.path.join(outdir, "trace.csv"), problem.grid,
                     problem.disc.iface.arclength, disp.values)
    _write_iterations_csv(os.path.join(outdir, "iterations.csv"), state)
    report = x_norm(problem.gram, problem.grid, disp)
    _write_lines(os.path.join(outdir, "norms.csv"),
                 ["name,value,component1,component2,component3",
                  report.csv_row()])
    print("fluid sample written")
    return 0


def cmd_verify(cfg: RunConfig, args) -> int:
    outdir = _prepare_out(cfg, args)
    setting = VerifySetting(
        preset=cfg.preset, amplitude=cfg.amplitude,
        refinements=(cfg.refinement, cfg.refinement + 1),
        t_final=cfg.t_final, n_steps=min(cfg.n_steps, 8),
        eps=cfg.eps_schedule[0] or 1e-2, seed=cfg.seed)
    report = run_full_report(setting)
    _write_lines(os.path.join(outdir, "estimate_report.csv"), report.csv_lines())
    for rec in report.records:
        print(f"{rec.estimate_id}: constant={rec.constant:.4g} pass={rec.passed}")
    return 0 if report.all_pass else 2


def _mms_study(cfg: RunConfig, refinements) -> list:
    """(side, r, h, error, order) rows for the manufactured solutions."""
    table = []
    grid = cfg.grid()
    smms = solid_mms(cfg.solid_params())
    fmms = fluid_mms(cfg.kappa)
    prev = {"solid": None, "fluid": None}
    for r in refinements:
        mesh = build_geometry(cfg.preset, cfg.amplitude, r)
        disc = discretize(mesh)
        model = SolidModel(disc, cfg.solid_params(), grid)
        body = smms.body_loads(disc, grid)
        state = model.solve_dirichlet(smms.dirichlet_trace(disc, grid), body)
        tf = grid.t_final
        err_s = disc.solid.l2_error(state.u[-1],
                                    lambda x, y: smms.exact(tf, x, y))
        order = (np.log2(prev["solid"] / err_s) if prev["solid"] else np.nan)
        table.append(("solid", r, mesh.h, err_s, order))
        prev["solid"] = err_s

        law = linear_law(cfg.kappa, t_final=grid.t_final)
        fmodel = FluidModel(disc, FluidParams(law), grid, eps=0.0)
        fstate = fmodel.solve_series(g_f=fmms.traction_series(disc, grid),
                                     body_loads=fmms.body_loads(disc, grid))
        err_f = np.sqrt(
            disc.fluid.l2_error(fstate.v[-1],
                                lambda x, y: fmms.exact(tf, x, y)) ** 2
            + disc.fluid.h1_semi_error(
                fstate.v[-1], lambda x, y: fmms.exact_grad(tf, x, y)) ** 2)
        order = (np.log2(prev["fluid"] / err_f) if prev["fluid"] else np.nan)
        table.append(("fluid", r, mesh.h, err_f, order))
        prev["fluid"] = err_f
    return table


def cmd_study(cfg: RunConfig, args) -> int:
    outdir = _prepare_out(cfg, args)
    refinements = (1, 2, 3)
    table = _mms_study(cfg, refinements)
    lines = ["side,refinement,h,error,order"]
    for side, r, h, err, order in table:
        lines.append(f"{side},{r},{float(h)!r},{float(err)!r},{float(order)!r}")
    _write_lines(os.path.join(outdir, "study_mms.csv"), lines)
    _plot_orders(outdir, table)

    problem = _build_problem(cfg, refinement=min(cfg.refinement, 1))
    ccfg = cfg.coupling_config()
    try:
        rows = epsilon_limit_study(problem, ccfg, (1e-1, 1e-2, 1e-3, 1e-4))
    except IterationFailureError as exc:
        print(f"iteration failure: {exc}", file=sys.stderr)
        return 2
    _write_lines(os.path.join(outdir, "study_eps.csv"),
                 ["eps,u_gap_x,grad_gap,a_gap,reg_energy"]
                 + [row.csv_row() for row in rows])
    _plot_eps_study(outdir, rows)
    print("study written")
    return 0


_COMMANDS = {
    "run": cmd_run,
    "solid": cmd_solid,
    "fluid": cmd_fluid,
    "verify": cmd_verify,
    "study": cmd_study,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stokeslame",
        description="Coupled quasi-linear Stokes / elastodynamics simulator")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="path to a config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--dump-fields", action="store_true")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

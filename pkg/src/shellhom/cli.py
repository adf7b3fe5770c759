"""Command line front end: ``shellhom {cell,sweep,energy,recover,check}``.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 solver
failure, 4 non-isometric immersion.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import geometry as geo
from .cell import effective_form
from .cell.operators import gamma_tag
from .checks import center_frame, manufactured_w, report, run_checks
from .energy import BendingStrainSource, EffectiveFormCache, bending_energy
from .errors import ConfigError, NoConvergence, NotConvex, NotSPD, ShellHomError
from .io import (
    csv_text,
    dumps_json,
    field_from_rows,
    form_record,
    grid_rows,
    load_config,
    read_csv,
    write_text,
)
from .recovery import BendingSystem, solve_qsw

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INFINITE = 0, 1, 2, 3, 4


class SolverFailure(Exception):
    pass


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _points(cfg):
    pts = cfg.sections["cell"].get("points")
    if pts is None:
        (a1, b1), (a2, b2) = cfg.chart.domain
        pts = [[0.5 * (a1 + b1), 0.5 * (a2 + b2)]]
    return [tuple(map(float, p)) for p in pts]


def _frame_at(chart, z):
    ds = chart.derivatives(np.array([[z[0]]]), np.array([[z[1]]]), order=1)
    return geo.Frame.from_tangents(ds[1][0, 0, 0], ds[1][0, 0, 1]), ds[0][0, 0]


def _form(cfg, gamma, z):
    frame, x = _frame_at(cfg.chart, z)
    try:
        return effective_form(gamma, cfg.law, frame, cfg.cell_grid, cfg.opts, x)
    except NoConvergence as exc:
        last = exc.residual_history[-1] if exc.residual_history else float("nan")
        raise SolverFailure(f"regime γ={gamma_tag(gamma)}: no convergence, residual {last:.3e}") from exc
    except NotSPD as exc:
        raise SolverFailure(f"regime γ={gamma_tag(gamma)}: {exc}") from exc


def cmd_cell(cfg, args):
    tasks = [(g, z) for g in cfg.regimes for z in _points(cfg)]
    forms = _map(lambda gz: _form(cfg, *gz), tasks, args.jobs)
    out = {
        "config_hash": cfg.hash,
        "forms": [dict(form_record(f), point=list(z)) for f, (_, z) in zip(forms, tasks)],
    }
    write_text(args.out, dumps_json(out))
    return EXIT_OK


def _sort_key(g):
    return (math.isinf(g), g)


def cmd_sweep(cfg, args):
    gammas = sorted(cfg.regimes, key=_sort_key)
    z = _points(cfg)[0]
    forms = _map(lambda g: _form(cfg, g, z), gammas, args.jobs)
    rows = []
    for g, f in zip(gammas, forms):
        m = f.m
        rows.append([gamma_tag(g), m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2]])
    meta = {"config_hash": cfg.hash, "max_residual": repr(float(max(max(f.residuals) for f in forms)))}
    write_text(args.out, csv_text(["gamma", "m11", "m22", "m33", "m12", "m13", "m23"], rows, meta))
    return EXIT_OK


def _energy_source(cfg):
    sec = cfg.sections["energy"]
    grid = cfg.x_grid
    if "immersion" in sec:
        if sec["immersion"] == "identity":
            return BendingStrainSource.from_immersion(cfg.chart.sample(grid))
        data = read_csv(sec["immersion"], ["z1", "z2", "x", "y", "z"])
        return BendingStrainSource.from_immersion(field_from_rows(grid, data, 3))
    basis = sec.get("basis", "dual")
    if "q_field" in sec:
        data = read_csv(sec["q_field"], ["z1", "z2", "q11", "q22", "q12"])
        q = field_from_rows(grid, data, 3)
        q[..., 2] *= np.sqrt(2.0)
        return BendingStrainSource.from_q(q, basis)
    q = np.asarray(sec.get("q", [1.0, 1.0, 0.0]), float)
    if q.shape != (3,):
        raise ConfigError("energy.q must be (q11, q22, q12)")
    return BendingStrainSource.from_q([q[0], q[1], np.sqrt(2.0) * q[2]], basis)


def cmd_energy(cfg, args):
    source = _energy_source(cfg)
    cache = EffectiveFormCache()
    reports = []
    for g in cfg.regimes:
        try:
            r = bending_energy(cfg.chart, source, g, cfg.law, cfg.cell_grid, cfg.x_grid, cache, cfg.opts,
                               cfg.isometry_tol, args.jobs)
        except NoConvergence as exc:
            raise SolverFailure(f"regime γ={gamma_tag(g)}: {exc}") from exc
        reports.append(r)
    out = {"config_hash": cfg.hash, "reports": [r.to_dict() for r in reports]}
    write_text(args.out, dumps_json(out))
    integrand_path = cfg.sections["energy"].get("integrand")
    finite = [r for r in reports if not r.infinite]
    if integrand_path and finite:
        meta = {"config_hash": cfg.hash, "gamma": gamma_tag(finite[0].gamma)}
        write_text(integrand_path, csv_text(["z1", "z2", "integrand"], grid_rows(cfg.x_grid, finite[0].integrand), meta))
    if any(r.infinite for r in reports):
        d = max(r.isometry_defect for r in reports)
        print(f"immersion is not isometric (defect {d:.3e}); energy is infinite", file=sys.stderr)
        return EXIT_INFINITE
    return EXIT_OK


def cmd_recover(cfg, args):
    sec = cfg.sections["recover"]
    grid = cfg.x_grid
    if "B" in sec:
        B = field_from_rows(grid, read_csv(sec["B"], ["z1", "z2", "B11", "B22", "B12"]), 3)
    else:
        zero = BendingSystem(cfg.chart, np.zeros(grid.shape + (3,)), grid)
        B = zero.qsw(manufactured_w(*grid.mesh()))
    try:
        res = solve_qsw(BendingSystem(cfg.chart, B, grid), tol=float(sec.get("tol", 1e-10)))
    except NotConvex as exc:
        raise SolverFailure(f"recovery: {exc}") from exc
    except NoConvergence as exc:
        raise SolverFailure(f"recovery: {exc}") from exc
    meta = {"config_hash": cfg.hash, "residual": repr(res.residual), "relative_residual": repr(res.relative_residual)}
    write_text(args.out, csv_text(["z1", "z2", "w1", "w2", "w3"], grid_rows(grid, res.w), meta))
    print(f"relative residual {res.relative_residual:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_check(cfg, args):
    seed = cfg.seed if args.seed is None else args.seed
    results = run_checks(cfg, seed)
    rep = report(cfg, results, seed)
    for line in rep["lines"]:
        print(line)
    if args.out:
        write_text(args.out, dumps_json(rep))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"first failing check: {failed[0]}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"cell": cmd_cell, "sweep": cmd_sweep, "energy": cmd_energy, "recover": cmd_recover, "check": cmd_check}


def build_parser():
    p = argparse.ArgumentParser(prog="shellhom", description="Homogenized bending energies of thin periodic shells.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", default=None, help="TOML configuration file (defaults are used when omitted)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized checks (overrides the config)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = {"seed": args.seed} if args.seed is not None else None
        cfg = load_config(args.config, overrides)
        if args.jobs < 1:
            raise ConfigError("--jobs must be positive")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ShellHomError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

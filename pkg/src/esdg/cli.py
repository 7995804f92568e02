"""Command-line harness: operator checks, free-stream tests, runs, convergence."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .convergence import run_convergence_study
from .coupling import verify_macro_sbp
from .geometry import build_geometry, generate_mesh, max_gcl_residual
from .physics import GasModel
from .problems import (FreestreamProblem, TaylorGreenProblem,
                       ViscousShockProblem, ViscousShockParams)
from .rhs import NavierStokesRhs, SchemeConfig
from .sbp import OperatorBank, build_lgl_sbp, verify_sbp_definition
from .timeloop import IntegratorConfig, integrate_with_monitors


def _cmd_check_ops(args) -> int:
    table = {"operators": [], "interpolation": []}
    ok = True
    for p in range(args.p_min, args.p_max + 1):
        d = verify_sbp_definition(build_lgl_sbp(p))
        ok &= d.ok()
        table["operators"].append(vars(d))
    for p in range(args.p_min, args.p_max + 1):
        for gap in (1, 2):
            if p + gap > args.p_max:
                continue
            d = verify_macro_sbp(build_lgl_sbp(p), build_lgl_sbp(p + gap))
            ok &= d.ok()
            table["interpolation"].append(vars(d))
    table["pass"] = bool(ok)
    print(json.dumps(table, indent=2))
    return 0 if ok else 1


def _cmd_freestream(args) -> int:
    gas = GasModel(gamma=1.4, rgas=1.0, prandtl=0.72, mu=0.01)
    p_max = args.p + 1 if args.mixed else args.p
    mesh = generate_mesh(args.grid, [0, 0, 0], [1, 1, 1], args.p, p_max,
                         seed=args.seed, periodic=True, perturb=True)
    geom = build_geometry(mesh)
    prob = FreestreamProblem(gas)
    q0 = prob.initial(geom.coords)
    print(f"mesh: {args.grid}^3, degrees "
          f"{args.p}..{p_max}, seed {args.seed}")
    print(f"metric constraint residual: {max_gcl_residual(geom):.3e}")
    worst = 0.0
    for mode in ("ec", "es"):
        system = NavierStokesRhs(geom, gas, SchemeConfig(mode=mode))
        r = system.rhs(0.0, q0, breakdown=True)
        resid = float(np.max(np.abs(r.total)))
        worst = max(worst, resid)
        print(f"{mode} free-stream residual (inf-norm): {resid:.3e}")
    return 0 if worst < 1e-10 else 1


def _cmd_converge(args) -> int:
    grids = [int(g) for g in args.grids.split(",")]
    if args.problem != "viscous-shock":
        raise SystemExit("only the viscous-shock convergence study is available")
    report = run_convergence_study(args.p, grids, seed=args.seed,
                                   mixed=args.mixed, rtol=args.rtol,
                                   verbose=True)
    csv = report.to_csv()
    print(csv)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
        print(f"wrote {args.out}")
    return 0


def _cmd_run(args) -> int:
    from .config import load_config

    cfg = load_config(args.config)
    mesh_cfg = cfg.mesh
    if cfg.kind == "tgv":
        problem = TaylorGreenProblem(cfg.problem)
        lo, hi = problem.params.box()
        periodic, boundary = True, None
        gas = problem.gas
    elif cfg.kind == "viscous-shock":
        problem = ViscousShockProblem(cfg.problem)
        lo, hi = [-0.5] * 3, [0.5] * 3
        periodic, boundary = False, problem
        gas = problem.gas
    else:
        gas = GasModel(gamma=1.4, rgas=1.0, prandtl=0.72, mu=0.01)
        problem = FreestreamProblem(gas)
        lo, hi = [0, 0, 0], [1, 1, 1]
        periodic, boundary = True, None
    mesh = generate_mesh(mesh_cfg["cells"], lo, hi, mesh_cfg["p_min"],
                         mesh_cfg["p_max"], seed=mesh_cfg["seed"],
                         periodic=periodic, perturb=mesh_cfg["perturb"])
    geom = build_geometry(mesh)
    system = NavierStokesRhs(geom, gas, cfg.scheme, boundary=boundary)
    q0 = problem.initial(geom.coords)
    print(f"{cfg.kind}: {mesh_cfg['cells']}^3 cells, degrees "
          f"{mesh_cfg['p_min']}..{mesh_cfg['p_max']}, ndof {geom.ndof}, "
          f"t_end {cfg.t_end}")
    qf, log = integrate_with_monitors(system, q0, cfg.t_end, cfg.integrator)
    print(f"done: {log.steps} steps ({log.rejected} rejected)")
    if args.out:
        log.write_csv(args.out)
        print(f"wrote {args.out}")
    if args.json_out:
        cols = log.as_columns()
        with open(args.json_out, "w") as fh:
            json.dump({k: v.tolist() for k, v in cols.items()}, fh)
        print(f"wrote {args.json_out}")
    if args.mesh_out:
        mesh.to_json(args.mesh_out)
        print(f"wrote {args.mesh_out}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="esdg",
                                 description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check-ops", help="operator/interpolation residual table")
    p.add_argument("--p-min", type=int, default=1)
    p.add_argument("--p-max", type=int, default=8)
    p.set_defaults(fn=_cmd_check_ops)

    p = sub.add_parser("freestream", help="free-stream preservation check")
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--mixed", action="store_true")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=_cmd_freestream)

    p = sub.add_parser("converge", help="grid convergence study")
    p.add_argument("--problem", default="viscous-shock")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--mixed", action="store_true")
    p.add_argument("--grids", default="4,8,16")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_converge)

    p = sub.add_parser("run", help="config-file driven run with monitors")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="monitor CSV path")
    p.add_argument("--json-out", default=None, help="monitor JSON path")
    p.add_argument("--mesh-out", default=None, help="mesh JSON path")
    p.set_defaults(fn=_cmd_run)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

"""Grid-convergence driver for the viscous shock problem."""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import build_geometry, generate_mesh
from .problems import ViscousShockParams, ViscousShockProblem, error_norms
from .rhs import NavierStokesRhs, SchemeConfig, SolutionField
from .timeloop import IntegratorConfig, integrate_with_monitors


@dataclass
class ConvergenceRow:
    grid: int
    l1: float
    l2: float
    linf: float
    rate_l1: float | None = None
    rate_l2: float | None = None
    rate_linf: float | None = None


@dataclass
class ConvergenceReport:
    """Error table with rates log2(e_coarse/e_fine)/log2(h ratio), sign < 0."""

    problem: str
    p: int
    mixed: bool
    seed: int
    rows: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    def add(self, grid: int, l1: float, l2: float, linf: float):
        row = ConvergenceRow(grid, l1, l2, linf)
        if self.rows:
            prev = self.rows[-1]
            ratio = np.log(prev.grid / grid)   # negative of log(h ratio)
            row.rate_l1 = float(np.log(l1 / prev.l1) / -ratio)
            row.rate_l2 = float(np.log(l2 / prev.l2) / -ratio)
            row.rate_linf = float(np.log(linf / prev.linf) / -ratio)
        self.rows.append(row)

    def finest_rate(self, norm: str = "l2") -> float:
        return getattr(self.rows[-1], f"rate_{norm}")

    def to_csv(self) -> str:
        out = io.StringIO()
        for k, v in self.header.items():
            out.write(f"# {k} = {v}\n")
        out.write("Grid,L1,Rate,L2,Rate,Linf,Rate\n")
        for r in self.rows:
            fmt = lambda x: "-" if x is None else f"{x:.2f}"
            out.write(f"{r.grid},{r.l1:.6e},{fmt(r.rate_l1)},{r.l2:.6e},"
                      f"{fmt(r.rate_l2)},{r.linf:.6e},{fmt(r.rate_linf)}\n")
        return out.getvalue()

    def __str__(self):
        return self.to_csv()


def run_viscous_shock(grid: int, p: int, mixed: bool, seed: int,
                      params: ViscousShockParams | None = None,
                      t_end: float = 0.5, rtol: float = 1e-8,
                      scheme: SchemeConfig | None = None,
                      verbose: bool = False):
    """One viscous-shock run; returns (errors, geometry, final state, log)."""
    params = params or ViscousShockParams()
    problem = ViscousShockProblem(params)
    p_max = p + 1 if mixed else p
    mesh = generate_mesh(grid, [-0.5] * 3, [0.5] * 3, p, p_max, seed=seed,
                         periodic=False, perturb=True)
    geom = build_geometry(mesh)
    scheme = scheme or SchemeConfig(mode="es")
    system = NavierStokesRhs(geom, problem.gas, scheme, boundary=problem)
    q0 = problem.initial(geom.coords)
    cfg = IntegratorConfig(rtol=rtol, atol=rtol, monitor_interval=t_end)
    t_start = time.perf_counter()
    qf, log = integrate_with_monitors(system, q0, t_end, cfg)
    elapsed = time.perf_counter() - t_start
    q_exact = problem.state(geom.coords, t_end)
    errs = error_norms(geom, qf[:, 0], q_exact[:, 0])      # density error
    if verbose:
        print(f"  grid {grid:3d}: L2 = {errs[1]:.4e}  "
              f"steps = {log.steps} ({log.rejected} rejected, {elapsed:.1f}s)")
    return errs, geom, qf, log


def run_convergence_study(p: int, grids, seed: int, mixed: bool = False,
                          params: ViscousShockParams | None = None,
                          t_end: float = 0.5, rtol: float = 1e-8,
                          verbose: bool = False) -> ConvergenceReport:
    """Nested-grid convergence study of the viscous shock density error."""
    params = params or ViscousShockParams()
    report = ConvergenceReport(problem="viscous-shock", p=p, mixed=mixed,
                               seed=seed)
    report.header = {
        "problem": "viscous-shock",
        "p": p,
        "degrees": f"{p}/{p + 1}" if mixed else str(p),
        "seed": seed,
        "mach": params.mach,
        "reynolds": params.reynolds,
        "gamma": params.gamma,
        "prandtl": params.prandtl,
        "shock_speed": params.shock_speed,
        "upstream_speed": params.u_upstream,
        "mass_flow": params.mass_flow,
        "mu": params.mu,
        "alpha": params.alpha,
        "v_final": params.v_final,
        "t_end": t_end,
        "rtol": rtol,
    }
    for grid in grids:
        errs, _, _, _ = run_viscous_shock(grid, p, mixed, seed, params,
                                          t_end, rtol, verbose=verbose)
        report.add(grid, *errs)
    return report

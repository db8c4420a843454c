"""Cylindrical-pipe benchmark grid comparing both solvers.

Runs the 18-cell grid {alpha in 2, 1.75, 1.5} x {tau0 in 0.1, 0.2} x three
disk refinements, recording relative errors against the closed-form
profile, iteration counts, wall times and the ALG2/TRS speedup, plus one
arrested-flow sanity run at tau0 = 0.6 where the converged velocity must
vanish.  Wall times are reported for orientation only; they depend on the
host and are never part of pass/fail decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .augmented_lagrangian import solve_alg2
from .fem import assemble
from .mesh import generate_disk_mesh
from .objective import FluidParams
from .pipe import PipeSolution, relative_error
from .trust_region import solve_trs

# Ring counts giving 469 / 1141 / 2107 nodes, comparable to the
# 559 / 1129 / 2169-node meshes the benchmark grid targets.
DEFAULT_REFINEMENTS = (12, 19, 26)
DEFAULT_ALPHAS = (2.0, 1.75, 1.5)
DEFAULT_TAU0S = (0.1, 0.2)

PLUG_STOP_TAU0 = 0.6


@dataclass
class ExperimentRow:
    alpha: float
    tau0: float
    n_nodes: int
    error_trs: float = math.nan
    error_alg2: float = math.nan
    iterations_trs: int = 0
    iterations_alg2: int = 0
    kkt_trs: float = math.nan
    kkt_alg2: float = math.nan
    time_trs: float = math.nan
    time_alg2: float = math.nan
    speedup: float = math.nan
    status: str = "ok"


@dataclass
class PlugStopRow:
    tau0: float
    n_nodes: int
    max_velocity: float
    iterations: int
    status: str = "ok"


@dataclass
class ExperimentTable:
    rows: list[ExperimentRow] = field(default_factory=list)
    plug_rows: list[PlugStopRow] = field(default_factory=list)

    @property
    def all_converged(self) -> bool:
        return (all(r.status == "ok" for r in self.rows)
                and all(r.status == "ok" for r in self.plug_rows))

    def to_csv(self) -> str:
        lines = ["kind,alpha,tau0,n_nodes,error_trs,error_alg2,"
                 "iterations_trs,iterations_alg2,time_trs,time_alg2,speedup,status"]
        for r in self.rows:
            lines.append(
                f"cylinder,{r.alpha!r},{r.tau0!r},{r.n_nodes},{r.error_trs!r},"
                f"{r.error_alg2!r},{r.iterations_trs},{r.iterations_alg2},"
                f"{r.time_trs!r},{r.time_alg2!r},{r.speedup!r},{r.status}"
            )
        for p in self.plug_rows:
            lines.append(
                f"plug_stop,2.0,{p.tau0!r},{p.n_nodes},{p.max_velocity!r},,"
                f"{p.iterations},,,,,{p.status}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = (f"{'alpha':>6} {'tau0':>5} {'nodes':>6} "
                  f"{'err TRS':>10} {'err ALG2':>10} {'it TRS':>7} {'it ALG2':>8} "
                  f"{'t TRS':>8} {'t ALG2':>8} {'speedup':>8}  status")
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.alpha:>6.3g} {r.tau0:>5.3g} {r.n_nodes:>6d} "
                f"{r.error_trs:>10.3e} {r.error_alg2:>10.3e} "
                f"{r.iterations_trs:>7d} {r.iterations_alg2:>8d} "
                f"{r.time_trs:>8.2f} {r.time_alg2:>8.2f} {r.speedup:>8.2g}  {r.status}"
            )
        for p in self.plug_rows:
            lines.append(
                f"{'2':>6} {p.tau0:>5.3g} {p.n_nodes:>6d} "
                f"arrested flow: max |y| = {p.max_velocity:.2e} "
                f"({p.iterations} iterations)  {p.status}"
            )
        return "\n".join(lines) + "\n"


def run_cell(alpha, tau0, ops, trs_cfg=None, alg2_cfg=None) -> ExperimentRow:
    """Run both solvers on one parameter combination."""
    params = FluidParams(alpha=alpha, kappa=1.0, tau0=tau0)
    sol = PipeSolution(params)
    row = ExperimentRow(alpha=alpha, tau0=tau0, n_nodes=ops.tri.n_nodes)

    _, y_trs, rep_trs = solve_trs(params, ops, cfg=trs_cfg)
    row.iterations_trs = rep_trs.iterations
    row.kkt_trs = rep_trs.kkt_history[-1]
    row.time_trs = rep_trs.wall_time
    if rep_trs.converged:
        row.error_trs = relative_error(y_trs, ops.tri, sol)
    else:
        row.status = "FAILED"

    y_alg2, _, _, rep_alg2 = solve_alg2(params, ops, cfg=alg2_cfg)
    row.iterations_alg2 = rep_alg2.iterations
    row.kkt_alg2 = rep_alg2.kkt_history[-1]
    row.time_alg2 = rep_alg2.wall_time
    if rep_alg2.converged:
        row.error_alg2 = relative_error(y_alg2, ops.tri, sol)
    else:
        row.status = "FAILED"

    if row.status == "ok":
        row.speedup = row.time_alg2 / row.time_trs
    return row


def reproduce_tables(refinements=DEFAULT_REFINEMENTS, alphas=DEFAULT_ALPHAS,
                     tau0s=DEFAULT_TAU0S, trs_cfg=None, alg2_cfg=None,
                     progress=None) -> ExperimentTable:
    """Run the full benchmark grid plus the arrested-flow sanity row."""
    table = ExperimentTable()
    for refinement in refinements:
        tri = generate_disk_mesh(refinement)
        ops = assemble(tri, f=1.0)
        for alpha in alphas:
            for tau0 in tau0s:
                row = run_cell(alpha, tau0, ops, trs_cfg=trs_cfg, alg2_cfg=alg2_cfg)
                table.rows.append(row)
                if progress is not None:
                    progress(row)

    tri = generate_disk_mesh(refinements[0])
    ops = assemble(tri, f=1.0)
    params = FluidParams(alpha=2.0, kappa=1.0, tau0=PLUG_STOP_TAU0)
    _, y, rep = solve_trs(params, ops, cfg=trs_cfg)
    plug = PlugStopRow(
        tau0=PLUG_STOP_TAU0,
        n_nodes=tri.n_nodes,
        max_velocity=float(abs(y).max()) if y.size else 0.0,
        iterations=rep.iterations,
        status="ok" if rep.converged else "FAILED",
    )
    table.plug_rows.append(plug)
    return table

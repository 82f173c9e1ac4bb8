"""Command-line front end: solve, convergence, and plot-data sweeps.

Examples:

    scem-rd solve --problem example1 --eps 1,0.01,1e-4 --out results/
    scem-rd convergence --problem example1 --eps 2^-1,2^-2,2^-3 \\
        --n 64,128,256,512,1024 --out results/ --jobs 4
    scem-rd plotdata --problem example2 --eps 1,0.01,0.0001 --grid 2001 --out figs/

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import GridFunction, convergence_table, exact_constant_system
from .collocation import CollocationError, SolverConfig
from .config import (
    PAPER_GRID,
    ConfigError,
    ProblemConfig,
    RunManifest,
    dump_config,
    load_problem,
    parse_eps_list,
    parse_n_list,
)
from .scem import AssumptionViolation, SingularReducedMatrix, hybrid_solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_SOLVER_ERRORS = (CollocationError, AssumptionViolation, SingularReducedMatrix)


class SolverFailure(Exception):
    """Wraps a solver error with the sweep cell that produced it."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scem-rd",
        description="Hybrid asymptotic-numerical solver for singularly "
        "perturbed reaction-diffusion systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "write solution tables, one CSV per eps"),
        ("convergence", "write double-mesh difference and order tables"),
        ("plotdata", "write dense solution (and error) data for figures"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--problem", required=True,
                       help="builtin name (example1, example2) or JSON config path")
        p.add_argument("--eps", default=None,
                       help="comma-separated eps values; 2^-K forms allowed")
        p.add_argument("--n", default=None,
                       help="comma-separated mesh-interval counts (doubling chain "
                            "for convergence; the largest is used for solve/plotdata)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker pool size")
        p.add_argument("--grid", default=None,
                       help="evaluation grid: a point count or 'paper' "
                            "(default: paper for solve, 2001 for plotdata)")
        p.add_argument("--no-adapt", action="store_true",
                       help="disable residual-driven mesh refinement")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved problem config as JSON and exit")
    return parser


def _parse_grid(text: str | None, default):
    if text is None:
        return default
    if text.strip().lower() == "paper":
        return PAPER_GRID
    try:
        count = int(text)
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: expected a count or 'paper'") from exc
    if count < 2:
        raise ConfigError("grid count must be at least 2")
    return count


def _build_manifest(args, default_grid) -> RunManifest:
    problem = load_problem(args.problem)
    if args.eps is None:
        raise ConfigError("--eps is required")
    if args.out is None:
        raise ConfigError("--out is required")
    eps_list = parse_eps_list(args.eps)
    n_list = parse_n_list(args.n) if args.n else ()
    return RunManifest(
        problem=problem,
        eps_list=eps_list,
        n_list=n_list,
        output_dir=Path(args.out),
        eval_grid=_parse_grid(args.grid, default_grid),
        adaptive=not args.no_adapt,
        jobs=args.jobs,
    )


def _solver_config(manifest: RunManifest) -> SolverConfig:
    if manifest.n_list:
        points = manifest.n_list[-1] + 1
    else:
        points = 1000
    return SolverConfig(initial_mesh_points=points, adaptive=manifest.adaptive)


def _solve_cell(problem: ProblemConfig, eps: float, cfg: SolverConfig):
    try:
        return hybrid_solve(problem.build_system(eps), cfg)
    except _SOLVER_ERRORS as exc:
        raise SolverFailure(f"eps={eps:g}: {exc}") from exc


def _sweep(manifest: RunManifest, work):
    """Run work(eps) for each eps, optionally in a pool; results in input order."""
    if manifest.jobs > 1:
        with ThreadPoolExecutor(max_workers=manifest.jobs) as pool:
            return list(pool.map(work, manifest.eps_list))
    return [work(eps) for eps in manifest.eps_list]


def _eps_tag(eps: float) -> str:
    return format(eps, ".10g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fixed(v: float) -> str:
    return f"{v:.15f}"


def cmd_solve(manifest: RunManifest) -> int:
    """Solution tables: per eps, rows x,y_1..y_n at the evaluation grid."""
    xs = manifest.grid()
    cfg = _solver_config(manifest)
    hybrids = _sweep(manifest, lambda eps: _solve_cell(manifest.problem, eps, cfg))
    header = ["x"] + [f"y_{i + 1}" for i in range(manifest.problem.n)]
    for eps, hybrid in zip(manifest.eps_list, hybrids):
        values = hybrid.eval_many(xs)
        rows = [[_fixed(x)] + [_fixed(v) for v in row] for x, row in zip(xs, values)]
        _write_csv(
            manifest.output_dir / f"{manifest.problem.name}_solve_eps{_eps_tag(eps)}.csv",
            header, rows,
        )
    return EXIT_OK


def cmd_convergence(manifest: RunManifest) -> int:
    """Double-mesh tables: one CSV per component, eps rows by N columns,
    followed by the max-over-eps D^N row and the order p^N row."""
    if len(manifest.n_list) < 2:
        raise ConfigError("convergence needs an N list with at least 2 entries")
    problem = manifest.problem
    adaptive = manifest.adaptive

    def solver(eps: float, n: int) -> GridFunction:
        cfg = SolverConfig(initial_mesh_points=n + 1, adaptive=adaptive)
        hybrid = _solve_cell(problem, eps, cfg)
        grid = np.linspace(0.0, 1.0, n + 1)
        return GridFunction(grid=grid, values=hybrid.eval_many(grid))

    report = convergence_table(solver, manifest.eps_list, manifest.n_list,
                               jobs=manifest.jobs)
    if report.failures:
        eps, n, msg = report.failures[0]
        raise SolverFailure(f"eps={eps:g} (N={n}): {msg}")

    header = ["eps"] + [f"N={n}" for n in manifest.n_list]
    for i in range(problem.n):
        rows = []
        for eps in manifest.eps_list:
            cells = report.per_eps[eps]
            rows.append([repr(eps)] + [
                repr(float(cells[n][i])) if n in cells else "" for n in manifest.n_list
            ])
        rows.append(["D^N"] + [repr(float(report.d_n[n][i])) for n in manifest.n_list])
        p_row = ["p^N"]
        for n in manifest.n_list:
            p = float(report.order[n][i]) if n in report.order else float("nan")
            p_row.append("undefined" if np.isnan(p) else repr(p))
        rows.append(p_row)
        _write_csv(
            manifest.output_dir / f"{problem.name}_convergence_y{i + 1}.csv",
            header, rows,
        )
    return EXIT_OK


def _constant_system_data(problem: ProblemConfig):
    """Return (A, f) when the problem has constant coefficients, constant
    forcing, zero BCs, and a single swept diffusion parameter; else None."""
    if any(v != 0.0 for v in problem.bc_left + problem.bc_right):
        return None
    if any(not isinstance(d, str) for d in problem.diffusion):
        return None
    sys = problem.build_system(0.5)
    probe = np.linspace(0.0, 1.0, 11)
    A = sys.coeff_matrix(probe)
    f = sys.forcing_vector(probe)
    if np.max(np.ptp(A, axis=0)) > 1e-14 or np.max(np.ptp(f, axis=0)) > 1e-14:
        return None
    return A[0], f[0]


def cmd_plotdata(manifest: RunManifest) -> int:
    """Dense per-eps solution data, plus |hybrid - oracle| error files when
    the closed-form constant-coefficient oracle applies."""
    xs = manifest.grid()
    cfg = _solver_config(manifest)
    hybrids = _sweep(manifest, lambda eps: _solve_cell(manifest.problem, eps, cfg))
    oracle_data = _constant_system_data(manifest.problem)
    n = manifest.problem.n
    for eps, hybrid in zip(manifest.eps_list, hybrids):
        values = hybrid.eval_many(xs)
        tag = _eps_tag(eps)
        _write_csv(
            manifest.output_dir / f"{manifest.problem.name}_plot_eps{tag}.csv",
            ["x"] + [f"y_{i + 1}" for i in range(n)],
            [[_fixed(x)] + [_fixed(v) for v in row] for x, row in zip(xs, values)],
        )
        if oracle_data is not None:
            A, f = oracle_data
            err = np.abs(values - exact_constant_system(A, f, eps)(xs))
            _write_csv(
                manifest.output_dir / f"{manifest.problem.name}_error_eps{tag}.csv",
                ["x"] + [f"e_{i + 1}" for i in range(n)],
                [[_fixed(x)] + [f"{v:.15e}" for v in row] for x, row in zip(xs, err)],
            )
    return EXIT_OK


_COMMANDS = {
    "solve": (cmd_solve, PAPER_GRID),
    "convergence": (cmd_convergence, 2001),
    "plotdata": (cmd_plotdata, 2001),
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    runner, default_grid = _COMMANDS[args.command]
    try:
        if args.dump_config:
            _sys.stdout.write(dump_config(load_problem(args.problem)))
            return EXIT_OK
        manifest = _build_manifest(args, default_grid)
        return runner(manifest)
    except ConfigError as exc:
        print(f"scem-rd: config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"scem-rd: solver failure: {exc}", file=_sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    _sys.exit(main())

"""Command line entry points: gen, run, validate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, generate, io, render
from .solver import SolverConfig, newton_solve
from .storage import StorageParams


def _build_parser():
    p = argparse.ArgumentParser(
        prog="otstorage",
        description="Semi-discrete optimal transport with per-site "
                    "capacity constraints.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded benchmark instance")
    g.add_argument("--template", choices=generate.TEMPLATES, required=True)
    g.add_argument("--grid", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--h", type=float, default=0.5)
    g.add_argument("--eps", type=float, default=1e-6)
    g.add_argument("--out", required=True, help="instance file to write")

    r = sub.add_parser("run", help="solve an instance file")
    r.add_argument("instance")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--h", type=float, default=None)
    r.add_argument("--eps", type=float, default=None)
    r.add_argument("--zeta", type=float, default=1e-10)
    r.add_argument("--max-iter", type=int, default=500)
    r.add_argument("--psi0", default=None,
                   help="JSON file holding the starting dual vector")
    r.add_argument("--trace", default=None, help="trace CSV path override")
    r.add_argument("--svg", default=None, help="cell SVG path override")

    v = sub.add_parser("validate",
                       help="compare two solutions of one instance")
    v.add_argument("solution_a")
    v.add_argument("solution_b")
    v.add_argument("instance")
    v.add_argument("--out", default=None, help="report file (default stdout)")
    return p


def cmd_gen(args) -> int:
    instance = generate.generate_instance(args.template, args.grid, args.seed)
    io.save_instance(args.out, instance,
                     StorageParams(h=args.h, eps=args.eps))
    return 0


def cmd_run(args) -> int:
    instance, params, psi0 = io.load_instance(args.instance)
    h = args.h if args.h is not None else (params.h if params else 0.5)
    eps = args.eps if args.eps is not None else (params.eps if params else 1e-6)
    params = StorageParams(h=h, eps=eps)
    if args.psi0 is not None:
        with open(args.psi0) as f:
            psi0 = np.asarray(json.load(f), float)
    config = SolverConfig(zeta=args.zeta, max_iter=args.max_iter)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        solution = newton_solve(instance, params, config, psi0)
    except Exception as exc:
        print(json.dumps({"converged": False, "failure": type(exc).__name__,
                          "message": str(exc)}))
        return 1

    io.save_solution(outdir / "solution.json", solution, instance)
    io.save_trace(args.trace or outdir / "trace.csv", solution.trace)
    diagram = instance.diagram(solution.psi)
    render.write_svg(args.svg or outdir / "cells.svg", diagram)
    render.write_convergence_figure(outdir / "convergence.png",
                                    solution.trace, solution.initial_residual)
    render.write_cells_figure(outdir / "cells.png", diagram, solution.wbar)
    if not solution.converged:
        print(json.dumps({"converged": False, "failure": solution.failure,
                          "iterations": solution.iterations}))
        return 1
    print(f"converged in {solution.iterations} iterations; "
          f"outputs in {outdir}")
    return 0


def cmd_validate(args) -> int:
    instance, _, _ = io.load_instance(args.instance)
    sol_a = io.load_solution(args.solution_a, instance)
    sol_b = io.load_solution(args.solution_b, instance)
    mesh = instance.mesh
    diag_a = instance.diagram(sol_a["psi"])
    diag_b = instance.diagram(sol_b["psi"])
    pd = diagnostics.sym_diff_partitions(diag_a, diag_b, mesh)
    report = {
        "schema_version": io.SCHEMA_VERSION,
        "per_cell_sym_diff": pd.per_cell_sym_diff.tolist(),
        "total_sym_diff": pd.total_sym_diff,
        "per_cell_hausdorff": pd.per_cell_hausdorff,
        "l1_weight_gap": pd.l1_weight_gap,
        "stability": [],
    }
    for name, doc in (("a", sol_a), ("b", sol_b)):
        sol = _as_solution(doc, instance)
        sr = diagnostics.stability_report(sol, instance.capacities)
        report["stability"].append({
            "solution": name, "n_sites": sr.n_sites, "n_eps": sr.n_eps,
            "wbar_gap_l1": sr.wbar_gap_l1, "sqrt_h": sr.sqrt_h,
            "mass_gap_l1": sr.mass_gap_l1,
            "classical_mode": sr.classical_mode})
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _as_solution(doc, instance):
    from .solver import Solution
    return Solution(psi=doc["psi"], masses=doc["masses"], wbar=doc["wbar"],
                    eps0=doc["eps0"],
                    initial_residual=doc.get("initial_residual", 0.0),
                    trace=[], converged=doc["converged"],
                    failure=doc.get("failure"),
                    params=StorageParams(h=doc["h"], eps=doc["eps"]))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_validate(args)
    except io.FormatError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

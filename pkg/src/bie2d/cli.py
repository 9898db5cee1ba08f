"""Command-line drivers: solve, eval, refine-study, rescale-study, selftest.

Exit status is 0 when every requested phase met its tolerances, 1 when a phase ran but
missed a tolerance, and 2 on configuration or solver errors (the error class is named
on stderr).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import integrate

from . import testcases
from .config import ProblemConfig, load_config
from .discretization import make_uniform_grid
from .errors import BIEError, ConfigError
from .evaluation import Evaluator, FieldSamples, segment_potential
from .operators import kernel_K, kernel_K_diag
from .output import (load_solution, rows_to_dicts, save_solution, solution_report, write_densities,
                     write_field, write_json, write_rows)
from .reference import exact_inner_density
from .solver import DensitySolution, SolveSettings, solve, solve_adaptive
from .studies import concentric_exact_gamma, refinement_study, rescaling_study, solve_uniform
from .summation import Backend

log = logging.getLogger("bie2d")

EXIT_OK, EXIT_TOLERANCE, EXIT_ERROR = 0, 1, 2


def configure_logging() -> None:
    level = os.environ.get("BIE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s:%(name)s:%(message)s")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="problem configuration (JSON)")
    src.add_argument("--case", choices=sorted(testcases.CASES), help="built-in problem instead of --config")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--backend", choices=("direct", "fmm"), help="summation backend (overrides config)")
    common.add_argument("--fmm-eps", type=float, help="FMM accuracy target (overrides config)")
    common.add_argument("--threads", type=int, help="threads for summation (1 gives bitwise-stable output)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")

    p = argparse.ArgumentParser(prog="bie2d", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve for interface densities")
    ev = sub.add_parser("eval", parents=[common], help="evaluate the potential at the configured points")
    ev.add_argument("--solution", type=Path, help="solution file written by 'solve' (default OUT/solution.npz)")
    sub.add_parser("refine-study", parents=[common], help="uniform M -> 2M refinement ladder")
    sub.add_parser("rescale-study", parents=[common], help="GMRES iterations with and without rescaling")
    sub.add_parser("selftest", parents=[common], help="fast numerical sanity checks")
    return p


def resolve_config(args) -> ProblemConfig:
    if args.config is not None:
        config = load_config(args.config)
    elif args.case is not None:
        config = testcases.CASES[args.case]()
    else:
        raise ConfigError("one of --config or --case is required")
    backend = config.backend
    if args.backend is not None:
        backend = replace(backend, name=args.backend)
    if args.fmm_eps is not None:
        backend = replace(backend, eps=args.fmm_eps)
    if args.threads is not None:
        backend = replace(backend, threads=args.threads)
    config.backend = backend
    return config


def run_solve(config: ProblemConfig) -> tuple[DensitySolution, dict]:
    t0 = time.perf_counter()
    tree = config.build_tree()
    bfuncs = config.boundary_functions()
    t_build = time.perf_counter() - t0
    t0 = time.perf_counter()
    if config.grids is not None:
        sizes = config.grids.sizes(tree.n)
        grids = [make_uniform_grid(c, m, config.grids.shift) for c, m in zip(tree.curves, sizes)]
        sol = solve(tree, bfuncs, grids, config.solver, backend=config.backend)
    else:
        sol = solve_adaptive(tree, bfuncs, config.solver, config.backend)
    timings = {"build": t_build, "solve": time.perf_counter() - t0}
    return sol, timings


def density_errors(config: ProblemConfig, sol: DensitySolution) -> dict:
    """Node errors against the closed-form inner density (concentric reference only)."""
    ref = config.reference
    if ref is None or ref.kind != "concentric" or sol.tree.n != 2:
        return {}
    g = sol.grids[1]
    exact = exact_inner_density(ref.m, ref.sigma, ref.alpha, 2 * np.pi * g.q)
    return {"gamma_inner_max_error": float(np.abs(sol.gamma_on(1) - exact).max())}


def field_errors(config: ProblemConfig, evaluator: Evaluator, samples: FieldSamples) -> dict:
    """Errors against the reference potential with the additive constant matched at the anchor."""
    ref = config.reference
    if ref is None or len(samples) == 0:
        return {}
    anchor = np.atleast_2d(np.asarray(ref.anchor, dtype=float))
    shift = float(ref.u(anchor)[0] - evaluator.evaluate(anchor).u[0])
    ok = samples.method != "outside"
    err = np.abs(samples.u[ok] + shift - ref.u(samples.points[ok]))
    out = {"u_max_error": float(err.max()) if err.size else None, "anchor": list(ref.anchor), "constant": shift}
    for meth in ("naive", "close"):
        sel = samples.method[ok] == meth
        out[f"u_max_error_{meth}"] = float(err[sel].max()) if sel.any() else None
    return out


def cmd_solve(args) -> int:
    config = resolve_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    sol, timings = run_solve(config)
    save_solution(args.out / "solution.npz", config, sol)
    write_densities(args.out / "densities.csv", sol)
    report = {"name": config.name, "command": "solve", **solution_report(sol), "timings": timings,
              "reference": density_errors(config, sol)}
    write_json(args.out / "report.json", report)
    print(f"{config.name}: nodes={sum(report['nodes'])} iterations={sol.gmres.iterations} "
          f"converged={sol.converged} -> {args.out}")
    return EXIT_OK if sol.converged else EXIT_TOLERANCE


def cmd_eval(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.solution or args.out / "solution.npz"
    if path.exists():
        saved, sol = load_solution(path)
        config = resolve_config(args) if (args.config or args.case) else saved
        timings = {}
    else:
        config = resolve_config(args)
        sol, timings = run_solve(config)
        save_solution(path, config, sol)
    if args.threads is not None or args.backend is not None or args.fmm_eps is not None:
        sol.ctx.backend = config.backend
    if config.evaluation is None:
        raise ConfigError("configuration has no 'evaluation' section")
    points = config.evaluation.points()
    t0 = time.perf_counter()
    evaluator = Evaluator(sol)
    samples = evaluator.evaluate(points)
    timings["eval"] = time.perf_counter() - t0
    write_field(args.out / "field.csv", samples)
    counts = {m: int(np.sum(samples.method == m)) for m in ("naive", "close", "outside")}
    report = {"name": config.name, "command": "eval", "points": len(samples), "methods": counts,
              "timings": timings, "reference": field_errors(config, evaluator, samples)}
    write_json(args.out / "eval_report.json", report)
    print(f"{config.name}: evaluated {len(samples)} points {counts} -> {args.out / 'field.csv'}")
    return EXIT_OK


def cmd_refine_study(args) -> int:
    config = resolve_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    tree = config.build_tree()
    exact = None
    ref = config.reference
    if ref is not None and ref.kind == "concentric" and tree.n == 2:
        exact = concentric_exact_gamma(ref.m, ref.sigma, ref.alpha)
    rows = refinement_study(tree, config.boundary_functions(), config.studies.refinement_M,
                            config.studies.refinement_point, config.solver, config.backend, exact)
    write_rows(args.out / "refinement.csv", rows)
    write_json(args.out / "refinement.json", {"name": config.name, "rows": rows_to_dicts(rows)})
    for r in rows:
        print(f"M={r.M:5d}  |du|={r.u_diff:.3e}  max|dgamma|={r.gamma_diff:.3e}  exact={r.gamma_exact_err:.3e}")
    return EXIT_OK


def cmd_rescale_study(args) -> int:
    config = resolve_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    tree = config.build_tree()
    st = config.studies
    rows = rescaling_study(tree, config.boundary_functions(), st.rescaling_sigmas, st.rescaling_M,
                           config.solver.gmres_tol, config.backend)
    write_rows(args.out / "rescaling.csv", rows)
    write_json(args.out / "rescaling.json", {"name": config.name, "rows": rows_to_dicts(rows)})
    for r in rows:
        print(f"sigma={r.sigma:<8g} M={r.M:4d}  rescaled={r.iterations_rescaled:4d}  "
              f"unrescaled={r.iterations_unrescaled:4d}")
    converged = all(r.converged_rescaled and r.converged_unrescaled for r in rows)
    return EXIT_OK if converged else EXIT_TOLERANCE


def selftest_checks(seed: int = 0) -> list[tuple[str, float, float]]:
    """(name, measured, bound) triples; a check passes when measured <= bound."""
    checks = []
    cfg = testcases.concentric()
    tree = cfg.build_tree()
    sol = solve_uniform(tree, cfg.boundary_functions(), 256)
    checks.append(("concentric inner density, M=256", density_errors(cfg, sol)["gamma_inner_max_error"], 1e-8))

    g = make_uniform_grid(tree.curves[0], 128)
    y_in, y_out = np.array([0.3, -0.2]), np.array([1.7, 0.4])
    k = 5
    others = np.arange(g.size) != k
    on = g.weights[others] @ kernel_K(g.points[others], g.normals[others], g.points[k])
    on += g.weights[k] * kernel_K_diag(g.curvature[k])
    ident = max(abs(g.weights @ kernel_K(g.points, g.normals, y_in) - 1.0),
                abs(on - 0.5), abs(g.weights @ kernel_K(g.points, g.normals, y_out)))
    checks.append(("kernel identity 1 / 1/2 / 0 on the unit circle", float(ident), 1e-10))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        x1, x2, x = rng.normal(size=(3, 2))
        g1, g2 = rng.normal(size=2)
        L = np.hypot(*(x2 - x1))

        def f(t):
            p = x1 + t * (x2 - x1)
            return (g1 + t * (g2 - g1)) * np.log(np.hypot(*(x - p))) / (2 * np.pi) * L

        ref, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-14, limit=200)
        worst = max(worst, abs(float(segment_potential(x1, x2, g1, g2, x)) - ref))
    checks.append(("segment potential against adaptive quadrature", worst, 1e-10))

    pts = np.array([[0.0, 1.0], [0.0, 1.0 - 1e-4]])
    samples = Evaluator(sol).evaluate(pts)
    ref_u = cfg.reference.u(pts)
    anchor = np.atleast_2d(cfg.reference.anchor)
    shift = cfg.reference.u(anchor)[0] - Evaluator(sol).evaluate(anchor).u[0]
    checks.append(("close evaluation at the boundary", float(np.abs(samples.u + shift - ref_u).max()), 1e-3))
    return checks


def cmd_selftest(args) -> int:
    ok = True
    for name, value, bound in selftest_checks(args.seed):
        passed = value <= bound
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3e} (bound {bound:.0e})")
    return EXIT_OK if ok else EXIT_TOLERANCE


COMMANDS = {
    "solve": cmd_solve,
    "eval": cmd_eval,
    "refine-study": cmd_refine_study,
    "rescale-study": cmd_rescale_study,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BIEError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

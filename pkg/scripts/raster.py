"""Adaptive solve plus potential on a raster for a named case, saved as an .npz image."""
import argparse
import time
from pathlib import Path

import numpy as np

from bie2d import testcases
from bie2d.evaluation import Evaluator
from bie2d.solver import SolveSettings, solve_adaptive
from bie2d.summation import Backend


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("case", choices=sorted(testcases.CASES))
    ap.add_argument("--n", type=int, default=200, help="raster points per side")
    ap.add_argument("--max-rounds", type=int, default=30)
    ap.add_argument("--backend", choices=["direct", "fmm"], default="fmm")
    ap.add_argument("--fmm-eps", type=float, default=1e-12)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    cfg = testcases.CASES[args.case]()
    backend = Backend(args.backend, args.fmm_eps)
    t0 = time.perf_counter()
    sol = solve_adaptive(cfg.build_tree(), cfg.boundary_functions(), SolveSettings(max_rounds=args.max_rounds),
                         backend)
    t_solve = time.perf_counter() - t0
    xs = np.linspace(-1, 1, args.n)
    X, Y = np.meshgrid(xs, xs)
    t0 = time.perf_counter()
    samples = Evaluator(sol).evaluate(np.column_stack([X.ravel(), Y.ravel()]))
    t_eval = time.perf_counter() - t0
    out = args.out or Path(f"out/{args.case}_raster.npz")
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savez(out, x=xs, y=xs, u=samples.u.reshape(X.shape), method=samples.method.reshape(X.shape))
    print(f"{args.case}: {sum(g.size for g in sol.grids)} nodes, {len(sol.rounds)} rounds, "
          f"resolved={all(sol.resolved)}, solve {t_solve:.1f} s, eval {t_eval:.1f} s -> {out}")


if __name__ == "__main__":
    main()

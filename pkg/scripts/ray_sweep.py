"""Potential error along the ray theta = pi/2 approaching the outer circle, close vs naive evaluation."""
import argparse
import csv
from pathlib import Path

import numpy as np

from bie2d import testcases
from bie2d.discretization import make_uniform_grid
from bie2d.evaluation import Evaluator
from bie2d.solver import solve


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=256)
    ap.add_argument("--shift", type=float, default=0.5, help="node offset s; 0 puts a node on the ray")
    ap.add_argument("--out", type=Path, default=Path("out/ray_sweep.csv"))
    args = ap.parse_args()
    cfg = testcases.concentric()
    tree = cfg.build_tree()
    sol = solve(tree, cfg.boundary_functions(), [make_uniform_grid(c, args.M, args.shift) for c in tree.curves])
    ev = Evaluator(sol)
    pts = testcases.fig4_ray().points()
    anchor = np.atleast_2d(cfg.reference.anchor)
    shift = cfg.reference.u(anchor)[0] - ev.evaluate(anchor).u[0]
    ref = cfg.reference.u(pts)
    close = np.abs(ev.evaluate(pts).u + shift - ref)
    naive = np.abs(ev.evaluate(pts, close=False).u + shift - ref)
    xhat = 1 - np.hypot(*pts.T)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xhat", "close_error", "naive_error"])
        w.writerows(zip(xhat, close, naive))
    print(f"h = {2 * np.pi / args.M:.3e}; max close error {close.max():.2e}, max naive error {naive.max():.2e}")


if __name__ == "__main__":
    main()

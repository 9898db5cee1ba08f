"""Uniform M -> 2M refinement ladder on the concentric problem, written to CSV."""
import argparse
from pathlib import Path

from bie2d import testcases
from bie2d.output import write_rows
from bie2d.studies import concentric_exact_gamma, refinement_study


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    ap.add_argument("--out", type=Path, default=Path("out/refinement.csv"))
    args = ap.parse_args()
    cfg = testcases.concentric()
    rows = refinement_study(cfg.build_tree(), cfg.boundary_functions(), args.ladder,
                            exact_gamma=concentric_exact_gamma(3, 2.0, 0.4))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_rows(args.out, rows)
    for r in rows:
        print(f"M={r.M:5d}  max|dgamma|={r.gamma_diff:.2e}  exact error={r.gamma_exact_err:.2e}  "
              f"iterations={r.iterations}  {r.seconds:.3f} s")


if __name__ == "__main__":
    main()

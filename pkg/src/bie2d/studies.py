"""Grid-refinement and rescaling experiments on uniform grids."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .discretization import make_uniform_grid, trig_interpolate
from .errors import DegenerateInterface
from .evaluation import Evaluator
from .geometry import RegionTree, build_region_tree
from .operators import BoundaryData
from .reference import exact_inner_density
from .solver import DensitySolution, SolveSettings, solve
from .summation import DIRECT, Backend


def solve_uniform(tree: RegionTree, bfuncs, M: int | Sequence[int], settings: SolveSettings | None = None,
                  backend: Backend = DIRECT, shift: float = 0.5) -> DensitySolution:
    """Single solve with ``M`` uniform nodes on every interface (no adaptivity)."""
    sizes = [M] * tree.n if np.isscalar(M) else list(M)
    grids = [make_uniform_grid(c, int(m), shift) for c, m in zip(tree.curves, sizes)]
    return solve(tree, bfuncs, grids, settings, backend=backend)


@dataclass
class RefinementRow:
    M: int
    u: float  # potential at the probe point
    u_diff: float  # |u_M - u_2M| at the probe point, NaN on the last rung
    gamma_diff: float  # max over M-grid nodes of |gamma_M - gamma_2M|, NaN on the last rung
    gamma_exact_err: float  # max node error against a closed form when one is supplied
    iterations: int
    seconds: float


def refinement_study(tree: RegionTree, bfuncs: Sequence[BoundaryData | None], ladder: Sequence[int],
                     point=(1.0, 0.0), settings: SolveSettings | None = None, backend: Backend = DIRECT,
                     exact_gamma=None) -> list[RefinementRow]:
    """Solve on each uniform M and compare neighbouring rungs.

    ``exact_gamma(i, theta)`` (optional) returns the closed-form density on interface ``i``
    at parameter angle ``theta``, or None where no closed form exists.
    """
    ladder = sorted(int(m) for m in ladder)
    point = np.atleast_2d(np.asarray(point, dtype=float))
    sols, us, secs = [], [], []
    for M in ladder:
        t0 = time.perf_counter()
        sol = solve_uniform(tree, bfuncs, M, settings, backend)
        us.append(float(Evaluator(sol).evaluate(point).u[0]))
        secs.append(time.perf_counter() - t0)
        sols.append(sol)
    rows = []
    for k, (M, sol) in enumerate(zip(ladder, sols)):
        u_diff = gamma_diff = np.nan
        if k + 1 < len(ladder):
            fine = sols[k + 1]
            u_diff = abs(us[k] - us[k + 1])
            gamma_diff = max(
                float(np.abs(sol.gamma_on(i) - trig_interpolate(fine.gamma_on(i), sol.grids[i].q,
                                                                fine.grids[i].shift)).max())
                for i in range(tree.n))
        exact_err = np.nan
        if exact_gamma is not None:
            errs = []
            for i in range(tree.n):
                ref = exact_gamma(i, 2 * np.pi * sol.grids[i].q)
                if ref is not None:
                    errs.append(float(np.abs(sol.gamma_on(i) - ref).max()))
            exact_err = max(errs) if errs else np.nan
        rows.append(RefinementRow(M, us[k], u_diff, gamma_diff, exact_err, sol.gmres.iterations, secs[k]))
    return rows


def concentric_exact_gamma(m: int, sigma: float, alpha: float):
    """Closed-form densities for the concentric problem: zero net charge on the outer circle is not
    known in closed form, so only the inner interface (index 1) is returned."""
    def f(i, theta):
        return exact_inner_density(m, sigma, alpha, theta) if i == 1 else None
    return f


@dataclass
class RescalingRow:
    sigma: float
    M: int
    iterations_rescaled: int
    iterations_unrescaled: int
    converged_rescaled: bool
    converged_unrescaled: bool


def alternating_sigma(tree: RegionTree, sigma: float) -> np.ndarray:
    """Conductivity 1 at even nesting depth and ``sigma`` at odd depth."""
    return np.where(tree.depth % 2 == 0, 1.0, float(sigma))


def rescaling_study(tree: RegionTree, bfuncs: Sequence[BoundaryData | None], sigmas: Sequence[float],
                    Ms: Sequence[int], gmres_tol: float = 1e-8, backend: Backend = DIRECT,
                    max_iters: int = 1000) -> list[RescalingRow]:
    """GMRES iteration counts with and without rescaling for alternating conductivities.

    Every solve starts from the zero vector. ``sigma == 1`` makes every interface vanish and
    raises DegenerateInterface.
    """
    rows = []
    for s in sigmas:
        if s == 1.0:
            raise DegenerateInterface("sigma = 1 gives equal conductivities across every interface")
        t = build_region_tree(tree.curves, alternating_sigma(tree, s), n_samples=tree.n_samples)
        for M in Ms:
            its, conv = {}, {}
            for rescale in (True, False):
                settings = SolveSettings(gmres_tol=gmres_tol, gmres_max_iters=max_iters, rescale=rescale)
                sol = solve_uniform(t, bfuncs, M, settings, backend)
                its[rescale], conv[rescale] = sol.gmres.iterations, sol.gmres.converged
            rows.append(RescalingRow(float(s), int(M), its[True], its[False], conv[True], conv[False]))
    return rows

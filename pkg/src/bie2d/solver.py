"""GMRES and the adaptive solve loop for the interface charge densities."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .discretization import (DEFAULT_PANEL_NODES, MAX_PANEL_NODES, InterfaceGrid, SpectralTail,
                             grid_tails, interpolate_on_grid, make_paneled_grid, make_uniform_grid,
                             trig_interpolate)
from .geometry import RegionTree, min_clearance
from .operators import DEFAULT_COMPAT_TOL, BoundaryData, SystemContext, assemble_rhs, interface_charges
from .summation import DIRECT, Backend

log = logging.getLogger(__name__)


@dataclass
class GMRESResult:
    x: np.ndarray
    iterations: int
    residuals: list[float]  # relative residual after each iteration, starting with the initial one
    converged: bool

    @property
    def relative_residual(self) -> float:
        return self.residuals[-1]


def gmres(matvec: Callable[[np.ndarray], np.ndarray], b, tol: float = 1e-8, x0=None,
          maxiter: int = 500, restart: int | None = None) -> GMRESResult:
    """Minimise ``||A x - b||`` over growing Krylov spaces until it drops below ``tol * ||b||``.

    No restarts unless ``restart`` is given. A happy breakdown counts as convergence.
    If ``maxiter`` is hit the best iterate is returned with ``converged=False``.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return GMRESResult(np.zeros(n), 0, [0.0], True)
    r = b - matvec(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    history = [beta / bnorm]
    if beta <= tol * bnorm:
        return GMRESResult(x, 0, history, True)
    m = min(restart or maxiter, maxiter, n)
    total = 0
    while total < maxiter:
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        V[0] = r / beta
        g[0] = beta
        k = 0
        breakdown = False
        for j in range(m):
            w = np.array(matvec(V[j]), dtype=float)  # copy: matvec may return its argument
            total += 1
            for _ in range(2):  # classical Gram-Schmidt, twice, is as stable as modified
                h = V[: j + 1] @ w
                w -= h @ V[: j + 1]
                H[: j + 1, j] += h
            H[j + 1, j] = np.linalg.norm(w)
            for i in range(j):
                a, c = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * a + sn[i] * c
                H[i + 1, j] = -sn[i] * a + cs[i] * c
            denom = np.hypot(H[j, j], H[j + 1, j])
            breakdown = H[j + 1, j] <= 1e-14 * denom
            cs[j], sn[j] = (H[j, j] / denom, H[j + 1, j] / denom) if denom > 0 else (1.0, 0.0)
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            history.append(abs(g[j + 1]) / bnorm)
            if breakdown or abs(g[j + 1]) <= tol * bnorm or total >= maxiter:
                break
        y = solve_triangular(H[:k, :k], g[:k])
        x = x + y @ V[:k]
        r = b - matvec(x)
        beta = np.linalg.norm(r)
        history[-1] = beta / bnorm
        if beta <= tol * bnorm or breakdown:
            return GMRESResult(x, total, history, beta <= tol * bnorm or breakdown)
    return GMRESResult(x, total, history, False)


@dataclass
class SolveSettings:
    gmres_tol: float = 1e-8
    gmres_max_iters: int = 500
    gmres_restart: int | None = None
    adapt_tol: float = 1e-6
    max_rounds: int = 30
    close_threshold: float = 5.0
    initial_nodes: int = 64
    panel_nodes: int = DEFAULT_PANEL_NODES
    max_panel_nodes: int = MAX_PANEL_NODES
    panel_increment: int = 4
    initial_panels: int = 8
    max_total_nodes: int = 400_000
    compat_tol: float = DEFAULT_COMPAT_TOL
    rescale: bool = True

    def __post_init__(self):
        for name in ("gmres_tol", "adapt_tol", "close_threshold", "compat_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


@dataclass
class RoundRecord:
    nodes: list[int]
    iterations: int
    relative_residual: float
    unresolved: list[tuple[int, int]]  # (interface, panel or -1 for uniform)
    refined_intervals: list[tuple[int, float, float]]
    seconds: float


@dataclass(eq=False)
class DensitySolution:
    ctx: SystemContext
    x: np.ndarray  # unknown vector: phi when rescaled, gamma otherwise
    gamma: np.ndarray
    rhs: np.ndarray
    gmres: GMRESResult
    tails: list[list[SpectralTail]]
    resolved: list[bool]
    charges: np.ndarray
    charges_ok: bool
    rounds: list[RoundRecord] = field(default_factory=list)

    @property
    def tree(self) -> RegionTree:
        return self.ctx.tree

    @property
    def grids(self) -> tuple[InterfaceGrid, ...]:
        return self.ctx.grids

    @property
    def phi(self) -> np.ndarray:
        return self.ctx.from_gamma(self.gamma) if not self.ctx.rescale else self.x

    def gamma_on(self, i: int) -> np.ndarray:
        return self.gamma[self.ctx.block(i)]

    def phi_on(self, i: int) -> np.ndarray:
        return self.phi[self.ctx.block(i)]

    @property
    def converged(self) -> bool:
        return self.gmres.converged and all(self.resolved) and self.charges_ok


def _noise_floor(settings: SolveSettings, x) -> float:
    return 10.0 * settings.gmres_tol * float(np.abs(x).max(initial=0.0))


def _assess(ctx: SystemContext, x, settings: SolveSettings):
    tails, resolved, unresolved = [], [], []
    floor = _noise_floor(settings, x)
    for i, g in enumerate(ctx.grids):
        xi = x[ctx.block(i)]
        t = grid_tails(g, xi)
        tol = settings.adapt_tol * float(np.abs(xi).max(initial=0.0)) + floor
        bad = [k for k, tk in enumerate(t) if not tk.resolved(tol)]
        tails.append(t)
        resolved.append(not bad)
        unresolved.extend((i, k if g.scheme == "paneled" else -1) for k in bad)
    return tails, resolved, unresolved


def solve(tree: RegionTree, bfuncs: Sequence[BoundaryData | None], grids: Sequence[InterfaceGrid],
          settings: SolveSettings | None = None, x0=None, backend: Backend = DIRECT) -> DensitySolution:
    """One GMRES solve on fixed grids."""
    settings = settings or SolveSettings()
    ctx = SystemContext(tree, tuple(grids), settings.rescale, backend)
    rhs = assemble_rhs(ctx, bfuncs, settings.compat_tol)
    res = gmres(ctx.apply, rhs, settings.gmres_tol, x0, settings.gmres_max_iters, settings.gmres_restart)
    if not res.converged:
        log.warning("GMRES stopped after %d iterations at relative residual %.2e", res.iterations,
                    res.relative_residual)
    gamma = ctx.to_gamma(res.x)
    tails, resolved, _ = _assess(ctx, res.x, settings)
    charges = interface_charges(ctx, gamma)
    bound = 10.0 * settings.gmres_tol * np.linalg.norm(rhs)
    ok = bool(np.all(np.abs(charges) <= bound)) if bound > 0 else bool(np.all(np.abs(charges) <= 1e-14))
    if not ok:
        log.warning("charge postcondition violated: max |C_i| = %.2e > %.2e", np.abs(charges).max(), bound)
    return DensitySolution(ctx, res.x, gamma, rhs, res, tails, resolved, charges, ok)


def warm_start_interpolate(old_grids: Sequence[InterfaceGrid], old_values: Sequence[np.ndarray],
                           new_grids: Sequence[InterfaceGrid]) -> np.ndarray:
    """Transfer per-interface densities from coarse grids to refined grids."""
    out = []
    for og, ov, ng in zip(old_grids, old_values, new_grids):
        if og.scheme == "uniform":
            out.append(trig_interpolate(ov, ng.q, og.shift))
        else:
            out.append(interpolate_on_grid(og, ov, ng.q))
    return np.concatenate(out)


def initial_panel_breaks(tree: RegionTree, i: int, n0: int = 8, max_depth: int = 16) -> np.ndarray:
    """Equal panels, bisected until each panel is at most half as long as its distance to other curves."""
    curve = tree.curves[i]
    todo = [(k / n0, (k + 1) / n0, 0) for k in range(n0)]
    done = []
    while todo:
        a, b, depth = todo.pop()
        s = np.linspace(a, b, 17)
        pts = curve.point(s)
        arclen = np.sum(np.hypot(*np.diff(pts, axis=0).T))
        clearance = tree.distance_to_others(i, pts).min() if tree.n > 1 else np.inf
        if arclen > 0.5 * clearance and depth < max_depth:
            m = 0.5 * (a + b)
            todo += [(a, m, depth + 1), (m, b, depth + 1)]
        else:
            done.append(a)
    return np.sort(np.array(done))


def initial_grids(tree: RegionTree, settings: SolveSettings, clearance=None) -> list[InterfaceGrid]:
    clearance = min_clearance(tree) if clearance is None else clearance
    grids = []
    for i, c in enumerate(tree.curves):
        h = c.length / settings.initial_nodes
        if clearance[i] < settings.close_threshold * h:
            brk = initial_panel_breaks(tree, i, settings.initial_panels)
            grids.append(make_paneled_grid(c, brk, settings.panel_nodes))
        else:
            grids.append(make_uniform_grid(c, settings.initial_nodes))
    return grids


def refine_grid(grid: InterfaceGrid, flagged: Sequence[int], settings: SolveSettings):
    """Return the refined grid and the parameter intervals that changed."""
    if grid.scheme == "uniform":
        return make_uniform_grid(grid.curve, 2 * grid.size, grid.shift), [(0.0, 1.0)]
    starts, orders, changed = [], [], []
    flagged = set(flagged)
    for p in range(grid.n_panels):
        a, b = grid.breaks[p], grid.breaks[p + 1]
        M = int(grid.orders[p])
        if p not in flagged:
            starts.append(a)
            orders.append(M)
            continue
        changed.append((float(a), float(b)))
        M += settings.panel_increment
        if M > settings.max_panel_nodes:
            for k in range(4):
                starts.append(a + k * (b - a) / 4)
                orders.append(settings.panel_nodes)
        else:
            starts.append(a)
            orders.append(M)
    return make_paneled_grid(grid.curve, starts, orders), changed


def solve_adaptive(tree: RegionTree, bfuncs: Sequence[BoundaryData | None],
                   settings: SolveSettings | None = None, backend: Backend = DIRECT,
                   grids: Sequence[InterfaceGrid] | None = None) -> DensitySolution:
    """Solve, inspect spectral tails, refine unresolved interfaces or panels, repeat."""
    settings = settings or SolveSettings()
    grids = list(grids) if grids is not None else initial_grids(tree, settings)
    x0 = None
    rounds = []
    sol = None
    for rnd in range(settings.max_rounds):
        t0 = time.perf_counter()
        sol = solve(tree, bfuncs, grids, settings, x0, backend)
        _, _, unresolved = _assess(sol.ctx, sol.x, settings)
        record = RoundRecord([g.size for g in grids], sol.gmres.iterations, sol.gmres.relative_residual,
                             unresolved, [], 0.0)
        rounds.append(record)
        log.info("round %d: nodes=%d iterations=%d unresolved=%d", rnd, sum(record.nodes),
                 record.iterations, len(unresolved))
        if not unresolved or rnd == settings.max_rounds - 1:
            record.seconds = time.perf_counter() - t0
            break
        by_iface: dict[int, list[int]] = {}
        for i, k in unresolved:
            by_iface.setdefault(i, []).append(k)
        new = list(grids)
        for i, ks in by_iface.items():
            new[i], changed = refine_grid(grids[i], ks, settings)
            record.refined_intervals.extend((i, a, b) for a, b in changed)
        if sum(g.size for g in new) > settings.max_total_nodes:
            log.warning("refinement stopped: node budget %d exceeded", settings.max_total_nodes)
            record.seconds = time.perf_counter() - t0
            break
        x0 = warm_start_interpolate(grids, sol.ctx.split(sol.x), new)
        grids = new
        record.seconds = time.perf_counter() - t0
    sol.rounds = rounds
    if not all(sol.resolved):
        log.warning("adaptive refinement ended with unresolved interfaces: %s",
                    [i for i, r in enumerate(sol.resolved) if not r])
    return sol

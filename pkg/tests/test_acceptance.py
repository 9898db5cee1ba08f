"""Acceptance criteria, one test each, each printing a single PASS/FAIL line with the measured value.

Run alone with ``pytest tests/test_acceptance.py -v`` (or ``python tests/test_acceptance.py``).
"""
import time

import numpy as np
import pytest
from scipy import integrate

from bie2d import testcases
from bie2d.discretization import gauss_legendre, lagrange_interpolate, make_uniform_grid, trig_interpolate
from bie2d.evaluation import Evaluator, segment_potential
from bie2d.geometry import Circle
from bie2d.operators import SystemContext, apply_system, kernel_K, kernel_K_diag
from bie2d.reference import exact_inner_density
from bie2d.solver import SolveSettings, solve, solve_adaptive
from bie2d.studies import concentric_exact_gamma, refinement_study, rescaling_study, solve_uniform
from bie2d.summation import Backend


@pytest.fixture
def report(capsys):
    def emit(criterion: int, name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        assert ok, detail

    return emit


def _matched(config, ev, points):
    """Solver potential shifted to the reference's additive constant at the configured anchor."""
    anchor = np.atleast_2d(config.reference.anchor)
    shift = config.reference.u(anchor)[0] - ev.evaluate(anchor).u[0]
    return ev.evaluate(points).u + shift


def test_criterion_1_exact_density_oracle(report):
    cfg = testcases.concentric(m=3, sigma=2.0, alpha=0.4)
    solve_uniform(cfg.build_tree(), cfg.boundary_functions(), 16)  # load compiled kernels before timing
    t0 = time.perf_counter()
    tree = cfg.build_tree()
    sol = solve_uniform(tree, cfg.boundary_functions(), 256, backend=Backend("direct", threads=1))
    seconds = time.perf_counter() - t0
    g = sol.grids[1]
    err = np.abs(sol.gamma_on(1) - exact_inner_density(3, 2.0, 0.4, 2 * np.pi * g.q)).max()
    report(1, "concentric inner density at M=256", err <= 1e-8 and seconds <= 2.0,
           f"max error {err:.2e} (<= 1e-8), {seconds:.2f} s (<= 2 s)")


def test_criterion_2_spectral_convergence(report):
    cfg = testcases.concentric()
    rows = refinement_study(cfg.build_tree(), cfg.boundary_functions(), [16, 32, 64, 128],
                            exact_gamma=concentric_exact_gamma(3, 2.0, 0.4))
    errs = [r.gamma_exact_err for r in rows]
    ok = all(b <= a / 100 or b <= 1e-10 for a, b in zip(errs, errs[1:]))
    report(2, "density error per doubling", ok, " -> ".join(f"{e:.1e}" for e in errs))


def test_criterion_3_close_evaluation_to_the_boundary(report):
    cfg = testcases.concentric()
    tree = cfg.build_tree()
    M = 256
    h = 2 * np.pi / M
    pts = testcases.fig4_ray(1e-6, 1e-1, 60).points()
    xhat = 1 - np.hypot(*pts.T)
    ref = cfg.reference.u(pts)
    details, ok = [], True
    # the point (0, 1) sits at q = 1/4: a node when s = 0, midway between nodes when s = 1/2
    for label, s in (("node-aligned", 0.0), ("mid-node", 0.5)):
        sol = solve(tree, cfg.boundary_functions(), [make_uniform_grid(c, M, s) for c in tree.curves])
        ev = Evaluator(sol)
        anchor = np.atleast_2d(cfg.reference.anchor)
        shift = cfg.reference.u(anchor)[0] - ev.evaluate(anchor).u[0]
        close = np.abs(ev.evaluate(pts).u + shift - ref)
        naive = np.abs(ev.evaluate(pts, close=False).u + shift - ref)
        naive_bad = naive[xhat < 5 * h].max()
        ok &= close.max() <= 1e-3 and naive_bad > 1e-3
        details.append(f"{label}: close max {close.max():.2e} (x=0: {close[0]:.2e}), naive max within 5h "
                       f"{naive_bad:.2e}")
    report(3, "line-segment evaluation on the ray", ok, "; ".join(details))


def test_criterion_4_nonconcentric_verification(report):
    cfg = testcases.nonconcentric(m=3, sigma=2.0, alpha=0.4)
    tree = cfg.build_tree()
    sol = solve_adaptive(tree, cfg.boundary_functions(), SolveSettings())
    ev = Evaluator(sol)
    h = max(g.node_spacing().max() for g in sol.grids)
    rng = np.random.default_rng(7)
    cand = rng.uniform(-1, 1, size=(4000, 2))
    cand = cand[np.hypot(*cand.T) < 1]
    far = cand[ev.distance(cand) > 5 * h][:100]
    interior = np.abs(_matched(cfg, ev, far) - cfg.reference.u(far)).max()
    th = 2 * np.pi * rng.uniform(size=100)
    outer = np.column_stack([np.cos(th), np.sin(th)])
    inner = tree.curves[1].point(rng.uniform(size=100))
    on_outer = np.abs(_matched(cfg, ev, outer) - cfg.reference.u(outer)).max()
    on_inner = np.abs(_matched(cfg, ev, inner) - cfg.reference.u(inner)).max()
    ok = len(far) == 100 and interior <= 1e-6 and max(on_outer, on_inner) <= 1e-3
    report(4, "non-concentric against the conformal-map reference", ok,
           f"interior {interior:.2e} (<= 1e-6), outer boundary {on_outer:.2e}, inner boundary {on_inner:.2e} "
           f"(<= 1e-3)")


def test_criterion_5_charge_conservation(report):
    tol = SolveSettings().gmres_tol
    worst, lines = 0.0, []
    for name in ("concentric", "nonconcentric", "six-region", "close-pair", "starfish"):
        cfg = testcases.CASES[name]()
        sol = solve_adaptive(cfg.build_tree(), cfg.boundary_functions())
        assert sol.converged, f"{name} did not converge"
        ratio = np.abs(sol.charges).max() / (10 * tol * np.linalg.norm(sol.rhs))
        worst = max(worst, ratio)
        lines.append(f"{name} {np.abs(sol.charges).max():.1e}")
    report(5, "|C_i| <= 10 tol ||rhs|| after converged solves", worst <= 1.0,
           f"worst ratio to bound {worst:.2f}; " + ", ".join(lines))


def test_criterion_6_kernel_identity(report):
    g = make_uniform_grid(Circle((0.2, -0.1), 1.3), 256)
    y_in, y_out = np.array([0.5, 0.3]), np.array([2.0, 1.5])
    interior = abs(g.weights @ kernel_K(g.points, g.normals, y_in) - 1.0)
    exterior = abs(g.weights @ kernel_K(g.points, g.normals, y_out))
    on = 0.0
    for k in (0, 77, 200):
        rest = np.arange(g.size) != k
        val = g.weights[rest] @ kernel_K(g.points[rest], g.normals[rest], g.points[k])
        on = max(on, abs(val + g.weights[k] * kernel_K_diag(g.curvature[k]) - 0.5))
    worst = max(interior, exterior, on)
    report(6, "integral of K is 1, 1/2, 0", worst <= 1e-10,
           f"interior {interior:.1e}, on-curve {on:.1e}, exterior {exterior:.1e}")


def test_criterion_7_rescaling_study(report):
    cfg = testcases.seven_ellipses()
    rows = rescaling_study(cfg.build_tree(), cfg.boundary_functions(), [1.001, 1.01, 1.1, 2.0, 10.0], [32, 256],
                           gmres_tol=1e-8)
    ok = all(r.iterations_rescaled <= r.iterations_unrescaled for r in rows)
    table = ", ".join(f"s={r.sigma:g}/M={r.M}: {r.iterations_rescaled} vs {r.iterations_unrescaled}" for r in rows)
    report(7, "rescaled <= unrescaled GMRES iterations", ok, table)


def test_criterion_8_backend_equivalence(report):
    cfg = testcases.seven_ellipses()
    tree = cfg.build_tree()
    grids = tuple(make_uniform_grid(c, 1250) for c in tree.curves)  # 10^4 nodes
    direct = SystemContext(tree, grids, True, Backend("direct"))
    fmm = SystemContext(tree, grids, True, Backend("fmm", 1e-9))
    x = np.random.default_rng(3).uniform(-1, 1, direct.size)
    matvec = np.abs(apply_system(direct, x) - apply_system(fmm, x)).max()

    sol = solve(tree, cfg.boundary_functions(), list(grids), backend=Backend("direct"))
    pts = np.random.default_rng(4).uniform(-1, 1, size=(10_000, 2))
    pts = pts[np.hypot(*pts.T) < 0.999]
    u_direct = Evaluator(sol).evaluate(pts).u
    sol.ctx.backend = Backend("fmm", 1e-9)
    u_fmm = Evaluator(sol).evaluate(pts).u
    evaluation = np.nanmax(np.abs(u_direct - u_fmm))
    report(8, "FMM against direct summation on 10^4 nodes", max(matvec, evaluation) <= 1e-9,
           f"matvec {matvec:.1e}, evaluation {evaluation:.1e} (<= 1e-9)")


def _quad_segment(x1, x2, g1, g2, x):
    L = np.hypot(*(x2 - x1))
    t0 = np.clip((x - x1) @ (x2 - x1) / L**2, 0.0, 1.0)

    def f(t):
        p = x1 + t * (x2 - x1)
        return (g1 + t * (g2 - g1)) * np.log(np.hypot(*(x - p))) / (2 * np.pi) * L

    return integrate.quad(f, 0.0, 1.0, points=[t0] if 0 < t0 < 1 else None, epsabs=1e-14, epsrel=1e-13,
                          limit=400)[0]


def test_criterion_9_interpolation_and_quadrature_properties(report):
    rng = np.random.default_rng(11)
    trig = 0.0
    for M in (5, 9, 17, 33):
        K = (M - 1) // 2
        a, b = rng.normal(size=K + 1), rng.normal(size=K + 1)
        k = np.arange(K + 1)

        def f(q):
            q = np.asarray(q)[:, None]
            return (a * np.cos(2 * np.pi * k * q) + b * np.sin(2 * np.pi * k * q)).sum(axis=1)

        s = rng.uniform()
        nodes = (np.arange(M) + s) / M
        x = rng.uniform(size=50)
        trig = max(trig, np.abs(trig_interpolate(f(nodes), x, s) - f(x)).max())
    lag = 0.0
    for M in (4, 8, 16, 24):
        t, _ = gauss_legendre(M)
        c = rng.normal(size=M)
        x = rng.uniform(-1, 1, 50)
        lag = max(lag, np.abs(lagrange_interpolate(t, np.polynomial.polynomial.polyval(t, c), x)
                              - np.polynomial.polynomial.polyval(x, c)).max())
    seg = 0.0
    for _ in range(100):
        x1, x2 = rng.uniform(-1, 1, size=(2, 2))
        x = rng.uniform(-1.5, 1.5, size=2)
        g1, g2 = rng.normal(size=2)
        seg = max(seg, abs(float(segment_potential(x1, x2, g1, g2, x)) - _quad_segment(x1, x2, g1, g2, x)))
    ok = trig <= 1e-13 and lag <= 1e-12 and seg <= 1e-10
    report(9, "interpolation and segment quadrature", ok,
           f"trig {trig:.1e} (<= 1e-13), Lagrange {lag:.1e} (<= 1e-12), segment {seg:.1e} (<= 1e-10)")


def test_criterion_10_excluded(capsys):
    with capsys.disabled():
        print("\n[criterion 10] EXCLUDED  wall-time comparisons against finite-element baselines and "
              "regularity constants are not reproducible here; covered by the property suites above")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

"""Potential evaluation: plain quadrature away from interfaces, line-segment charges near them.

Near an interface the smooth density is replaced by a chain of straight segments
carrying piecewise-linear charge. The endpoint densities are chosen so that each
segment holds exactly the charge of the curved sub-arc it stands in for, and the
potential of each segment is integrated in closed form.

On uniform grids every node owns a *cell* (the parameter interval between the two
neighbouring midpoints), split into two segments through the node. On paneled grids
the cell is the whole panel with segments between consecutive Gauss nodes and the
panel ends. A cell is swapped for its segments when any of its endpoints is within
``CLOSE_FACTOR * h`` of the target.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import cKDTree

from .discretization import InterfaceGrid, gauss_legendre_panel, interpolate_on_grid, trig_shift
from .errors import DegenerateSegment, RankFailure
from .geometry import curve_geometry
from .summation import INV_2PI, layer_potential_sum

CLOSE_FACTOR = 5.0
SEGMENT_FLOOR = 1e-14
# relative size of the alternating-sum mismatch tolerated on closed chains with an even endpoint count
RANK_TOL = 1e-2
SUBARC_NODES = 10
INTERP_CHUNK = 4096


def segment_potential(x1, x2, g1, g2, x) -> np.ndarray:
    """Potential ``(1/2pi) int log|x - y| g(y) ds_y`` of a straight segment with linear density.

    The density is ``g1`` at ``x1`` and ``g2`` at ``x2``. All arguments broadcast over a
    leading axis. The formula is finite everywhere, including on the segment.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x = np.asarray(x, dtype=float)
    e = x2 - x1
    ell = np.hypot(e[..., 0], e[..., 1])
    if np.any(ell < SEGMENT_FLOOR):
        raise DegenerateSegment("segment endpoints coincide")
    ex, ey = e[..., 0] / ell, e[..., 1] / ell
    v1 = x - x1
    v2 = x - x2
    # coordinates along the segment measured from the foot of the perpendicular through x
    s1 = -(v1[..., 0] * ex + v1[..., 1] * ey)
    s2 = s1 + ell
    d = np.abs(v1[..., 0] * ey - v1[..., 1] * ex)
    r1sq = v1[..., 0] ** 2 + v1[..., 1] ** 2
    r2sq = v2[..., 0] ** 2 + v2[..., 1] ** 2
    dsq = ell * (s1 + s2)  # r2^2 - r1^2

    # pivot on the endpoint farther away so the logarithm of the nearer one only enters
    # through a bounded product (r log r -> 0 and r^2 log r -> 0)
    far2 = r2sq >= r1sq
    r_near_sq = np.where(far2, r1sq, r2sq)
    s_near = np.where(far2, s1, s2)
    log_far = 0.5 * np.log(np.where(far2, r2sq, r1sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = 0.5 * np.log1p(np.abs(dsq) / r_near_sq)  # log r_far - log r_near >= 0
    hit = r_near_sq == 0.0
    gap = np.where(hit, 0.0, gap)
    sign = np.where(far2, 1.0, -1.0)  # log r2 - log r1 = sign * gap
    # [s log r]_{s1}^{s2} and [r^2 log r / 2]_{s1}^{s2}
    slogr = ell * log_far + np.where(hit, 0.0, s_near * sign * gap)
    r2logr = 0.5 * (dsq * log_far + np.where(hit, 0.0, r_near_sq * sign * gap))
    atan_term = d * (np.arctan2(s2, d) - np.arctan2(s1, d))
    i0 = slogr - ell + atan_term
    i1 = r2logr - 0.25 * dsq
    slope = (g2 - g1) / ell
    intercept = g1 - slope * s1
    return INV_2PI * (intercept * i0 + slope * i1)


def solve_endpoint_densities(charges, lengths, closed: bool, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Endpoint densities with ``(g_k + g_{k+1}) * lengths[k] / 2 == charges[k]``.

    Closed chains wrap around; an odd count gives a unique answer. An even closed count
    or an open chain leaves the alternating vector free and the minimum-norm solution is
    returned. Raises RankFailure when an even closed system is inconsistent.
    """
    c = 2.0 * np.asarray(charges, dtype=float) / np.asarray(lengths, dtype=float)
    n_seg = len(c)
    if closed:
        n = n_seg
        alt = (-1.0) ** np.arange(n)
        mismatch = alt @ c
        if n % 2 == 1:
            g = np.empty(n)
            g[0] = 0.5 * mismatch
            for k in range(n - 1):
                g[k + 1] = c[k] - g[k]
            return g
        scale = np.abs(c).sum()
        if abs(mismatch) > rank_tol * scale:
            raise RankFailure(f"closed even chain is inconsistent: alternating sum {mismatch:.3e} of {scale:.3e}")
        c = c - mismatch / n * alt
    else:
        n = n_seg + 1
    g = np.zeros(n)
    for k in range(n_seg - (1 if closed else 0)):
        g[k + 1] = c[k] - g[k]
    v = (-1.0) ** np.arange(n)
    return g - (g @ v) / n * v


@dataclass(eq=False)
class SegmentChain:
    """Straight-segment stand-in for one interface.

    Segment ``k`` joins ``start[k]`` and ``end[k]`` with densities ``g_start[k]``, ``g_end[k]``.
    Cell ``c`` owns segments ``seg_ptr[c]:seg_ptr[c+1]``, grid nodes ``node_ptr[c]:node_ptr[c+1]``
    and the endpoint rows listed in ``cell_endpoints[c]``; ``h[c]`` is its local node spacing.
    """

    interface: int
    start: np.ndarray
    end: np.ndarray
    g_start: np.ndarray
    g_end: np.ndarray
    sub_charges: np.ndarray
    endpoints: np.ndarray
    endpoint_cells: np.ndarray  # (n_endpoints, 2), -1 where unused
    seg_ptr: np.ndarray
    node_ptr: np.ndarray
    h: np.ndarray
    _kdtree: cKDTree | None = field(default=None, repr=False)

    @property
    def n_cells(self) -> int:
        return len(self.h)

    @property
    def kdtree(self) -> cKDTree:
        if self._kdtree is None:
            self._kdtree = cKDTree(self.endpoints)
        return self._kdtree

    def segment_charges(self) -> np.ndarray:
        ell = np.hypot(*(self.end - self.start).T)
        return 0.5 * (self.g_start + self.g_end) * ell


def _subarc_charges(grid: InterfaceGrid, gamma, edges) -> np.ndarray:
    """Integral of the interpolated density times arclength over ``[edges[k], edges[k+1]]``."""
    a, b = np.asarray(edges[:-1]), np.asarray(edges[1:])
    t, w = gauss_legendre_panel(0.0, 1.0, SUBARC_NODES)
    q = a[:, None] + (b - a)[:, None] * t[None, :]
    qf = q.ravel()
    vals = np.empty(qf.size)
    for k in range(0, qf.size, INTERP_CHUNK):
        vals[k:k + INTERP_CHUNK] = interpolate_on_grid(grid, gamma, qf[k:k + INTERP_CHUNK])
    speed = curve_geometry(grid.curve, qf % 1.0).speed
    return ((vals * speed).reshape(q.shape) * w[None, :]).sum(axis=1) * (b - a)


def _uniform_subarc_charges(grid: InterfaceGrid, gamma) -> np.ndarray:
    """Sub-arc charges for the half-cells ``[q_m - 1/2M, q_m]`` and ``[q_m, q_m + 1/2M]``, interleaved.

    Every quadrature point is a node plus a fixed offset, so the interpolant is
    evaluated with FFT phase shifts instead of dense barycentric sums.
    """
    M = grid.size
    half = 0.5 / M
    t, w = gauss_legendre_panel(0.0, 1.0, SUBARC_NODES)
    Q = np.zeros(2 * M)
    for side, base in ((0, -half), (1, 0.0)):
        for tj, wj in zip(t, w):
            delta = base + half * tj
            vals = trig_shift(gamma, delta)
            speed = curve_geometry(grid.curve, (grid.q + delta) % 1.0).speed
            Q[side::2] += wj * half * vals * speed
    return Q


def build_segment_chain(grid: InterfaceGrid, gamma, interface: int = 0, rank_tol: float = RANK_TOL) -> SegmentChain:
    """Segment chain with charge-matched endpoint densities for the whole interface."""
    gamma = np.asarray(gamma, dtype=float)
    curve = grid.curve
    if grid.scheme == "uniform":
        M = grid.size
        # endpoints alternate between cell edges and nodes: q = (k/2 + s - 1/2) / M
        qe = (np.arange(2 * M + 1) / 2.0 + grid.shift - 0.5) / M
        Q = _uniform_subarc_charges(grid, gamma)
        pts = curve.point(qe[:-1] % 1.0)
        pts[1::2] = grid.points  # node endpoints coincide with the nodes themselves
        start, end = pts, np.roll(pts, -1, axis=0)
        lengths = np.hypot(*(end - start).T)
        g = solve_endpoint_densities(Q, lengths, closed=True, rank_tol=rank_tol)
        g_start, g_end = g, np.roll(g, -1)
        cells = np.arange(M)
        ep_cells = np.full((2 * M, 2), -1)
        ep_cells[1::2, 0] = cells
        ep_cells[0::2, 0] = cells
        ep_cells[0::2, 1] = (cells - 1) % M
        seg_ptr = 2 * np.arange(M + 1)
        node_ptr = np.arange(M + 1)
        h = grid.weights.copy()
        endpoints = pts
    else:
        starts, ends, gs, ge, Qs, eps, epc = [], [], [], [], [], [], []
        seg_ptr, node_ptr, h = [0], [0], []
        for p in range(grid.n_panels):
            sl = grid.panel_slice(p)
            a, b = grid.breaks[p], grid.breaks[p + 1]
            qe = np.concatenate([[a], grid.q[sl], [b]])
            Q = _subarc_charges(grid, gamma, qe)
            pts = np.vstack([curve.point(np.array([a % 1.0])), grid.points[sl], curve.point(np.array([b % 1.0]))])
            lengths = np.hypot(*np.diff(pts, axis=0).T)
            g = solve_endpoint_densities(Q, lengths, closed=False, rank_tol=rank_tol)
            starts.append(pts[:-1])
            ends.append(pts[1:])
            gs.append(g[:-1])
            ge.append(g[1:])
            Qs.append(Q)
            eps.append(pts)
            epc.append(np.column_stack([np.full(len(pts), p), np.full(len(pts), -1)]))
            seg_ptr.append(seg_ptr[-1] + len(Q))
            node_ptr.append(sl.stop)
            h.append(grid.weights[sl].sum() / grid.orders[p])
        start, end = np.vstack(starts), np.vstack(ends)
        g_start, g_end = np.concatenate(gs), np.concatenate(ge)
        Q = np.concatenate(Qs)
        endpoints = np.vstack(eps)
        ep_cells = np.vstack(epc)
        seg_ptr, node_ptr, h = np.array(seg_ptr), np.array(node_ptr), np.array(h)
    return SegmentChain(interface, start, end, g_start, g_end, Q, endpoints, ep_cells, seg_ptr, node_ptr, h)


@dataclass
class FieldSamples:
    """Evaluated potential at a batch of points.

    ``method`` is ``"naive"``, ``"close"`` or ``"outside"`` (outside the outer boundary, ``u`` is NaN).
    ``dist`` is the sampled distance to the nearest interface.
    """

    points: np.ndarray
    u: np.ndarray
    method: np.ndarray
    dist: np.ndarray

    def __len__(self) -> int:
        return len(self.u)


class Evaluator:
    """Holds per-interface segment chains for one density solution."""

    def __init__(self, solution, close_factor: float = CLOSE_FACTOR, rank_tol: float = RANK_TOL):
        self.solution = solution
        self.close_factor = close_factor
        self.rank_tol = rank_tol
        ctx = solution.ctx
        self.sources = ctx.points
        self.charges = ctx.weights * solution.gamma
        self._chains: dict[int, SegmentChain] = {}
        tree = solution.tree
        samples = tree.samples(tree.root)
        self._outer = shapely.Polygon(samples)
        self._ring = shapely.LinearRing(samples)
        # points on the true curve can sit just outside the sampled polygon; allow twice the sagitta
        n = len(samples)
        mid = tree.curves[tree.root].point((np.arange(n) + 0.5) / n)
        sag = shapely.distance(self._ring, shapely.points(mid)).max()
        self._edge_tol = 2.0 * sag + 1e-12 * tree.curves[tree.root].length

    def chain(self, i: int) -> SegmentChain:
        if i not in self._chains:
            sol = self.solution
            self._chains[i] = build_segment_chain(sol.grids[i], sol.gamma_on(i), i, self.rank_tol)
        return self._chains[i]

    def distance(self, points) -> np.ndarray:
        return self.solution.tree.nearest_curve(points)[0]

    def inside(self, points) -> np.ndarray:
        """True inside the outer boundary or on it (within sampling tolerance)."""
        points = np.atleast_2d(points)
        inside = shapely.contains_xy(self._outer, points[:, 0], points[:, 1])
        near = shapely.dwithin(self._ring, shapely.points(points), self._edge_tol)
        return inside | near

    def naive(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return layer_potential_sum(self.sources, self.charges, points, "G", backend=self.solution.ctx.backend)

    def close_pairs(self, i: int, points) -> tuple[np.ndarray, np.ndarray]:
        """(point, cell) index pairs on interface ``i`` that need segment replacement."""
        ch = self.chain(i)
        radius = self.close_factor * ch.h.max()
        hits = ch.kdtree.query_ball_point(points, radius)
        pi, ei = [], []
        for k, lst in enumerate(hits):
            if lst:
                pi.extend([k] * len(lst))
                ei.extend(lst)
        if not pi:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        pi, ei = np.array(pi), np.array(ei)
        d = np.hypot(*(points[pi] - ch.endpoints[ei]).T)
        pairs = []
        for col in range(2):
            cell = ch.endpoint_cells[ei, col]
            ok = cell >= 0
            ok[ok] &= d[ok] < self.close_factor * ch.h[cell[ok]]
            pairs.append(np.column_stack([pi[ok], cell[ok]]))
        pairs = np.unique(np.vstack(pairs), axis=0)
        return pairs[:, 0], pairs[:, 1]

    def correction(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Close-evaluation correction to the naive sum and a per-point 'touched' flag."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        corr = np.zeros(len(points))
        touched = np.zeros(len(points), dtype=bool)
        ctx = self.solution.ctx
        for i in range(self.solution.tree.n):
            pidx, cells = self.close_pairs(i, points)
            if pidx.size == 0:
                continue
            touched[pidx] = True
            ch = self.chain(i)
            # add segment potentials
            nseg = ch.seg_ptr[cells + 1] - ch.seg_ptr[cells]
            sp = np.repeat(pidx, nseg)
            si = np.concatenate([np.arange(ch.seg_ptr[c], ch.seg_ptr[c + 1]) for c in cells])
            val = segment_potential(ch.start[si], ch.end[si], ch.g_start[si], ch.g_end[si], points[sp])
            corr += np.bincount(sp, val, minlength=len(points))
            # remove the quadrature terms those cells stand in for
            nn = ch.node_ptr[cells + 1] - ch.node_ptr[cells]
            npi = np.repeat(pidx, nn)
            off = ctx.offsets[i]
            nj = off + np.concatenate([np.arange(ch.node_ptr[c], ch.node_ptr[c + 1]) for c in cells])
            r2 = np.sum((points[npi] - ctx.points[nj]) ** 2, axis=1)
            with np.errstate(divide="ignore"):
                g = np.where(r2 > 0, 0.5 * INV_2PI * np.log(r2), 0.0)
            corr -= np.bincount(npi, g * self.charges[nj], minlength=len(points))
        return corr, touched

    def evaluate(self, points, close: bool = True) -> FieldSamples:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        n = len(points)
        u = np.full(n, np.nan)
        method = np.full(n, "outside", dtype=object)
        dist = np.full(n, np.nan)
        if n == 0:
            return FieldSamples(points, u, method.astype(str), dist)
        ins = self.inside(points)
        pts = points[ins]
        dist[:] = self.distance(points)
        if pts.size:
            val = self.naive(pts)
            m = np.full(len(pts), "naive", dtype=object)
            if close:
                corr, touched = self.correction(pts)
                val = val + corr
                m[touched] = "close"
            u[ins] = val
            method[ins] = m
        return FieldSamples(points, u, method.astype(str), dist)


def eval_naive(solution, points) -> FieldSamples:
    """Plain quadrature of the single layer potential at every point."""
    return Evaluator(solution).evaluate(points, close=False)


def eval_close(solution, points, evaluator: Evaluator | None = None) -> FieldSamples:
    """Quadrature with line-segment replacement of every cell within five node spacings."""
    return (evaluator or Evaluator(solution)).evaluate(points, close=True)

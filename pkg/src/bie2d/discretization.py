"""Quadrature grids on interfaces, barycentric interpolation and spectral-tail diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .errors import EmptyPanel
from .geometry import Curve, curve_geometry

DEFAULT_PANEL_NODES = 16
MAX_PANEL_NODES = 24
DEFAULT_SHIFT = 0.5


@lru_cache(maxsize=64)
def gauss_legendre(M: int) -> tuple[np.ndarray, np.ndarray]:
    """M-point Gauss-Legendre nodes and weights on [-1, 1]."""
    t, w = legendre.leggauss(M)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def gauss_legendre_panel(a: float, b: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the M-point rule mapped affinely onto [a, b]."""
    t, w = gauss_legendre(M)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


@dataclass(eq=False)
class InterfaceGrid:
    """Nodes on one curve with cached geometry.

    ``weights`` include the speed, so ``weights @ f`` approximates the arclength
    integral of ``f``. For paneled grids ``breaks`` holds the panel edges
    (length ``P + 1``, ending at 1) and ``orders`` the node count per panel.
    """

    curve: Curve
    scheme: str
    q: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray
    shift: float = DEFAULT_SHIFT
    breaks: np.ndarray | None = None
    orders: np.ndarray | None = None
    _offsets: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.q)

    @property
    def n_panels(self) -> int:
        return 0 if self.breaks is None else len(self.breaks) - 1

    @property
    def panel_offsets(self) -> np.ndarray:
        if self._offsets is None:
            self._offsets = np.concatenate([[0], np.cumsum(self.orders)])
        return self._offsets

    def panel_slice(self, p: int) -> slice:
        off = self.panel_offsets
        return slice(int(off[p]), int(off[p + 1]))

    def node_spacing(self) -> np.ndarray:
        """Local grid spacing h per node: arclength per node, constant across a panel."""
        if self.scheme == "uniform":
            return self.weights.copy()
        h = np.empty(self.size)
        for p in range(self.n_panels):
            sl = self.panel_slice(p)
            h[sl] = self.weights[sl].sum() / self.orders[p]
        return h

    def describe(self) -> dict:
        if self.scheme == "uniform":
            return {"scheme": "uniform", "M": self.size, "shift": self.shift}
        return {"scheme": "paneled", "breaks": self.breaks.tolist(), "orders": self.orders.tolist()}


def _fill(curve: Curve, q: np.ndarray, qweights: np.ndarray, scheme: str, **extra) -> InterfaceGrid:
    g = curve_geometry(curve, q)
    return InterfaceGrid(curve, scheme, q, qweights * g.speed, g.point, g.normal, g.speed, g.curvature, **extra)


def make_uniform_grid(curve: Curve, M: int, s: float = DEFAULT_SHIFT) -> InterfaceGrid:
    """Shifted uniform grid ``q_m = (m + s)/M`` with trapezoid weights."""
    if M < 1:
        raise ValueError("uniform grid needs at least one node")
    q = (np.arange(M) + s) / M
    return _fill(curve, q, np.full(M, 1.0 / M), "uniform", shift=s)


def make_paneled_grid(curve: Curve, breakpoints, M=DEFAULT_PANEL_NODES) -> InterfaceGrid:
    """Composite Gauss-Legendre grid. ``breakpoints`` are the panel starts in [0, 1).

    ``M`` is either one node count for all panels or one per panel.
    """
    starts = np.sort(np.asarray(breakpoints, dtype=float))
    if starts.size == 0:
        starts = np.array([0.0])
    edges = np.append(starts, starts[0] + 1.0)
    orders = np.broadcast_to(np.asarray(M, dtype=int), (len(starts),)).copy()
    if np.any(orders < 1):
        raise ValueError("each panel needs at least one node")
    qs, ws = [], []
    for p in range(len(starts)):
        a, b = edges[p], edges[p + 1]
        if not b > a:
            raise EmptyPanel(f"panel {p} has zero parameter length [{a}, {b})")
        qn, wn = gauss_legendre_panel(a, b, int(orders[p]))
        qs.append(qn)
        ws.append(wn)
    q = np.concatenate(qs)
    return _fill(curve, q, np.concatenate(ws), "paneled", breaks=edges, orders=orders)


def trig_interpolate(values, q_star, s: float = DEFAULT_SHIFT) -> np.ndarray:
    """Barycentric trigonometric interpolant of samples on ``q_m = (m + s)/M``.

    Uses csc for odd M and cot for even M; nodes are returned exactly.
    """
    f = np.asarray(values)
    M = f.shape[0]
    qs = np.atleast_1d(np.asarray(q_star, dtype=float)) % 1.0
    qm = (np.arange(M) + s) / M
    sign = np.where(np.arange(M) % 2 == 0, 1.0, -1.0)
    # unreduced differences keep the csc ratio 1-periodic (num and den flip together)
    diff = qs[:, None] - qm[None, :]
    red = diff - np.rint(diff)
    exact = np.abs(red) < 1e-15
    with np.errstate(divide="ignore", invalid="ignore"):
        F = 1.0 / np.sin(np.pi * diff) if M % 2 else 1.0 / np.tan(np.pi * red)
        Fs = F * sign
        num = Fs @ f
        den = Fs.sum(axis=1)
        out = num / den if f.ndim == 1 else num / den[:, None]
    hit = exact.any(axis=1)
    if hit.any():
        out[hit] = f[np.argmax(exact[hit], axis=1)]
    return out


def trig_shift(values, delta: float) -> np.ndarray:
    """Values of the trigonometric interpolant at every node moved by ``delta``: ``p(q_m + delta)``.

    Same interpolant as :func:`trig_interpolate` (the Nyquist mode of an even grid is
    the symmetric cosine), evaluated in O(M log M) by a phase shift of the spectrum.
    """
    f = np.asarray(values, dtype=float)
    M = f.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M)
    phase = np.exp(2j * np.pi * k * delta)
    if M % 2 == 0:
        phase[M // 2] = np.cos(np.pi * M * delta)
    return np.fft.ifft(np.fft.fft(f) * phase).real


def barycentric_weights(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    d = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(d, 1.0)
    w = 1.0 / np.prod(d, axis=1)
    return w


def lagrange_interpolate(nodes, values, q_star, weights=None) -> np.ndarray:
    """Barycentric Lagrange interpolant of degree ``len(nodes) - 1``."""
    nodes = np.asarray(nodes, dtype=float)
    f = np.asarray(values)
    w = barycentric_weights(nodes) if weights is None else weights
    qs = np.atleast_1d(np.asarray(q_star, dtype=float))
    diff = qs[:, None] - nodes[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = w / diff
        num = c @ f
        den = c.sum(axis=1)
        out = num / den if f.ndim == 1 else num / den[:, None]
    # a target on a node, or so close that w / diff overflows, takes that node's value
    hit = ~np.isfinite(c).all(axis=1)
    if hit.any():
        out[hit] = f[np.argmin(np.abs(diff[hit]), axis=1)]
    return out


def _gl_barycentric(M: int) -> np.ndarray:
    t, w = gauss_legendre(M)
    # closed form for Gauss-Legendre nodes; avoids the overflow of the product formula
    return (-1.0) ** np.arange(M) * np.sqrt((1 - t**2) * w)


def panel_interpolate(grid: InterfaceGrid, p: int, values, q_star) -> np.ndarray:
    """Lagrange-interpolate panel ``p`` of a paneled grid at parameter(s) ``q_star``."""
    sl = grid.panel_slice(p)
    a, b = grid.breaks[p], grid.breaks[p + 1]
    M = int(grid.orders[p])
    t, _ = gauss_legendre(M)
    tq = 2.0 * (np.asarray(q_star, dtype=float) - a) / (b - a) - 1.0
    return lagrange_interpolate(t, np.asarray(values)[sl], tq, weights=_gl_barycentric(M))


def interpolate_on_grid(grid: InterfaceGrid, values, q_star) -> np.ndarray:
    """Evaluate the grid's interpolant (trigonometric or per-panel Lagrange) at ``q_star``."""
    qs = np.atleast_1d(np.asarray(q_star, dtype=float)) % 1.0
    if grid.scheme == "uniform":
        return trig_interpolate(values, qs, grid.shift)
    out = np.empty(qs.shape + np.shape(values)[1:])
    qq = np.where(qs < grid.breaks[0], qs + 1.0, qs)
    panel = np.clip(np.searchsorted(grid.breaks, qq, side="right") - 1, 0, grid.n_panels - 1)
    for p in np.unique(panel):
        sel = panel == p
        out[sel] = panel_interpolate(grid, int(p), values, qq[sel])
    return out


@dataclass(frozen=True)
class SpectralTail:
    """Magnitudes of the two highest retained modes; ``last`` is the top one."""

    last: float
    second_last: float

    @property
    def size(self) -> float:
        return max(self.last, self.second_last)

    def resolved(self, tol: float) -> bool:
        return self.last <= tol and self.second_last <= tol


def fourier_coefficients(values, s: float = DEFAULT_SHIFT) -> np.ndarray:
    """c_k for k = 0..M-1 (FFT ordering) of the interpolant through shifted-grid samples."""
    f = np.asarray(values)
    M = f.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M)
    return np.fft.fft(f) / M * np.exp(-2j * np.pi * k * s / M)


def fourier_tail(values, s: float = DEFAULT_SHIFT) -> SpectralTail:
    f = np.asarray(values)
    M = f.shape[0]
    K = (M - 1) // 2
    if K < 1:
        return SpectralTail(float(np.abs(f).max(initial=0.0)), float(np.abs(f).max(initial=0.0)))
    c = fourier_coefficients(f, s)
    # the mean is never part of the tail, so a three-node grid reports only mode 1
    return SpectralTail(float(abs(c[K])), float(abs(c[K - 1])) if K >= 2 else 0.0)


def legendre_coefficients(values) -> np.ndarray:
    """Legendre coefficients of the interpolant through values at Gauss-Legendre nodes."""
    f = np.asarray(values, dtype=float)
    M = len(f)
    t, w = gauss_legendre(M)
    P = legendre.legvander(t, M - 1)  # (M, M): P_k(t_j)
    return (2 * np.arange(M) + 1) / 2.0 * ((w * f) @ P)


def legendre_tail(values) -> SpectralTail:
    a = legendre_coefficients(values)
    if len(a) < 2:
        return SpectralTail(float(abs(a[-1])), float(abs(a[-1])))
    return SpectralTail(float(abs(a[-1])), float(abs(a[-2])))


def grid_tails(grid: InterfaceGrid, values) -> list[SpectralTail]:
    """One tail for a uniform grid, one per panel for a paneled grid."""
    if grid.scheme == "uniform":
        return [fourier_tail(values, grid.shift)]
    return [legendre_tail(np.asarray(values)[grid.panel_slice(p)]) for p in range(grid.n_panels)]

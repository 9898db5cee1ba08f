"""Smooth closed curves and the nesting tree of constant-conductivity regions.

Every curve is parameterised by ``q`` in ``[0, 1)`` and traversed
counter-clockwise, so the outward normal is the tangent rotated by -90 degrees
and a circle of radius ``R`` has curvature ``+1/R``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
import shapely
from shapely.geometry import LinearRing, Polygon

from .errors import BadSigma, DegenerateSpeed, IntersectingCurves, InvalidCurve, NotNested

TWO_PI = 2.0 * np.pi
DEFAULT_SAMPLES = 4096
# cheap screening resolution for pairwise distances and containment probes
COARSE_SAMPLES = 256
DEFAULT_CLEARANCE_FLOOR = 1e-6
SPEED_FLOOR = 1e-12


class Curve:
    """Base class. Subclasses implement :meth:`derivatives`."""

    kind: str = "abstract"

    def derivatives(self, q):
        """Return position, first and second derivative w.r.t. ``q``, each shaped (n, 2)."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def point(self, q):
        x, _, _ = self.derivatives(q)
        return x

    def samples(self, n: int = DEFAULT_SAMPLES) -> np.ndarray:
        return self.point(np.arange(n) / n)

    @cached_property
    def length(self) -> float:
        # trapezoid on a periodic analytic integrand converges geometrically
        q = np.arange(DEFAULT_SAMPLES) / DEFAULT_SAMPLES
        _, d1, _ = self.derivatives(q)
        return float(np.mean(np.hypot(d1[:, 0], d1[:, 1])))

    @cached_property
    def signed_area(self) -> float:
        q = np.arange(DEFAULT_SAMPLES) / DEFAULT_SAMPLES
        x, d1, _ = self.derivatives(q)
        return float(0.5 * np.mean(x[:, 0] * d1[:, 1] - x[:, 1] * d1[:, 0]))

    def validate(self, n: int = DEFAULT_SAMPLES) -> None:
        """Reject curves with vanishing speed, clockwise orientation or self-crossings."""
        q = np.arange(n) / n
        x, d1, _ = self.derivatives(q)
        speed = np.hypot(d1[:, 0], d1[:, 1])
        if not np.all(np.isfinite(x)) or speed.min() <= SPEED_FLOOR * max(1.0, speed.max()):
            raise DegenerateSpeed(f"{self.kind} curve has (near) zero speed: min |x'(q)| = {speed.min():.3e}")
        if self.signed_area <= 0:
            raise InvalidCurve(f"{self.kind} curve must be counter-clockwise with positive enclosed area")
        if not LinearRing(x).is_simple:
            raise InvalidCurve(f"{self.kind} curve {self.params()} intersects itself")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}


@dataclass(frozen=True, eq=False)
class Circle(Curve):
    center: tuple[float, float]
    radius: float
    kind = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise DegenerateSpeed("circle radius must be positive")

    def derivatives(self, q):
        t = TWO_PI * np.atleast_1d(np.asarray(q, dtype=float))
        c, s = np.cos(t), np.sin(t)
        R = self.radius
        x = np.column_stack([self.center[0] + R * c, self.center[1] + R * s])
        d1 = TWO_PI * R * np.column_stack([-s, c])
        d2 = -(TWO_PI**2) * R * np.column_stack([c, s])
        return x, d1, d2

    def params(self):
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Ellipse(Curve):
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    angle: float = 0.0
    kind = "ellipse"

    def __post_init__(self):
        if min(self.semi_axes) <= 0:
            raise DegenerateSpeed("ellipse semi-axes must be positive")

    def derivatives(self, q):
        t = TWO_PI * np.atleast_1d(np.asarray(q, dtype=float))
        a, b = self.semi_axes
        ca, sa = np.cos(self.angle), np.sin(self.angle)
        rot = np.array([[ca, -sa], [sa, ca]])
        c, s = np.cos(t), np.sin(t)
        local = np.column_stack([a * c, b * s])
        local1 = TWO_PI * np.column_stack([-a * s, b * c])
        local2 = -(TWO_PI**2) * local
        return local @ rot.T + np.asarray(self.center), local1 @ rot.T, local2 @ rot.T

    def params(self):
        return {"center": list(self.center), "semi_axes": list(self.semi_axes), "angle": self.angle}


@dataclass(frozen=True, eq=False)
class PolarCosine(Curve):
    """Star-shaped curve with radius ``A + B cos(C (theta - rotation))``."""

    center: tuple[float, float]
    A: float
    B: float
    C: int
    rotation: float = 0.0
    kind = "polar-cosine"

    def __post_init__(self):
        if int(self.C) != self.C or self.C < 0:
            raise InvalidCurve("polar-cosine C must be a non-negative integer for the curve to close")

    def derivatives(self, q):
        th = TWO_PI * np.atleast_1d(np.asarray(q, dtype=float))
        C = self.C
        arg = C * (th - self.rotation)
        r = self.A + self.B * np.cos(arg)
        r1 = -self.B * C * np.sin(arg)
        r2 = -self.B * C * C * np.cos(arg)
        c, s = np.cos(th), np.sin(th)
        x = np.column_stack([self.center[0] + r * c, self.center[1] + r * s])
        # derivatives w.r.t. theta, then chain rule dtheta/dq = 2 pi
        dx = np.column_stack([r1 * c - r * s, r1 * s + r * c])
        ddx = np.column_stack([r2 * c - 2 * r1 * s - r * c, r2 * s + 2 * r1 * c - r * s])
        return x, TWO_PI * dx, TWO_PI**2 * ddx

    def params(self):
        return {"center": list(self.center), "A": self.A, "B": self.B, "C": self.C, "rotation": self.rotation}


@dataclass(frozen=True, eq=False)
class FourierCurve(Curve):
    """Truncated Fourier series ``a0 + sum_k a_k cos(2 pi k q) + b_k sin(2 pi k q)`` per coordinate.

    Each coefficient list is laid out as ``[a0, a1, b1, a2, b2, ...]``.
    """

    x_coeffs: tuple[float, ...]
    y_coeffs: tuple[float, ...]
    kind = "fourier-parametric"

    @staticmethod
    def _series(coeffs, q):
        coeffs = np.asarray(coeffs, dtype=float)
        f = np.full_like(q, coeffs[0])
        f1 = np.zeros_like(q)
        f2 = np.zeros_like(q)
        for k in range(1, (len(coeffs) - 1) // 2 + 1):
            a = coeffs[2 * k - 1]
            b = coeffs[2 * k] if 2 * k < len(coeffs) else 0.0
            w = TWO_PI * k
            c, s = np.cos(w * q), np.sin(w * q)
            f += a * c + b * s
            f1 += w * (-a * s + b * c)
            f2 += -w * w * (a * c + b * s)
        if len(coeffs) % 2 == 0:
            # trailing cosine without its sine partner
            k = len(coeffs) // 2
            w = TWO_PI * k
            a = coeffs[-1]
            f += a * np.cos(w * q)
            f1 += -w * a * np.sin(w * q)
            f2 += -w * w * a * np.cos(w * q)
        return f, f1, f2

    def derivatives(self, q):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        x, x1, x2 = self._series(self.x_coeffs, q)
        y, y1, y2 = self._series(self.y_coeffs, q)
        return np.column_stack([x, y]), np.column_stack([x1, y1]), np.column_stack([x2, y2])

    def params(self):
        return {"x_coeffs": list(self.x_coeffs), "y_coeffs": list(self.y_coeffs)}


CURVE_KINDS = {cls.kind: cls for cls in (Circle, Ellipse, PolarCosine, FourierCurve)}


def curve_from_dict(d: dict) -> Curve:
    d = dict(d)
    kind = d.pop("kind")
    if kind == "circle":
        return Circle(tuple(d["center"]), float(d["radius"]))
    if kind == "ellipse":
        return Ellipse(tuple(d["center"]), tuple(d["semi_axes"]), float(d.get("angle", 0.0)))
    if kind == "polar-cosine":
        return PolarCosine(tuple(d["center"]), float(d["A"]), float(d["B"]), int(d["C"]), float(d.get("rotation", 0.0)))
    if kind == "fourier-parametric":
        return FourierCurve(tuple(d["x_coeffs"]), tuple(d["y_coeffs"]))
    raise InvalidCurve(f"unknown curve kind {kind!r}")


def curve_point(curve: Curve, q) -> np.ndarray:
    """Position(s) on ``curve``; periodic in ``q`` with period 1. A scalar ``q`` gives one point."""
    p = curve.point(q)
    return p[0] if np.ndim(q) == 0 else p


@dataclass(frozen=True)
class CurveGeometry:
    point: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray


def curve_geometry(curve: Curve, q) -> CurveGeometry:
    """Unit tangent, outward unit normal, speed ``|x'(q)|`` and signed curvature."""
    x, d1, d2 = curve.derivatives(q)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if np.any(speed <= SPEED_FLOOR):
        raise DegenerateSpeed(f"{curve.kind} curve has zero speed at some q")
    tangent = d1 / speed[:, None]
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
    curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    return CurveGeometry(x, tangent, normal, speed, curvature)


def winding_number(polyline: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Winding number of a closed polyline about each point (rounded to an integer)."""
    points = np.atleast_2d(points)
    out = np.empty(len(points), dtype=int)
    for k, p in enumerate(points):
        z = (polyline[:, 0] - p[0]) + 1j * (polyline[:, 1] - p[1])
        dtheta = np.angle(np.roll(z, -1) / z)
        out[k] = int(np.rint(dtheta.sum() / TWO_PI))
    return out


@dataclass(eq=False)
class RegionTree:
    """Nesting structure of the interfaces. Region ``i`` is bounded on the outside by ``curves[i]``.

    Indices are zero-based; ``root`` is the region whose outer curve is the domain boundary.
    """

    curves: tuple[Curve, ...]
    sigma: np.ndarray
    parent: np.ndarray  # parent[root] == -1
    root: int
    n_samples: int = DEFAULT_SAMPLES
    _samples: list = field(default_factory=list, repr=False)
    _kdtrees: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.curves)

    @cached_property
    def children(self) -> list[list[int]]:
        ch = [[] for _ in range(self.n)]
        for i, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(i)
        return ch

    @cached_property
    def descendants(self) -> list[set[int]]:
        out = [set() for _ in range(self.n)]

        def visit(i):
            for c in self.children[i]:
                visit(c)
                out[i] |= {c} | out[c]

        visit(self.root)
        return out

    @cached_property
    def depth(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=int)
        for i in range(self.n):
            j = i
            while self.parent[j] >= 0:
                d[i] += 1
                j = self.parent[j]
        return d

    def parent_sigma(self, i: int) -> float:
        return float(self.sigma[self.parent[i]])

    def samples(self, i: int) -> np.ndarray:
        if not self._samples:
            self._samples.extend(c.samples(self.n_samples) for c in self.curves)
        return self._samples[i]

    def kdtree(self, i: int) -> cKDTree:
        if i not in self._kdtrees:
            self._kdtrees[i] = cKDTree(self.samples(i))
        return self._kdtrees[i]

    @cached_property
    def _coarse(self) -> list[tuple[np.ndarray, cKDTree]]:
        out = []
        for c in self.curves:
            pts = c.samples(COARSE_SAMPLES)
            out.append((pts, cKDTree(pts)))
        return out

    def coarse(self, i: int) -> tuple[np.ndarray, cKDTree]:
        """Coarse samples of curve ``i`` and their KD-tree."""
        return self._coarse[i]

    @cached_property
    def _all_samples(self) -> tuple[cKDTree, np.ndarray]:
        pts = np.vstack([self.samples(i) for i in range(self.n)])
        owner = np.repeat(np.arange(self.n), [len(self.samples(i)) for i in range(self.n)])
        return cKDTree(pts), owner

    def nearest_curve(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Sampled distance from each point to the nearest curve, and that curve's index."""
        kd, owner = self._all_samples
        d, idx = kd.query(np.atleast_2d(points))
        return d, owner[idx]

    @cached_property
    def bboxes(self) -> np.ndarray:
        return np.array([[*self.samples(i).min(axis=0), *self.samples(i).max(axis=0)] for i in range(self.n)])

    def distance_to_others(self, i: int, points: np.ndarray) -> np.ndarray:
        """Sample-based distance from ``points`` to the union of all curves other than ``i``."""
        points = np.atleast_2d(points)
        best = np.full(len(points), np.inf)
        lo, hi = points.min(axis=0), points.max(axis=0)
        order = self._bbox_order(lo, hi, exclude=i)
        for gap, j in order:
            if gap >= best.max():
                break
            d, _ = self.kdtree(j).query(points)
            best = np.minimum(best, d)
        return best

    def _bbox_order(self, lo, hi, exclude):
        b = self.bboxes
        dx = np.maximum(0.0, np.maximum(b[:, 0] - hi[0], lo[0] - b[:, 2]))
        dy = np.maximum(0.0, np.maximum(b[:, 1] - hi[1], lo[1] - b[:, 3]))
        gap = np.hypot(dx, dy)
        return sorted((g, j) for j, g in enumerate(gap) if j != exclude)

    def to_dict(self) -> dict:
        return {"curves": [c.to_dict() for c in self.curves], "sigma": [float(s) for s in self.sigma]}


def _containment(coarse, polygons, bbox) -> np.ndarray:
    """inside[i, j] is True when curve i lies inside curve j."""
    n = len(coarse)
    inside = np.zeros((n, n), dtype=bool)
    for j in range(n):
        # only curves whose bounding box sits inside j's can be enclosed by j
        cand = np.flatnonzero((bbox[:, 0] >= bbox[j, 0]) & (bbox[:, 1] >= bbox[j, 1])
                              & (bbox[:, 2] <= bbox[j, 2]) & (bbox[:, 3] <= bbox[j, 3]))
        cand = cand[cand != j]
        if cand.size == 0:
            continue
        probes = np.empty((len(cand), 2))
        for k, i in enumerate(cand):
            # the sample of i farthest from curve j gives an unambiguous inside test
            d, _ = coarse[j][1].query(coarse[i][0])
            probes[k] = coarse[i][0][np.argmax(d)]
        inside[cand, j] = shapely.contains_xy(polygons[j], probes[:, 0], probes[:, 1])
    return inside


def build_region_tree(curves, sigma, clearance_floor: float = DEFAULT_CLEARANCE_FLOOR,
                      n_samples: int = DEFAULT_SAMPLES) -> RegionTree:
    """Validate the curves and derive the parent relation from point-in-curve tests."""
    curves = tuple(curves)
    sigma = np.asarray(sigma, dtype=float)
    if len(curves) < 1:
        raise NotNested("need at least one curve")
    if sigma.shape != (len(curves),):
        raise BadSigma(f"expected {len(curves)} conductivities, got {sigma.shape}")
    if np.any(~np.isfinite(sigma)) or np.any(sigma <= 0):
        raise BadSigma(f"all conductivities must be positive, got {sigma.tolist()}")
    for c in curves:
        c.validate(n_samples)

    samples = [c.samples(n_samples) for c in curves]
    rings = [LinearRing(s) for s in samples]
    for r in rings:
        shapely.prepare(r)
    coarse = []
    for c in curves:
        pts = c.samples(COARSE_SAMPLES)
        coarse.append((pts, cKDTree(pts)))
    n = len(curves)
    bbox = np.array([[*s.min(axis=0), *s.max(axis=0)] for s in samples])
    for i in range(n):
        for j in range(i + 1, n):
            overlap = not (bbox[i, 2] < bbox[j, 0] or bbox[j, 2] < bbox[i, 0]
                           or bbox[i, 3] < bbox[j, 1] or bbox[j, 3] < bbox[i, 1])
            if not overlap:
                continue
            if rings[i].intersects(rings[j]):
                raise IntersectingCurves(f"curves {i} and {j} cross")
            dc = coarse[j][1].query(coarse[i][0])[0].min()
            slack = (curves[i].length + curves[j].length) / COARSE_SAMPLES
            if dc - slack < clearance_floor:
                d = _closest_pair(curves[i], curves[j], coarse[i][0], coarse[j][1])
                if d < clearance_floor:
                    raise IntersectingCurves(
                        f"curves {i} and {j} are closer than the clearance floor {clearance_floor}")

    inside = _containment(coarse, [Polygon(s) for s in samples], bbox)
    roots = [j for j in range(n) if inside[:, j].sum() == n - 1]
    if len(roots) != 1:
        raise NotNested("no single curve encloses all the others")
    root = roots[0]
    parent = np.full(n, -1, dtype=int)
    for i in range(n):
        if i == root:
            continue
        containers = np.flatnonzero(inside[i])
        # innermost container is the one inside all the other containers
        inner = [j for j in containers if all(inside[j, k] or k == j for k in containers)]
        parent[i] = inner[0]
    tree = RegionTree(curves, sigma, parent, root, n_samples)
    tree._samples.extend(samples)
    tree.__dict__["_coarse"] = coarse
    return tree


def _closest_pair(ci: Curve, cj: Curve, coarse_i: np.ndarray, coarse_tree_j: cKDTree,
                  candidates: int = 3, levels: int = 3, half: int = 16) -> float:
    """Distance between two disjoint curves.

    Starts from the best few coarse sample pairs and zooms in on a local parameter
    window (``2 half + 1`` points per curve, shrinking by ``half`` per level).
    """
    n = len(coarse_i)
    d, idx = coarse_tree_j.query(coarse_i)
    starts = []
    for k in np.argsort(d):
        if all(min(abs(k - s), n - abs(k - s)) > 2 for s, _ in starts):
            starts.append((int(k), int(idx[k])))
        if len(starts) == candidates:
            break
    best = np.inf
    offs = np.arange(-half, half + 1) / half
    for k, l in starts:
        qi, qj = k / n, l / n
        width = 1.0 / n
        for _ in range(levels):
            pi = ci.point((qi + width * offs) % 1.0)
            pj = cj.point((qj + width * offs) % 1.0)
            D = np.hypot(pi[:, None, 0] - pj[None, :, 0], pi[:, None, 1] - pj[None, :, 1])
            a, b = np.unravel_index(np.argmin(D), D.shape)
            qi, qj = qi + width * offs[a], qj + width * offs[b]
            best = min(best, float(D[a, b]))
            width /= half
    return best


def min_clearance(tree: RegionTree) -> np.ndarray:
    """Per-curve distance to the nearest other curve (``inf`` when there is none)."""
    n = tree.n
    out = np.full(n, np.inf)
    for i in range(n):
        pts_i, _ = tree.coarse(i)
        best = np.inf
        lo, hi = tree.bboxes[i, :2], tree.bboxes[i, 2:]
        for gap, j in tree._bbox_order(lo, hi, exclude=i):
            if gap >= best:
                break
            dc = tree.coarse(j)[1].query(pts_i)[0].min()
            slack = (tree.curves[i].length + tree.curves[j].length) / COARSE_SAMPLES
            if dc - slack >= best:
                continue
            best = min(best, _closest_pair(tree.curves[i], tree.curves[j], pts_i, tree.coarse(j)[1]))
        out[i] = best
    return out

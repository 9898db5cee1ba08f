"""Ready-made problem layouts.

Two-circle problems come with closed-form references. The ellipse, star and
many-region layouts are fixed, reproducible stand-ins for the general-curve cases
(their exact coordinates are our own choice).
"""
from __future__ import annotations

import numpy as np

from .config import BoundarySpec, EvaluationRequest, ProblemConfig, ReferenceSpec
from .geometry import Circle, Ellipse, PolarCosine
from .reference import a_from_alpha

WINDOWED = BoundarySpec(0, "windowed_cosine")


def concentric(m: int = 3, sigma: float = 2.0, alpha: float = 0.4) -> ProblemConfig:
    return ProblemConfig(
        curves=[Circle((0.0, 0.0), 1.0), Circle((0.0, 0.0), alpha)],
        sigma=[1.0, sigma],
        boundary=[BoundarySpec(0, "sine_mode", {"m": m})],
        reference=ReferenceSpec("concentric", m, sigma, alpha, (-0.7, 0.0)),
        name="concentric",
    )


def nonconcentric(m: int = 3, sigma: float = 2.0, alpha: float = 0.4) -> ProblemConfig:
    """Unit circle with an inner circle through the origin and ``(a, 0)``, ``a = 2 alpha / (1 + alpha^2)``."""
    a = a_from_alpha(alpha)
    return ProblemConfig(
        curves=[Circle((0.0, 0.0), 1.0), Circle((a / 2, 0.0), a / 2)],
        sigma=[1.0, sigma],
        boundary=[BoundarySpec(0, "conformal_pullback", {"m": m, "alpha": alpha})],
        reference=ReferenceSpec("nonconcentric", m, sigma, alpha, (-0.5, 0.0)),
        name="nonconcentric",
    )


def six_region_layout(sigma=(1, 2, 3, 4, 5, 6)) -> ProblemConfig:
    """Region 0 contains 1 and 2; 2 contains 3 and 4; 3 contains 5."""
    curves = [
        Ellipse((0.0, 0.2), (2.8, 2.1)),
        Ellipse((-1.6, -0.95), (0.55, 0.35), -0.5),
        Ellipse((0.45, 0.55), (1.55, 1.2), 0.4),
        Ellipse((0.55, 1.0), (0.95, 0.5), 0.15),
        Ellipse((0.75, -0.25), (0.5, 0.22)),
        Ellipse((0.75, 1.0), (0.45, 0.22), 0.15),
    ]
    return ProblemConfig(curves, list(map(float, sigma)), [BoundarySpec(0, "sine_mode", {"m": 1})],
                         name="six-region")


def seven_ellipses(sigma: float | None = None) -> ProblemConfig:
    """Unit disk with seven ellipses nested up to three deep.

    With ``sigma`` given, conductivities alternate between 1 and ``sigma`` with nesting depth;
    otherwise each region gets its own value.
    """
    curves = [
        Circle((0.0, 0.0), 1.0),
        Ellipse((-0.3, 0.25), (0.55, 0.4), 0.3),
        Ellipse((-0.3, 0.25), (0.35, 0.22), 0.3),
        Ellipse((-0.28, 0.25), (0.15, 0.1), -0.2),
        Ellipse((0.45, -0.4), (0.35, 0.25), -0.6),
        Ellipse((0.45, -0.4), (0.18, 0.1), 0.4),
        Ellipse((0.55, 0.5), (0.2, 0.12), 1.0),
        Ellipse((-0.35, -0.6), (0.22, 0.12), 0.0),
    ]
    depth = [0, 1, 2, 3, 1, 2, 1, 1]
    if sigma is None:
        sig = [1.0, 2.0, 0.5, 4.0, 3.0, 1.5, 5.0, 0.25]
    else:
        sig = [1.0 if d % 2 == 0 else float(sigma) for d in depth]
    return ProblemConfig(curves, sig, [WINDOWED], name="seven-ellipses")


def starfish() -> ProblemConfig:
    """Star-shaped inclusions, two of them separated by a narrow gap."""
    curves = [
        Circle((0.0, 0.0), 1.0),
        PolarCosine((-0.33, 0.3), 0.25, 0.06, 5),
        PolarCosine((0.31, 0.3), 0.22, 0.05, 3, 0.3),
        PolarCosine((0.0, -0.4), 0.3, 0.07, 4),
        PolarCosine((0.0, -0.4), 0.12, 0.03, 6),
    ]
    return ProblemConfig(curves, [1.0, 3.0, 0.5, 2.0, 6.0], [WINDOWED], name="starfish")


def many_regions(n_groups: int = 77) -> ProblemConfig:
    """Unit disk with ``n_groups`` small ellipses, each holding a smaller circle: ``2 n_groups + 1`` regions."""
    spacing = 0.145
    g = np.arange(-8, 9) * spacing
    X, Y = np.meshgrid(g, g)
    centers = np.column_stack([X.ravel(), Y.ravel()])
    centers = centers[np.hypot(*centers.T) < 0.86]
    centers = centers[np.lexsort((centers[:, 0], np.round(np.hypot(*centers.T), 9)))][:n_groups]
    if len(centers) < n_groups:
        raise ValueError(f"only {len(centers)} sites fit in the disk")
    curves = [Circle((0.0, 0.0), 1.0)]
    sigma = [1.0]
    for k, (x, y) in enumerate(centers):
        ang = 0.7 * k
        curves.append(Ellipse((float(x), float(y)), (0.055, 0.04), ang))
        curves.append(Circle((float(x), float(y)), 0.02))
        sigma += [1.5 + (k % 5), 0.25 * (1 + k % 3)]
    return ProblemConfig(curves, sigma, [WINDOWED], name="many-regions")


def close_pair(gap: float = 0.02) -> ProblemConfig:
    """Two circles of radius 1/4 separated by ``gap`` inside the unit disk."""
    r = 0.25
    c = r + gap / 2
    curves = [Circle((0.0, 0.0), 1.0), Circle((-c, 0.0), r), Circle((c, 0.0), r)]
    return ProblemConfig(curves, [1.0, 4.0, 0.25], [BoundarySpec(0, "sine_mode", {"m": 1})], name="close-pair")


def fig4_ray(xhat_min: float = 1e-6, xhat_max: float = 1e-1, n: int = 60) -> EvaluationRequest:
    """Points ``(r, theta) = (1 - xhat, pi/2)`` for log-spaced ``xhat`` plus the boundary point itself."""
    return EvaluationRequest("ray", {"theta": float(np.pi / 2), "xhat_min": xhat_min, "xhat_max": xhat_max,
                                     "n": n, "include_boundary": True})


CASES = {
    "concentric": concentric,
    "nonconcentric": nonconcentric,
    "six-region": six_region_layout,
    "seven-ellipses": seven_ellipses,
    "starfish": starfish,
    "many-regions": many_regions,
    "close-pair": close_pair,
}

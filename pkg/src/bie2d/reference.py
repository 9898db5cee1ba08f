"""Closed-form two-circle solutions used to verify the solver.

The concentric problem (unit outer circle, inner circle of radius ``alpha``,
conductivity ratio ``sigma``, Neumann datum ``sin(m theta)``) separates in polar
coordinates. A disk automorphism carries it to an inner circle through the origin,
giving a non-concentric reference with the pulled-back Neumann datum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain, OutOfRange


@dataclass(frozen=True)
class ConcentricSolution:
    m: int
    sigma: float  # inner over outer conductivity
    alpha: float  # inner radius

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("angular mode m must be a positive integer")
        if not 0.0 < self.alpha < 1.0:
            raise OutOfRange("inner radius must lie in (0, 1)")
        if self.sigma <= 0:
            raise ValueError("conductivity ratio must be positive")

    @property
    def A(self) -> float:
        m, s, a = self.m, self.sigma, self.alpha
        return (2.0 / m) / (a ** (2 * m) * (s - 1.0) + s + 1.0)

    @property
    def B(self) -> float:
        return self.A * (self.sigma + 1.0) / 2.0

    @property
    def C(self) -> float:
        return self.B - 1.0 / self.m


def concentric_u(sol: ConcentricSolution, r, theta) -> np.ndarray:
    """Potential at polar coordinates ``(r, theta)`` with ``0 <= r <= 1``."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r > 1.0 + 1e-12) or np.any(r < 0):
        raise OutOfDomain("concentric reference is defined for 0 <= r <= 1")
    m = sol.m
    inner = r <= sol.alpha
    with np.errstate(divide="ignore"):
        outer_radial = sol.B * r**m + sol.C * np.where(inner, 1.0, r) ** (-m)
    radial = np.where(inner, sol.A * r**m, outer_radial)
    return radial * np.sin(m * theta)


def concentric_u_xy(sol: ConcentricSolution, points) -> np.ndarray:
    p = np.atleast_2d(points)
    return concentric_u(sol, np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0]))


def mobius(alpha, z):
    """Disk automorphism sending ``alpha`` to the origin."""
    z = np.asarray(z, dtype=complex)
    return (z - alpha) / (1.0 - np.conj(alpha) * z)


def mobius_inverse(alpha, w):
    w = np.asarray(w, dtype=complex)
    return (w + alpha) / (1.0 + np.conj(alpha) * w)


def alpha_from_a(a: float) -> float:
    """Map parameter for which the circle through 0 and ``a`` becomes ``|w| = alpha``."""
    if not 0.0 <= a < 1.0:
        raise OutOfRange("a must lie in [0, 1)")
    p, q = np.sqrt(1.0 + a), np.sqrt(1.0 - a)
    return float((p - q) / (p + q))


def a_from_alpha(alpha: float) -> float:
    return 2.0 * alpha / (1.0 + alpha**2)


def nonconcentric_b1(m: int, alpha: float, theta) -> np.ndarray:
    """Neumann datum on the unit circle: the concentric datum pulled back by the Mobius map."""
    theta = np.asarray(theta, dtype=float)
    w = mobius(alpha, np.exp(1j * theta))
    jac = (1.0 - alpha**2) / (1.0 - 2.0 * alpha * np.cos(theta) + alpha**2)
    return np.sin(m * np.arctan2(w.imag, w.real)) * jac


def nonconcentric_u(sol: ConcentricSolution, points) -> np.ndarray:
    """Reference potential at Cartesian points of the non-concentric layout with map parameter ``sol.alpha``."""
    p = np.atleast_2d(points)
    w = mobius(sol.alpha, p[:, 0] + 1j * p[:, 1])
    return concentric_u(sol, np.minimum(np.abs(w), 1.0), np.angle(w))


def exact_inner_density(m: int, sigma: float, alpha: float, theta) -> np.ndarray:
    """Jump of the radial derivative across the inner circle of the concentric problem."""
    theta = np.asarray(theta, dtype=float)
    amp = 2.0 * alpha ** (m - 1) * (sigma - 1.0) / (alpha ** (2 * m) * (sigma - 1.0) + sigma + 1.0)
    return amp * np.sin(m * theta)

"""Matrix-free integral operator for the layer charge densities.

Row ``i`` (node on interface ``I``) of the discretised system reads

    diag_I * x_i + row_I * ( sum_j K(x_i, y_j) w_j col_J x_j  -  [I == root] * sum_{j in root} w_j col_root x_j )

With ``rescale=True`` the unknowns are the rescaled densities ``phi = gamma / alpha``
(``diag = beta``, ``row = 1``, ``col = alpha``); otherwise the unknowns are the
physical densities ``gamma`` with the conductivity-weighted rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .discretization import InterfaceGrid
from .errors import CoincidentPoints, CompatibilityViolation, DegenerateInterface, IndexMismatch
from .geometry import RegionTree
from .summation import DIRECT, INV_2PI, Backend, layer_potential_sum

COINCIDENT_FLOOR = 1e-14
DEFAULT_COMPAT_TOL = 1e-4

BoundaryData = Callable[[np.ndarray, np.ndarray], np.ndarray]


def kernel_K(x, n_x, y) -> np.ndarray:
    """Adjoint Neumann-Poincare kernel ``(x - y).n(x) / (2 pi |x - y|^2)``."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    if np.any(r2 < COINCIDENT_FLOOR**2):
        raise CoincidentPoints("kernel_K evaluated at coincident points; use kernel_K_diag")
    return INV_2PI * np.sum(d * np.asarray(n_x, dtype=float), axis=-1) / r2


def kernel_K_diag(curvature) -> np.ndarray:
    """Limit of the kernel on the diagonal: curvature / (4 pi)."""
    return np.asarray(curvature, dtype=float) / (4.0 * np.pi)


@dataclass(eq=False)
class SystemContext:
    tree: RegionTree
    grids: tuple[InterfaceGrid, ...]
    rescale: bool = True
    backend: Backend = DIRECT

    def __post_init__(self):
        tree = self.tree
        if len(self.grids) != tree.n:
            raise IndexMismatch(f"{len(self.grids)} grids for {tree.n} interfaces")
        n = tree.n
        sig = tree.sigma
        self.alpha = np.ones(n)
        self.beta = np.full(n, -0.5)
        for i in range(n):
            if i == tree.root:
                continue
            sp, si = tree.parent_sigma(i), sig[i]
            if sp == si:
                raise DegenerateInterface(
                    f"interface {i} separates equal conductivities {si}; remove the curve instead")
            self.alpha[i] = 1.0 - sp / si
            # equals alpha (sp + si) / (2 (sp - si)) without the cancellation when sp is close to si
            self.beta[i] = -0.5 * (sp + si) / si

        self.diag = np.empty(n)
        self.row = np.empty(n)
        self.col = np.empty(n)
        self.rhs_scale = np.empty(n)
        for i in range(n):
            if i == tree.root:
                s1 = sig[i]
                if self.rescale:
                    self.diag[i], self.row[i], self.col[i], self.rhs_scale[i] = -0.5, 1.0, 1.0, 1.0 / s1
                else:
                    self.diag[i], self.row[i], self.col[i], self.rhs_scale[i] = -0.5 * s1, s1, 1.0, 1.0
            else:
                sp, si = tree.parent_sigma(i), sig[i]
                if self.rescale:
                    self.diag[i], self.row[i], self.col[i] = self.beta[i], 1.0, self.alpha[i]
                    self.rhs_scale[i] = 1.0 / (sp - si)
                else:
                    self.diag[i], self.row[i], self.col[i], self.rhs_scale[i] = 0.5 * (sp + si), sp - si, 1.0, 1.0

        sizes = np.array([g.size for g in self.grids])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.iface = np.repeat(np.arange(n), sizes)
        self.points = np.vstack([g.points for g in self.grids])
        self.normals = np.vstack([g.normals for g in self.grids])
        self.weights = np.concatenate([g.weights for g in self.grids])
        self.curvature = np.concatenate([g.curvature for g in self.grids])
        self.is_root = self.iface == tree.root
        self._diag_n = self.diag[self.iface]
        self._row_n = self.row[self.iface]
        self._colw = self.col[self.iface] * self.weights

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def block(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def split(self, x) -> list[np.ndarray]:
        return [np.asarray(x)[self.block(i)] for i in range(self.tree.n)]

    def to_gamma(self, x) -> np.ndarray:
        """Physical charge density from the unknown vector."""
        x = np.asarray(x)
        return self.alpha[self.iface] * x if self.rescale else x.copy()

    def from_gamma(self, gamma) -> np.ndarray:
        gamma = np.asarray(gamma)
        return gamma / self.alpha[self.iface] if self.rescale else gamma.copy()

    def apply(self, x) -> np.ndarray:
        return apply_system(self, x)


def apply_system(ctx: SystemContext, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (ctx.size,):
        raise IndexMismatch(f"vector of shape {x.shape} for a system of size {ctx.size}")
    c = ctx._colw * x
    k = layer_potential_sum(ctx.points, c, ctx.points, "K", ctx.normals, ctx.backend)
    k += c * kernel_K_diag(ctx.curvature)
    k[ctx.is_root] -= c[ctx.is_root].sum()
    return ctx._diag_n * x + ctx._row_n * k


def assemble_dense(ctx: SystemContext) -> np.ndarray:
    """Explicit matrix of :func:`apply_system`; a test oracle, not a solve path."""
    P, Nrm = ctx.points, ctx.normals
    d = P[:, None, :] - P[None, :, :]
    r2 = np.sum(d * d, axis=-1)
    np.fill_diagonal(r2, 1.0)
    Kmat = INV_2PI * np.einsum("ijk,ik->ij", d, Nrm) / r2
    np.fill_diagonal(Kmat, kernel_K_diag(ctx.curvature))
    A = Kmat * ctx._colw[None, :]
    A[np.ix_(ctx.is_root, ctx.is_root)] -= ctx._colw[None, ctx.is_root]
    A *= ctx._row_n[:, None]
    A[np.diag_indices_from(A)] += ctx._diag_n
    return A


def sample_boundary_data(grid: InterfaceGrid, b: BoundaryData | None) -> np.ndarray:
    if b is None:
        return np.zeros(grid.size)
    return np.asarray(b(grid.q, grid.points), dtype=float).reshape(grid.size)


def assemble_rhs(ctx: SystemContext, bfuncs: Sequence[BoundaryData | None],
                 compat_tol: float = DEFAULT_COMPAT_TOL) -> np.ndarray:
    """Sampled, scaled right-hand side.

    Raises CompatibilityViolation if some ``b_i`` has a non-vanishing integral;
    otherwise removes the remaining discrete mean so each block integrates to zero
    under the grid's own quadrature.
    """
    if len(bfuncs) != ctx.tree.n:
        raise IndexMismatch(f"{len(bfuncs)} boundary data for {ctx.tree.n} interfaces")
    out = np.empty(ctx.size)
    for i, (g, b) in enumerate(zip(ctx.grids, bfuncs)):
        vals = sample_boundary_data(g, b)
        total = g.weights @ vals
        scale = g.weights @ np.abs(vals)
        if abs(total) > compat_tol * scale:
            raise CompatibilityViolation(
                f"boundary data on interface {i} integrates to {total:.3e} (|b| integrates to {scale:.3e})")
        vals = vals - total / g.weights.sum()
        out[ctx.block(i)] = vals * ctx.rhs_scale[i]
    return out


def interface_charges(ctx: SystemContext, gamma) -> np.ndarray:
    """Total charge ``C_i`` on each interface under the grid quadrature."""
    gamma = np.asarray(gamma)
    return np.array([ctx.weights[ctx.block(i)] @ gamma[ctx.block(i)] for i in range(ctx.tree.n)])

"""Pairwise sums of the log kernel and its target-normal derivative.

``G(x, y) = log|x - y| / (2 pi)`` and ``K(x, y) = (x - y).n(x) / (2 pi |x - y|^2)``.
Exactly coincident source/target pairs are skipped by every backend; callers add
their own diagonal rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

if numba.config.THREADING_LAYER == "default":
    # the portable layer; avoids probing an outdated system TBB
    numba.config.THREADING_LAYER = "workqueue"

INV_2PI = 1.0 / (2.0 * np.pi)
# below this many pairs the FMM is not worth its setup
FMM_MIN_PAIRS = 250_000


@dataclass(frozen=True)
class Backend:
    name: str = "direct"
    eps: float = 1e-12
    threads: int = 1

    def __post_init__(self):
        if self.name not in ("direct", "fmm"):
            raise ValueError(f"unknown backend {self.name!r}")


DIRECT = Backend()


@njit(parallel=True, cache=True)
def _direct_G(tx, ty, sx, sy, c, out):
    for i in prange(tx.shape[0]):
        acc = 0.0
        for j in range(sx.shape[0]):
            dx = tx[i] - sx[j]
            dy = ty[i] - sy[j]
            r2 = dx * dx + dy * dy
            if r2 != 0.0:
                acc += c[j] * np.log(r2)
        out[i] = 0.5 * acc


@njit(parallel=True, cache=True)
def _direct_K(tx, ty, nx, ny, sx, sy, c, out):
    for i in prange(tx.shape[0]):
        acc = 0.0
        for j in range(sx.shape[0]):
            dx = tx[i] - sx[j]
            dy = ty[i] - sy[j]
            r2 = dx * dx + dy * dy
            if r2 != 0.0:
                acc += c[j] * (dx * nx[i] + dy * ny[i]) / r2
        out[i] = acc


def direct_sum(sources, charges, targets, kernel="G", target_normals=None, threads=1):
    """O(N M) summation. Each target is accumulated sequentially over sources, so the
    result is bitwise identical for any thread count."""
    src = np.asarray(sources, dtype=float)
    tgt = np.asarray(targets, dtype=float)
    c = np.ascontiguousarray(charges, dtype=float)
    out = np.zeros(len(tgt))
    if len(tgt) == 0 or len(src) == 0:
        return out
    sx, sy = np.ascontiguousarray(src[:, 0]), np.ascontiguousarray(src[:, 1])
    tx, ty = np.ascontiguousarray(tgt[:, 0]), np.ascontiguousarray(tgt[:, 1])
    previous = numba.get_num_threads()
    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        if kernel == "G":
            _direct_G(tx, ty, sx, sy, c, out)
        else:
            tn = np.asarray(target_normals, dtype=float)
            _direct_K(tx, ty, np.ascontiguousarray(tn[:, 0]), np.ascontiguousarray(tn[:, 1]), sx, sy, c, out)
    finally:
        numba.set_num_threads(previous)
    return out * INV_2PI


def layer_potential_sum(sources, charges, targets, kernel="G", target_normals=None,
                        backend: Backend = DIRECT, force_fmm: bool = False):
    """Sum ``charges[j] * kernel(targets[i], sources[j])`` over j for every target."""
    if kernel not in ("G", "K"):
        raise ValueError(f"kernel must be 'G' or 'K', got {kernel!r}")
    if kernel == "K" and target_normals is None:
        raise ValueError("kernel K needs target normals")
    src = np.asarray(sources, dtype=float)
    tgt = np.asarray(targets, dtype=float)
    use_fmm = backend.name == "fmm" and (force_fmm or len(src) * len(tgt) >= FMM_MIN_PAIRS)
    if not use_fmm or len(src) == 0 or len(tgt) == 0:
        return direct_sum(src, charges, tgt, kernel, target_normals, backend.threads)
    from .fmm import fmm_sums

    pot, grad, _ = fmm_sums(src, charges, tgt, eps=backend.eps)
    if kernel == "G":
        return pot.real * INV_2PI
    n = np.asarray(target_normals, dtype=float)
    # (x - y).n / |x - y|^2 = Re(n_c / (z - w)) with n_c = n_x + i n_y
    return (grad.real * n[:, 0] - grad.imag * n[:, 1]) * INV_2PI

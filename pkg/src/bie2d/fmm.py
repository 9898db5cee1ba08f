"""Fast multipole summation of 2D Laplace interactions.

Computes, for complex positions ``z_i`` and real charges ``c_j``,

    phi(z_i)  = sum_j c_j log(z_i - w_j)
    dphi(z_i) = sum_j c_j / (z_i - w_j)

skipping exactly coincident pairs. Uses a uniform quadtree on the unit square
with complex Taylor/Laurent expansions of order ``p``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

LEAF_SIZE = 40
MAX_LEVEL = 10
# worst-case convergence ratio of well-separated boxes in a uniform quadtree
SEPARATION_RATIO = 0.55


def order_for(eps: float) -> int:
    return int(min(60, max(6, math.ceil(math.log(eps / 10.0) / math.log(SEPARATION_RATIO)))))


@njit(cache=True)
def _binomials(n):
    B = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        B[i, 0] = 1.0
        for j in range(1, i + 1):
            B[i, j] = B[i - 1, j - 1] + B[i - 1, j]
    return B


@njit(cache=True)
def _p2m(zs, c, box, centers, p, mp):
    for j in range(zs.shape[0]):
        b = box[j]
        dz = zs[j] - centers[b]
        mp[b, 0] += c[j]
        pw = 1.0 + 0.0j
        for k in range(1, p + 1):
            pw *= dz
            mp[b, k] -= c[j] * pw / k


@njit(cache=True)
def _m2m(child_mp, child_centers, parent_idx, parent_centers, p, B, parent_mp):
    for ci in range(child_mp.shape[0]):
        pi = parent_idx[ci]
        z0 = child_centers[ci] - parent_centers[pi]
        a = child_mp[ci]
        parent_mp[pi, 0] += a[0]
        pw = np.empty(p + 1, dtype=np.complex128)
        pw[0] = 1.0
        for l in range(1, p + 1):
            pw[l] = pw[l - 1] * z0
        for l in range(1, p + 1):
            s = -a[0] * pw[l] / l
            for k in range(1, l + 1):
                s += a[k] * pw[l - k] * B[l - 1, k - 1]
            parent_mp[pi, l] += s


@njit(cache=True)
def _m2l_level(tkeys, nside, smap, mp, h, p, B, loc):
    inv = np.empty(p + 2, dtype=np.complex128)
    ak = np.empty(p + 1, dtype=np.complex128)
    for ti in range(tkeys.shape[0]):
        key = tkeys[ti]
        ix = key // nside
        iy = key % nside
        px = ix // 2
        py = iy // 2
        zt = complex((ix + 0.5) * h, (iy + 0.5) * h)
        for nx in range(2 * px - 2, 2 * px + 4):
            if nx < 0 or nx >= nside:
                continue
            for ny in range(2 * py - 2, 2 * py + 4):
                if ny < 0 or ny >= nside:
                    continue
                if abs(nx - ix) <= 1 and abs(ny - iy) <= 1:
                    continue
                si = smap[nx * nside + ny]
                if si < 0:
                    continue
                z0 = complex((nx + 0.5) * h, (ny + 0.5) * h) - zt
                a = mp[si]
                iz = 1.0 / z0
                inv[0] = 1.0
                for k in range(1, p + 2):
                    inv[k] = inv[k - 1] * iz
                # a_k (-1)^k / z0^k
                sgn = -1.0
                for k in range(1, p + 1):
                    ak[k] = a[k] * inv[k] * sgn
                    sgn = -sgn
                s = a[0] * np.log(-z0)
                for k in range(1, p + 1):
                    s += ak[k]
                loc[ti, 0] += s
                for l in range(1, p + 1):
                    s = -a[0] / l
                    for k in range(1, p + 1):
                        s += ak[k] * B[l + k - 1, k - 1]
                    loc[ti, l] += s * inv[l]


@njit(cache=True)
def _l2l(parent_loc, parent_centers, child_parent, child_centers, p, child_loc):
    b = np.empty(p + 1, dtype=np.complex128)
    for ci in range(child_loc.shape[0]):
        pi = child_parent[ci]
        d = child_centers[ci] - parent_centers[pi]
        for k in range(p + 1):
            b[k] = parent_loc[pi, k]
        # Taylor shift by synthetic division
        for j in range(p):
            for k in range(p - 1, j - 1, -1):
                b[k] += d * b[k + 1]
        for k in range(p + 1):
            child_loc[ci, k] += b[k]


@njit(cache=True)
def _l2p(zt, tbox, centers, loc, p, pot, grad):
    for i in range(zt.shape[0]):
        b = tbox[i]
        dz = zt[i] - centers[b]
        s = loc[b, p]
        ds = p * loc[b, p]
        for l in range(p - 1, -1, -1):
            s = s * dz + loc[b, l]
            if l >= 1:
                ds = ds * dz + l * loc[b, l]
        pot[i] += s
        grad[i] += ds


@njit(cache=True)
def _p2p(zt, t_start, t_end, tkeys, zs, c, s_start, smap, nside, pot, grad, excl):
    for ti in range(tkeys.shape[0]):
        key = tkeys[ti]
        ix = key // nside
        iy = key % nside
        for nx in range(ix - 1, ix + 2):
            if nx < 0 or nx >= nside:
                continue
            for ny in range(iy - 1, iy + 2):
                if ny < 0 or ny >= nside:
                    continue
                si = smap[nx * nside + ny]
                if si < 0:
                    continue
                for i in range(t_start[ti], t_end[ti]):
                    z = zt[i]
                    ps = 0.0 + 0.0j
                    gs = 0.0 + 0.0j
                    for j in range(s_start[si], s_start[si + 1]):
                        d = z - zs[j]
                        if d.real == 0.0 and d.imag == 0.0:
                            excl[i] += c[j]
                            continue
                        ps += c[j] * np.log(d)
                        gs += c[j] / d
                    pot[i] += ps
                    grad[i] += gs


def _level_boxes(ix, iy, L, l):
    shift = L - l
    nside = 1 << l
    keys = (ix >> shift) * nside + (iy >> shift)
    uniq = np.unique(keys)
    dense = np.full(nside * nside, -1, dtype=np.int64)
    dense[uniq] = np.arange(len(uniq))
    centers = ((uniq // nside + 0.5) + 1j * (uniq % nside + 0.5)) / nside
    return keys, uniq, dense, centers


def fmm_sums(sources, charges, targets, eps: float = 1e-12, leaf_size: int = LEAF_SIZE):
    """Return (phi, dphi, excluded) with phi = sum c log(z - w), dphi = sum c/(z - w).

    ``excluded`` is the total charge of sources coinciding with each target.
    """
    src = np.asarray(sources, dtype=float)
    tgt = np.asarray(targets, dtype=float)
    c = np.ascontiguousarray(charges, dtype=float)
    allp = np.vstack([src, tgt])
    lo = allp.min(axis=0)
    S = float((allp.max(axis=0) - lo).max()) * (1 + 1e-9) + 1e-300
    zs = ((src[:, 0] - lo[0]) + 1j * (src[:, 1] - lo[1])) / S
    zt = ((tgt[:, 0] - lo[0]) + 1j * (tgt[:, 1] - lo[1])) / S

    p = order_for(eps)
    L = 2
    while L < MAX_LEVEL:
        n = 1 << L
        six = np.minimum((zs.real * n).astype(np.int64), n - 1)
        siy = np.minimum((zs.imag * n).astype(np.int64), n - 1)
        if np.bincount(six * n + siy).max(initial=0) <= leaf_size:
            break
        L += 1
    n = 1 << L
    six = np.minimum((zs.real * n).astype(np.int64), n - 1)
    siy = np.minimum((zs.imag * n).astype(np.int64), n - 1)
    tix = np.minimum((zt.real * n).astype(np.int64), n - 1)
    tiy = np.minimum((zt.imag * n).astype(np.int64), n - 1)

    # sort points by leaf so each leaf owns a contiguous range
    skey_leaf = six * n + siy
    sorder = np.argsort(skey_leaf, kind="stable")
    zs_s, c_s = zs[sorder], c[sorder]
    tkey_leaf = tix * n + tiy
    torder = np.argsort(tkey_leaf, kind="stable")
    zt_s = zt[torder]

    B = _binomials(2 * p + 2)
    s_levels = [_level_boxes(six, siy, L, l) for l in range(L + 1)]
    t_levels = [_level_boxes(tix, tiy, L, l) for l in range(L + 1)]

    # upward pass
    mps = [np.zeros((len(s_levels[l][1]), p + 1), dtype=np.complex128) for l in range(L + 1)]
    skeys_L, _, sdense_L, scent_L = s_levels[L]
    _p2m(zs, c, sdense_L[skeys_L], scent_L, p, mps[L])
    for l in range(L, 2, -1):
        _, uniq, _, cent = s_levels[l]
        nside = 1 << l
        parent_keys = (uniq // nside // 2) * (nside // 2) + (uniq % nside) // 2
        _, _, pdense, pcent = s_levels[l - 1]
        _m2m(mps[l], cent, pdense[parent_keys], pcent, p, B, mps[l - 1])

    # interaction lists and downward pass
    locs = [np.zeros((len(t_levels[l][1]), p + 1), dtype=np.complex128) for l in range(L + 1)]
    for l in range(2, L + 1):
        nside = 1 << l
        _m2l_level(t_levels[l][1], nside, s_levels[l][2], mps[l], 1.0 / nside, p, B, locs[l])
        if l > 2:
            uniq = t_levels[l][1]
            parent_keys = (uniq // nside // 2) * (nside // 2) + (uniq % nside) // 2
            _l2l(locs[l - 1], t_levels[l - 1][3], t_levels[l - 1][2][parent_keys], t_levels[l][3], p, locs[l])

    pot = np.zeros(len(zt_s), dtype=np.complex128)
    grad = np.zeros(len(zt_s), dtype=np.complex128)
    excl = np.zeros(len(zt_s))
    tkeys_L, tuniq, tdense, tcent = t_levels[L]
    _l2p(zt_s, tdense[tkey_leaf[torder]], tcent, locs[L], p, pot, grad)

    s_counts = np.bincount(sdense_L[skey_leaf[sorder]], minlength=len(s_levels[L][1]))
    s_start = np.concatenate([[0], np.cumsum(s_counts)]).astype(np.int64)
    t_counts = np.bincount(tdense[tkey_leaf[torder]], minlength=len(tuniq))
    t_bounds = np.concatenate([[0], np.cumsum(t_counts)]).astype(np.int64)
    _p2p(zt_s, t_bounds[:-1], t_bounds[1:], tuniq, zs_s, c_s, s_start, sdense_L, n, pot, grad, excl)

    out_pot = np.empty_like(pot)
    out_grad = np.empty_like(grad)
    out_excl = np.empty_like(excl)
    out_pot[torder] = pot
    out_grad[torder] = grad
    out_excl[torder] = excl
    # undo the normalisation z -> (z - lo)/S
    out_pot += np.log(S) * (c.sum() - out_excl)
    out_grad /= S
    return out_pot, out_grad, out_excl

"""Compiled direct-sum kernels for the surface and mass-shell transforms.

Each output node is an independent sum, so the outer loops run in parallel
without affecting the result.  Inner sums are accumulated in fixed blocks
that are then combined pairwise, which keeps the order deterministic.
"""

import os

import numba
import numpy as np
from numba import prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # Skip the TBB probe, which warns on hosts with an outdated TBB.
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

BLOCK = 64


@numba.njit(cache=True)
def _tree_sum(buf, count):
    while count > 1:
        half = count // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if count % 2:
            buf[half] = buf[count - 1]
            count = half + 1
        else:
            count = half
    return buf[0]


@numba.njit(parallel=True, cache=True)
def forward_grid(tx, ty, tz, energy, heights, values, idx, out):
    """``out[k, s] = sum_j exp(i(s E_k t_j)) tx[k1,j1] ty[k2,j2] tz[k3,j3] values[j]``.

    ``s`` runs over the sheets ``+1`` (index 0) and ``-1`` (index 1).
    """
    n = tx.shape[0]
    count = idx.shape[0]
    nblk = (count + BLOCK - 1) // BLOCK
    for k1 in prange(n):
        part = np.zeros((2, 4, max(nblk, 1)), dtype=np.complex128)
        for k2 in range(n):
            for k3 in range(n):
                e = energy[k1, k2, k3]
                part[:] = 0
                for j in range(count):
                    b = j // BLOCK
                    w = tx[k1, idx[j, 0]] * ty[k2, idx[j, 1]] * tz[k3, idx[j, 2]]
                    t = heights[j]
                    if t != 0.0:
                        c = np.cos(e * t)
                        s = np.sin(e * t)
                        wp = w * complex(c, s)
                        wm = w * complex(c, -s)
                    else:
                        wp = w
                        wm = w
                    for a in range(4):
                        v = values[j, a]
                        part[0, a, b] += wp * v
                        part[1, a, b] += wm * v
                for sh in range(2):
                    for a in range(4):
                        out[k1, k2, k3, sh, a] = _tree_sum(part[sh, a], nblk) if nblk else 0j


@numba.njit(parallel=True, cache=True)
def backward_grid(cx, cy, cz, energy, heights, weights, idx, out):
    """``out[j] = sum_k cx[k1,j1] cy[k2,j2] cz[k3,j3] (e^{-iE t_j} W+ + e^{iE t_j} W-)``.

    ``cx`` etc. hold ``exp(+i p x)`` per axis; ``weights`` has shape
    (n, n, n, 2, 4).
    """
    n = cx.shape[0]
    count = idx.shape[0]
    for j in prange(count):
        j1 = idx[j, 0]
        j2 = idx[j, 1]
        j3 = idx[j, 2]
        t = heights[j]
        part = np.zeros((4, n), dtype=np.complex128)
        for k1 in range(n):
            for k2 in range(n):
                a12 = cx[k1, j1] * cy[k2, j2]
                for k3 in range(n):
                    w = a12 * cz[k3, j3]
                    if t != 0.0:
                        e = energy[k1, k2, k3]
                        c = np.cos(e * t)
                        s = np.sin(e * t)
                        wm = w * complex(c, -s)
                        wp = w * complex(c, s)
                    else:
                        wm = w
                        wp = w
                    for a in range(4):
                        part[a, k1] += wm * weights[k1, k2, k3, 0, a] + wp * weights[k1, k2, k3, 1, a]
        for a in range(4):
            out[j, a] = _tree_sum(part[a], n)


@numba.njit(parallel=True, cache=True)
def forward_points(pvec, energy, xvec, heights, values, out):
    """Forward sum at arbitrary real momenta ``pvec`` (K, 3) from points (S, 3)."""
    kcount = pvec.shape[0]
    count = xvec.shape[0]
    nblk = (count + BLOCK - 1) // BLOCK
    for k in prange(kcount):
        part = np.zeros((2, 4, max(nblk, 1)), dtype=np.complex128)
        e = energy[k]
        for j in range(count):
            b = j // BLOCK
            ph = pvec[k, 0] * xvec[j, 0] + pvec[k, 1] * xvec[j, 1] + pvec[k, 2] * xvec[j, 2]
            et = e * heights[j]
            wp = complex(np.cos(et - ph), np.sin(et - ph))
            wm = complex(np.cos(-et - ph), np.sin(-et - ph))
            for a in range(4):
                v = values[j, a]
                part[0, a, b] += wp * v
                part[1, a, b] += wm * v
        for sh in range(2):
            for a in range(4):
                out[k, sh, a] = _tree_sum(part[sh, a], nblk) if nblk else 0j


@numba.njit(parallel=True, cache=True)
def backward_points(pvec, energy, weights, x4, out):
    """``out[j] = sum_k e^{i p.x} (e^{-iE x0} W+ + e^{iE x0} W-)`` at points (J, 4)."""
    kcount = pvec.shape[0]
    jcount = x4.shape[0]
    nblk = (kcount + BLOCK - 1) // BLOCK
    for j in prange(jcount):
        part = np.zeros((4, max(nblk, 1)), dtype=np.complex128)
        t = x4[j, 0]
        for k in range(kcount):
            b = k // BLOCK
            ph = pvec[k, 0] * x4[j, 1] + pvec[k, 1] * x4[j, 2] + pvec[k, 2] * x4[j, 3]
            et = energy[k] * t
            wm = complex(np.cos(ph - et), np.sin(ph - et))
            wp = complex(np.cos(ph + et), np.sin(ph + et))
            for a in range(4):
                part[a, b] += wm * weights[k, 0, a] + wp * weights[k, 1, a]
        for a in range(4):
            out[j, a] = _tree_sum(part[a], nblk) if nblk else 0j

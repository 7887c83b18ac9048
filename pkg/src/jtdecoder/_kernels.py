"""Compiled inner loop for the exhaustive support scan.

For each size-``l`` support ``J`` (lexicographic order) the residual energy
``||y||^2 - b_J^T G_J^{-1} b_J`` is evaluated from the Gram matrix
``G = A^T A`` and ``b = A^T y`` with a small Cholesky factorisation. This is
a screening value: the decoder re-evaluates every support whose verdict or
selection could hinge on rounding through the QR path in ``subspace``.
"""
import math

import numpy as np
from numba import njit


def binomial_table(m: int, l: int) -> np.ndarray:  # noqa: E741
    """``table[a, k] = C(a, k)`` for ``0 <= a <= m``, ``0 <= k <= l``."""
    t = np.zeros((m + 1, l + 1), dtype=np.int64)
    t[:, 0] = 1
    for a in range(1, m + 1):
        for k in range(1, min(a, l) + 1):
            t[a, k] = t[a - 1, k - 1] + t[a - 1, k]
    return t


@njit(cache=True, nogil=True)
def unrank_into(rank, m, l, binom, out):  # noqa: E741
    c = 0
    for i in range(l):
        while True:
            cnt = binom[m - c - 1, l - i - 1]
            if rank < cnt:
                break
            rank -= cnt
            c += 1
        out[i] = c
        c += 1


@njit(cache=True, nogil=True)
def scan_chunk(G, b, yy, n, l, start, count, binom, target, pivot_tol, dev_out, flag_out):  # noqa: E741
    """Fill ``dev_out[t]`` for supports ``start .. start+count-1``.

    ``flag_out[t]`` is set when the Cholesky pivots indicate possible rank
    deficiency; those entries hold ``inf`` and must be resolved exactly.
    """
    m = G.shape[0]
    idx = np.empty(l, dtype=np.int64)
    unrank_into(start, m, l, binom, idx)
    Lc = np.empty((l, l))
    z = np.empty(l)
    for t in range(count):
        maxdiag = 0.0
        for i in range(l):
            g = G[idx[i], idx[i]]
            if g > maxdiag:
                maxdiag = g
        ok = maxdiag > 0.0
        i = 0
        while ok and i < l:
            for j in range(i + 1):
                s = G[idx[i], idx[j]]
                for k in range(j):
                    s -= Lc[i, k] * Lc[j, k]
                if i == j:
                    if s <= pivot_tol * maxdiag:
                        ok = False
                        break
                    Lc[i, i] = math.sqrt(s)
                else:
                    Lc[i, j] = s / Lc[j, j]
            i += 1
        if ok:
            zz = 0.0
            for i in range(l):
                s = b[idx[i]]
                for k in range(i):
                    s -= Lc[i, k] * z[k]
                z[i] = s / Lc[i, i]
                zz += z[i] * z[i]
            res = yy - zz
            if res < 0.0:
                res = 0.0
            dev_out[t] = abs(res / n - target)
            flag_out[t] = False
        else:
            dev_out[t] = np.inf
            flag_out[t] = True

        # lexicographic successor
        i = l - 1
        while i >= 0 and idx[i] == m - l + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, l):
            idx[j] = idx[j - 1] + 1

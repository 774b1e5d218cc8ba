"""
Compiled Slater-Condon kernels over bitmask determinants.

Determinants are (alpha, beta) int64 bitmask pairs; integrals are h[p, q] and the chemist
tensor V[p, q, r, s] = (pq|rs). Creation operators are ordered alpha before beta, each in
ascending orbital order, so beta excitations never pick up a sign from the alpha string.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _lowest(x):
    k = 0
    while not (x >> k) & 1:
        k += 1
    return k


@njit(cache=True)
def _sign(mask, i, a):
    lo = min(i, a)
    hi = max(i, a)
    between = mask & ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return -1.0 if _popcount(between) & 1 else 1.0


@njit(cache=True)
def _diagonal(h, V, a, b, n_orb):
    e = 0.0
    for k in range(n_orb):
        nak = (a >> k) & 1
        nbk = (b >> k) & 1
        e += (nak + nbk) * h[k, k]
        for l in range(n_orb):
            nal = (a >> l) & 1
            nbl = (b >> l) & 1
            e += 0.5 * ((nak + nbk) * (nal + nbl) * V[k, k, l, l] - (nak * nal + nbk * nbl) * V[k, l, l, k])
    return e


@njit(cache=True)
def _single(h, V, same, other, i, a, n_orb):
    value = h[a, i]
    for k in range(n_orb):
        if (same >> k) & 1:
            value += V[a, i, k, k] - V[a, k, k, i]
        if (other >> k) & 1:
            value += V[a, i, k, k]
    return value


@njit(cache=True)
def _same_spin_double(V, ket, removed, created):
    i1 = _lowest(removed)
    i2 = _lowest(removed & (removed - 1))
    a1 = _lowest(created)
    a2 = _lowest(created & (created - 1))
    s1 = _sign(ket, i1, a1)
    mid = ket ^ (1 << i1) ^ (1 << a1)
    s2 = _sign(mid, i2, a2)
    return s1 * s2 * (V[a1, i1, a2, i2] - V[a1, i2, a2, i1])


@njit(cache=True)
def matrix_element(h, V, ai, bi, aj, bj, n_orb):
    """<(ai, bi)| H |(aj, bj)> without the core energy."""
    xa = ai ^ aj
    xb = bi ^ bj
    da = _popcount(xa) // 2
    db = _popcount(xb) // 2
    if da + db > 2:
        return 0.0
    if da + db == 0:
        return _diagonal(h, V, aj, bj, n_orb)
    if da == 1 and db == 0:
        i = _lowest(aj & xa)
        a = _lowest(ai & xa)
        return _sign(aj, i, a) * _single(h, V, aj, bj, i, a, n_orb)
    if db == 1 and da == 0:
        i = _lowest(bj & xb)
        a = _lowest(bi & xb)
        return _sign(bj, i, a) * _single(h, V, bj, aj, i, a, n_orb)
    if da == 2:
        return _same_spin_double(V, aj, aj & xa, ai & xa)
    if db == 2:
        return _same_spin_double(V, bj, bj & xb, bi & xb)
    i = _lowest(aj & xa)
    a = _lowest(ai & xa)
    j = _lowest(bj & xb)
    b = _lowest(bi & xb)
    return _sign(aj, i, a) * _sign(bj, j, b) * V[a, i, b, j]


@njit(cache=True)
def connected_pairs(alpha, beta, first_new, h, V, n_orb):
    """
    Upper-triangle (row <= col) nonzero couplings for every column col >= first_new.

    Appending determinants to a basis only needs the pairs touching the new columns.
    """
    n = alpha.shape[0]
    count = 0
    for j in range(first_new, n):
        for i in range(j + 1):
            if _popcount(alpha[i] ^ alpha[j]) + _popcount(beta[i] ^ beta[j]) <= 4:
                count += 1
    rows = np.empty(count, np.int64)
    cols = np.empty(count, np.int64)
    vals = np.empty(count, np.float64)
    k = 0
    for j in range(first_new, n):
        for i in range(j + 1):
            if _popcount(alpha[i] ^ alpha[j]) + _popcount(beta[i] ^ beta[j]) <= 4:
                rows[k] = i
                cols[k] = j
                vals[k] = matrix_element(h, V, alpha[i], beta[i], alpha[j], beta[j], n_orb)
                k += 1
    return rows, cols, vals


@njit(cache=True)
def diagonal_elements(alpha, beta, h, V, n_orb):
    n = alpha.shape[0]
    out = np.empty(n, np.float64)
    for k in range(n):
        out[k] = _diagonal(h, V, alpha[k], beta[k], n_orb)
    return out

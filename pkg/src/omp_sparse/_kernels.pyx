# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled subset scan for exact restricted isometry constants.

Enumerates every K-subset of columns in lexicographic order, forms the KxK
Gram block from a precomputed Gram matrix and tracks the largest isometry
defect max(lambda_max - 1, 1 - lambda_min). Eigenvalues of blocks with
K >= 3 come from a cyclic Jacobi iteration; K = 1, 2 are closed form.
"""
import numpy as np
from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, free

cdef int MAX_SWEEPS = 60
cdef double EPS_STOP = 1e-16


cdef inline void _extremes_2x2(double a, double b, double d,
                               double* lmin, double* lmax) noexcept nogil:
    cdef double mean = 0.5 * (a + d)
    cdef double half = 0.5 * (a - d)
    cdef double rad = sqrt(half * half + b * b)
    lmin[0] = mean - rad
    lmax[0] = mean + rad


cdef void _jacobi_extremes(double* a, int k,
                           double* lmin, double* lmax) noexcept nogil:
    # a is a row-major k*k symmetric matrix; it is overwritten.
    cdef int sweep, p, q, r
    cdef double apq, app, aqq, theta, t, c, s, tau, g, h, off, scale
    for sweep in range(MAX_SWEEPS):
        off = 0.0
        scale = 0.0
        for p in range(k):
            scale += fabs(a[p * k + p])
            for q in range(p + 1, k):
                off += fabs(a[p * k + q])
        # off-diagonal mass below EPS_STOP * trace moves eigenvalues by less than that
        if off <= EPS_STOP * scale:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p * k + q]
                app = a[p * k + p]
                aqq = a[q * k + q]
                g = 100.0 * fabs(apq)
                if sweep > 3 and fabs(app) + g == fabs(app) and fabs(aqq) + g == fabs(aqq):
                    a[p * k + q] = 0.0
                    a[q * k + p] = 0.0
                    continue
                if apq == 0.0:
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p * k + p] = app - t * apq
                a[q * k + q] = aqq + t * apq
                a[p * k + q] = 0.0
                a[q * k + p] = 0.0
                for r in range(k):
                    if r == p or r == q:
                        continue
                    g = a[r * k + p]
                    h = a[r * k + q]
                    a[r * k + p] = g - s * (h + tau * g)
                    a[p * k + r] = a[r * k + p]
                    a[r * k + q] = h + s * (g - tau * h)
                    a[q * k + r] = a[r * k + q]
    lmin[0] = a[0]
    lmax[0] = a[0]
    for p in range(1, k):
        if a[p * k + p] < lmin[0]:
            lmin[0] = a[p * k + p]
        if a[p * k + p] > lmax[0]:
            lmax[0] = a[p * k + p]


def block_extremes(double[:, ::1] block):
    """Smallest and largest eigenvalue of a small symmetric matrix."""
    cdef int k = block.shape[0]
    cdef double lmin, lmax
    cdef double* buf
    if k == 1:
        return block[0, 0], block[0, 0]
    if k == 2:
        _extremes_2x2(block[0, 0], block[0, 1], block[1, 1], &lmin, &lmax)
        return lmin, lmax
    buf = <double*> malloc(k * k * sizeof(double))
    try:
        for i in range(k):
            for j in range(k):
                buf[i * k + j] = block[i, j]
        _jacobi_extremes(buf, k, &lmin, &lmax)
    finally:
        free(buf)
    return lmin, lmax


def rip_scan(const double[:, ::1] gram, int order):
    """Scan all `order`-subsets of the Gram matrix's index set.

    Returns ``(delta, subset, count, lam_min, lam_max)`` where ``subset`` is
    the lexicographically first subset attaining ``delta`` and ``lam_min``,
    ``lam_max`` are the extreme eigenvalues of its Gram block.
    """
    cdef int n = gram.shape[0]
    cdef int k = order
    cdef int i, j, pos
    cdef long long count = 0
    cdef double lmin = 0.0, lmax = 0.0, defect, bound, row
    cdef double best = -1.0, best_min = 0.0, best_max = 0.0
    cdef const double* gp
    if k < 1 or k > n:
        raise ValueError("order must satisfy 1 <= order <= n")
    cdef int* idx = <int*> malloc(k * sizeof(int))
    cdef int* best_idx = <int*> malloc(k * sizeof(int))
    cdef double* buf = <double*> malloc(k * k * sizeof(double))
    try:
        gp = &gram[0, 0]
        with nogil:
            for i in range(k):
                idx[i] = i
                best_idx[i] = i
            while True:
                count += 1
                if k == 1:
                    lmin = gp[idx[0] * n + idx[0]]
                    lmax = lmin
                elif k == 2:
                    _extremes_2x2(gp[idx[0] * n + idx[0]], gp[idx[0] * n + idx[1]],
                                  gp[idx[1] * n + idx[1]], &lmin, &lmax)
                else:
                    # Gershgorin: the defect is at most max_i |g_ii - 1| + R_i,
                    # so blocks that cannot beat the incumbent are skipped
                    bound = 0.0
                    for i in range(k):
                        row = fabs(gp[idx[i] * n + idx[i]] - 1.0)
                        for j in range(k):
                            buf[i * k + j] = gp[idx[i] * n + idx[j]]
                            if j != i:
                                row += fabs(buf[i * k + j])
                        if row > bound:
                            bound = row
                    if bound > best:
                        _jacobi_extremes(buf, k, &lmin, &lmax)
                    else:
                        lmin = 1.0
                        lmax = 1.0
                defect = lmax - 1.0
                if 1.0 - lmin > defect:
                    defect = 1.0 - lmin
                if defect > best:
                    best = defect
                    best_min = lmin
                    best_max = lmax
                    for i in range(k):
                        best_idx[i] = idx[i]
                # advance to the next subset in lexicographic order
                pos = k - 1
                while pos >= 0 and idx[pos] == n - k + pos:
                    pos -= 1
                if pos < 0:
                    break
                idx[pos] += 1
                for i in range(pos + 1, k):
                    idx[i] = idx[i - 1] + 1
        subset = np.array([best_idx[i] for i in range(k)], dtype=np.intp)
    finally:
        free(idx)
        free(best_idx)
        free(buf)
    return best, subset, count, best_min, best_max

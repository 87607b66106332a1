# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; results match ``_pykernels`` exactly (see tests)."""

import numpy as np
from libc.math cimport log2, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memset


cdef inline double _sum_loss(const long long[:, ::1] perms, Py_ssize_t a,
                             const long long[::1] y, Py_ssize_t K, int p,
                             double z) noexcept nogil:
    cdef double s = 0.0
    cdef long long r
    cdef Py_ssize_t i
    for i in range(K):
        r = perms[a, i]
        if r > p + 1:
            r = p + 1
        s += r * y[i]
    return s - z


def loss_grid(int code, perms, ys, int p):
    cdef const long long[:, ::1] P = np.ascontiguousarray(perms, dtype=np.int64)
    cdef const long long[:, ::1] Y = np.ascontiguousarray(ys, dtype=np.int64)
    cdef Py_ssize_t nP = P.shape[0], nY = Y.shape[0], K = P.shape[1]
    out_arr = np.zeros((nP, nY), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t a, b, i, j, r
    cdef double z, acc, g, first
    cdef long long n_rel, hits, bad
    cdef double* sorted_vals = <double*> malloc(K * sizeof(double))
    cdef double tmp
    if sorted_vals == NULL:
        raise MemoryError()
    if code < 0 or code > 6:
        free(sorted_vals)
        raise ValueError(f"unknown loss code {code}")
    try:
        with nogil:
            for b in range(nY):
                # descending copy of y (or of its gains) for the normalisers
                for i in range(K):
                    if code == 6:
                        sorted_vals[i] = (1 << Y[b, i]) - 1.0
                    else:
                        sorted_vals[i] = Y[b, i]
                for i in range(1, K):
                    tmp = sorted_vals[i]
                    j = i - 1
                    while j >= 0 and sorted_vals[j] < tmp:
                        sorted_vals[j + 1] = sorted_vals[j]
                        j -= 1
                    sorted_vals[j + 1] = tmp
                z = 0.0
                if code == 0:
                    for r in range(K):
                        z += (r + 1 if r + 1 <= p + 1 else p + 1) * sorted_vals[r]
                elif code == 1:
                    for r in range(p):
                        z += sorted_vals[r]
                elif code == 6:
                    for r in range(p):
                        z += sorted_vals[r] / log2(2.0 + r)
                n_rel = 0
                for i in range(K):
                    n_rel += Y[b, i]
                for a in range(nP):
                    if code == 0:
                        out[a, b] = _sum_loss(P, a, Y[b], K, p, z)
                    elif code == 1:
                        acc = 0.0
                        for i in range(K):
                            if P[a, i] <= p:
                                acc += Y[b, i]
                        out[a, b] = z - acc
                    elif code == 6:
                        acc = 0.0
                        for i in range(K):
                            if P[a, i] <= p:
                                acc += ((1 << Y[b, i]) - 1.0) / log2(1.0 + P[a, i])
                        out[a, b] = z - acc
                    elif code == 3 or code == 5:
                        bad = 0
                        for i in range(K):
                            for j in range(K):
                                if P[a, i] < P[a, j] and Y[b, i] < Y[b, j]:
                                    bad += 1
                        if code == 5:
                            out[a, b] = bad
                        elif n_rel * (K - n_rel) > 0:
                            out[a, b] = (<double> bad) / (n_rel * (K - n_rel))
                    elif code == 2:
                        if n_rel > 0:
                            acc = 0.0
                            for i in range(K):
                                if Y[b, i] == 1:
                                    hits = 0
                                    for j in range(K):
                                        if Y[b, j] == 1 and P[a, j] <= P[a, i]:
                                            hits += 1
                                    acc += (<double> hits) / P[a, i]
                            out[a, b] = 1.0 - acc / n_rel
                    elif code == 4:
                        first = INFINITY
                        for i in range(K):
                            if Y[b, i] == 1 and P[a, i] < first:
                                first = P[a, i]
                        if first != INFINITY:
                            out[a, b] = 1.0 - 1.0 / first
    finally:
        free(sorted_vals)
    return out_arr


def max_shattered(rows, int n_points, int max_m):
    if n_points > 64:
        raise ValueError("compiled shattering search supports at most 64 points")
    uniq = sorted({int(r) for r in rows})
    cdef unsigned long long[::1] R = np.array(uniq, dtype=np.uint64)
    cdef Py_ssize_t nR = R.shape[0]
    cdef int best = 0, m, k, t, bit
    cdef Py_ssize_t h
    cdef int idx[64]
    cdef unsigned long long code, target, distinct
    cdef unsigned char* seen
    cdef bint found
    for m in range(1, max_m + 1):
        if m >= 63 or (1ULL << m) > <unsigned long long> nR:
            break
        target = 1ULL << m
        seen = <unsigned char*> malloc(target)
        if seen == NULL:
            raise MemoryError()
        found = False
        with nogil:
            for k in range(m):
                idx[k] = k
            while True:
                memset(seen, 0, target)
                distinct = 0
                for h in range(nR):
                    code = 0
                    for k in range(m):
                        bit = (R[h] >> idx[k]) & 1ULL
                        code |= (<unsigned long long> bit) << k
                    if not seen[code]:
                        seen[code] = 1
                        distinct += 1
                        if distinct == target:
                            break
                if distinct == target:
                    found = True
                    break
                # next combination in lexicographic order
                t = m - 1
                while t >= 0 and idx[t] == n_points - m + t:
                    t -= 1
                if t < 0:
                    break
                idx[t] += 1
                for k in range(t + 1, m):
                    idx[k] = idx[k - 1] + 1
        free(seen)
        if not found:
            break
        best = m
    return best


def subadditivity_violations(L, binrel_idx, double c, double tol):
    cdef const double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef const long long[:, ::1] B = np.ascontiguousarray(binrel_idx, dtype=np.int64)
    cdef Py_ssize_t nP = Lv.shape[0], nY = Lv.shape[1], q = B.shape[1]
    cdef Py_ssize_t a, b, y, k
    cdef long long count = 0
    cdef Py_ssize_t fa = -1, fb = -1, fy = -1
    cdef double extra
    with nogil:
        for a in range(nP):
            for b in range(nP):
                extra = 0.0
                for k in range(q):
                    extra += Lv[a, B[b, k]]
                extra *= c
                for y in range(nY):
                    if Lv[a, y] > Lv[b, y] + extra + tol:
                        if fa < 0:
                            fa = a
                            fb = b
                            fy = y
                        count += 1
    first = None if fa < 0 else (int(fa), int(fb), int(fy))
    return int(count), first

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: conditional-permutation counts and |rational| quadrature.

Semantics match ``_kernels_py``; the permutation counts are bit-identical
to it (same generator, same summation order, no FMA contraction).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, copysign
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t _M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _M2 = 0x94D049BB133111EBULL
cdef uint64_t _STREAM = 0xD1B54A32D192ED03ULL
cdef double _INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t x) nogil:
    x = x + _GOLDEN
    x = (x ^ (x >> 30)) * _M1
    x = (x ^ (x >> 27)) * _M2
    return x ^ (x >> 31)


cdef inline uint64_t _stream_key(uint64_t seed, uint64_t location) nogil:
    return _mix(_mix(seed) ^ (location * _STREAM))


def stream_key(seed, location):
    return _stream_key(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), <uint64_t>location)


def lisa_exceed_counts(const double[::1] z, const int64_t[::1] indptr, const int64_t[::1] indices,
                       const double[::1] data, const double[::1] center, const double[::1] obs_dev,
                       Py_ssize_t n_perm, seed):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m = n - 1
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.ndarray[int64_t, ndim=1] counts_arr = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    cdef Py_ssize_t i, t, p, k, lo, j, tmp, maxk = 0
    cdef uint64_t key, u
    cdef double acc, dev, x
    cdef int64_t c, v, loc

    for i in range(n):
        if indptr[i + 1] - indptr[i] > maxk:
            maxk = indptr[i + 1] - indptr[i]
    if maxk > m:
        raise ValueError("more neighbors than other locations")

    cdef int64_t *pool = <int64_t *> malloc(max(m, 1) * sizeof(int64_t))
    cdef int64_t *swaps = <int64_t *> malloc(max(maxk, 1) * sizeof(int64_t))
    if pool == NULL or swaps == NULL:
        free(pool)
        free(swaps)
        raise MemoryError()
    try:
        with nogil:
            for t in range(m):
                pool[t] = t
            for i in range(n):
                lo = indptr[i]
                k = indptr[i + 1] - lo
                if k == 0:
                    continue
                key = _stream_key(useed, <uint64_t>i)
                c = 0
                for p in range(n_perm):
                    acc = 0.0
                    for t in range(k):
                        u = _mix(key + (<uint64_t>(p * k + t)) * _GOLDEN)
                        x = <double>(u >> 11) * _INV53
                        j = t + <Py_ssize_t>(x * <double>(m - t))
                        swaps[t] = j
                        tmp = pool[t]
                        pool[t] = pool[j]
                        pool[j] = tmp
                        v = pool[t]
                        loc = v + (1 if v >= i else 0)
                        acc += data[lo + t] * z[loc]
                    t = k - 1
                    while t >= 0:
                        j = swaps[t]
                        tmp = pool[t]
                        pool[t] = pool[j]
                        pool[j] = tmp
                        t -= 1
                    dev = fabs(z[i] * acc - center[i])
                    if dev >= obs_dev[i]:
                        c += 1
                counts[i] = c
    finally:
        free(pool)
        free(swaps)
    return counts_arr


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
cdef double[8] _XGK = [0.991455371120812639206854697526329,
                       0.949107912342758524526189684047851,
                       0.864864423359769072789712788640926,
                       0.741531185599394439863864773280788,
                       0.586087235467691130294144845693013,
                       0.405845151377397166906606412076961,
                       0.207784955007898467600689403773245,
                       0.000000000000000000000000000000000]
cdef double[8] _WGK = [0.022935322010529224963732008058970,
                       0.063092092629978553290700663189204,
                       0.104790010322250183839876322541518,
                       0.140653259715525918745189590510238,
                       0.169004726639267902826583426598550,
                       0.190350578064785409913256402421014,
                       0.204432940075298892414161999234649,
                       0.209482141084727828012999174891714]
cdef double[4] _WG = [0.129484966168869693270611432679082,
                      0.279705391489276667901467771423780,
                      0.381830050505118944950369775488975,
                      0.417959183673469387755102040816327]


cdef inline double _f(double x, double p0, double p1, double p2,
                      double q0, double q1, double q2) nogil:
    return fabs((p0 + x * (p1 + x * p2)) / (q0 + x * (q1 + x * q2)))


cdef void _gk15(double a, double b, double p0, double p1, double p2,
                double q0, double q1, double q2, double *res, double *err) nogil:
    cdef double c = 0.5 * (a + b)
    cdef double h = 0.5 * (b - a)
    cdef double fc = _f(c, p0, p1, p2, q0, q1, q2)
    cdef double rk = fc * _WGK[7]
    cdef double rg = fc * _WG[3]
    cdef double f1, f2, dx
    cdef int jj
    for jj in range(7):
        dx = h * _XGK[jj]
        f1 = _f(c - dx, p0, p1, p2, q0, q1, q2)
        f2 = _f(c + dx, p0, p1, p2, q0, q1, q2)
        rk += _WGK[jj] * (f1 + f2)
        if jj % 2 == 1:
            rg += _WG[jj // 2] * (f1 + f2)
    res[0] = rk * h
    err[0] = fabs((rk - rg) * h)


cdef double _adaptive(double a, double b, double p0, double p1, double p2,
                      double q0, double q1, double q2, double tol, int depth) nogil:
    cdef double res, err, mid
    _gk15(a, b, p0, p1, p2, q0, q1, q2, &res, &err)
    if err <= tol or depth >= 50:
        return res
    mid = 0.5 * (a + b)
    return (_adaptive(a, mid, p0, p1, p2, q0, q1, q2, 0.5 * tol, depth + 1)
            + _adaptive(mid, b, p0, p1, p2, q0, q1, q2, 0.5 * tol, depth + 1))


cdef int _roots(double p0, double p1, double p2, double lo, double hi, double *out) nogil:
    cdef double r[2]
    cdef int nr = 0, cnt = 0, s
    cdef double disc, sq, q, tmpd
    if p2 == 0.0:
        if p1 != 0.0:
            r[0] = -p0 / p1
            nr = 1
    else:
        disc = p1 * p1 - 4.0 * p2 * p0
        if disc >= 0.0:
            sq = sqrt(disc)
            if p1 != 0.0:
                q = -0.5 * (p1 + copysign(sq, p1))
            else:
                q = -0.5 * sq
            if q == 0.0:
                r[0] = 0.0
                nr = 1
            else:
                r[0] = q / p2
                r[1] = p0 / q
                nr = 2
                if r[0] == r[1]:
                    nr = 1
    for s in range(nr):
        if lo < r[s] < hi:
            out[cnt] = r[s]
            cnt += 1
    if cnt == 2 and out[0] > out[1]:
        tmpd = out[0]
        out[0] = out[1]
        out[1] = tmpd
    return cnt


def rational_abs_integrals(num, den, double lo, double hi, double tol):
    cdef double[:, ::1] P = np.ascontiguousarray(num, dtype=np.float64)
    cdef double[:, ::1] Q = np.ascontiguousarray(den, dtype=np.float64)
    cdef Py_ssize_t rows = P.shape[0], r
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(rows)
    cdef double[::1] out = out_arr
    cdef double edges[4]
    cdef double roots[2]
    cdef int nr, e
    cdef double total, ptol
    with nogil:
        for r in range(rows):
            if P[r, 0] == 0.0 and P[r, 1] == 0.0 and P[r, 2] == 0.0:
                out[r] = 0.0
                continue
            nr = _roots(P[r, 0], P[r, 1], P[r, 2], lo, hi, roots)
            edges[0] = lo
            for e in range(nr):
                edges[e + 1] = roots[e]
            edges[nr + 1] = hi
            ptol = tol / (nr + 1)
            total = 0.0
            for e in range(nr + 1):
                total += _adaptive(edges[e], edges[e + 1], P[r, 0], P[r, 1], P[r, 2],
                                   Q[r, 0], Q[r, 1], Q[r, 2], ptol, 0)
            out[r] = total
    return out_arr

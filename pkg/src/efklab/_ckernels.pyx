# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``; same signatures and results."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def etd_sweep(a0, E, w0, w1, phi):
    cdef const double[:, ::1] p = np.ascontiguousarray(phi, dtype=np.float64)
    cdef Py_ssize_t P = p.shape[0], N = p.shape[1], n, k
    out_arr = np.empty((P, N), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef const double[::1] e = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[::1] c0 = np.ascontiguousarray(w0, dtype=np.float64)
    cdef const double[::1] c1 = np.ascontiguousarray(w1, dtype=np.float64)
    cdef const double[::1] start = np.ascontiguousarray(np.broadcast_to(a0, (N,)), dtype=np.float64)
    for k in range(N):
        out[0, k] = start[k]
    for n in range(P - 1):
        for k in range(N):
            out[n + 1, k] = e[k] * out[n, k] + c0[k] * p[n, k] + c1[k] * p[n + 1, k]
    return out_arr


cdef inline Py_ssize_t _locate(const double[::1] knots, double t) nogil:
    # largest i with knots[i] <= t, clipped to [0, K-2]
    cdef Py_ssize_t lo = 0, hi = knots.shape[0] - 1, mid
    if t < knots[0]:
        return 0
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if knots[mid] <= t:
            lo = mid
        else:
            hi = mid
    if lo > knots.shape[0] - 2:
        lo = knots.shape[0] - 2
    return lo


def hermite_eval(knots, values, dright, dleft, queries, double snap):
    cdef const double[::1] kn = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] dr = np.ascontiguousarray(dright, dtype=np.float64)
    cdef const double[:, ::1] dl = np.ascontiguousarray(dleft, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(queries, dtype=np.float64).ravel()
    cdef Py_ssize_t K = kn.shape[0], N = y.shape[1], Q = q.shape[0], j, i, k
    out_arr = np.empty((Q, N), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double t0, hh, s, s2, s3, h00, h10, h01, h11
    if K == 1:
        for j in range(Q):
            if abs(q[j] - kn[0]) > snap:
                return out_arr, j
            for k in range(N):
                out[j, k] = y[0, k]
        return out_arr, -1
    for j in range(Q):
        i = _locate(kn, q[j])
        t0 = kn[i]
        hh = kn[i + 1] - t0
        s = (q[j] - t0) / hh
        if s < -snap or s > 1.0 + snap:
            return out_arr, j
        if s <= snap:
            for k in range(N):
                out[j, k] = y[i, k]
        elif s >= 1.0 - snap:
            for k in range(N):
                out[j, k] = y[i + 1, k]
        else:
            s2 = s * s
            s3 = s2 * s
            h00 = 2 * s3 - 3 * s2 + 1
            h10 = (s3 - 2 * s2 + s) * hh
            h01 = -2 * s3 + 3 * s2
            h11 = (s3 - s2) * hh
            for k in range(N):
                out[j, k] = h00 * y[i, k] + h10 * dr[i, k] + h01 * y[i + 1, k] + h11 * dl[i + 1, k]
    return out_arr, -1

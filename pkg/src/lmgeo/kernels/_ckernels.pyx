# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, sqrt, INFINITY, NAN, M_PI

cnp.import_array()

cdef double DEG = M_PI / 180.0


def haversine_matrix(lat1, lon1, lat2, lon2, double radius):
    cdef double[::1] a_lat = np.ascontiguousarray(lat1, dtype=np.float64)
    cdef double[::1] a_lon = np.ascontiguousarray(lon1, dtype=np.float64)
    cdef double[::1] b_lat = np.ascontiguousarray(lat2, dtype=np.float64)
    cdef double[::1] b_lon = np.ascontiguousarray(lon2, dtype=np.float64)
    cdef Py_ssize_t n = a_lat.shape[0], m = b_lat.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] res = out
    # sin((b - a) / 2) is expanded from per-point half-angle sines and cosines
    # so the inner loop needs no trigonometric calls besides asin.
    cdef double[::1] cos_b = np.empty(m, dtype=np.float64)
    cdef double[::1] sp_b = np.empty(m, dtype=np.float64)
    cdef double[::1] cp_b = np.empty(m, dtype=np.float64)
    cdef double[::1] sl_b = np.empty(m, dtype=np.float64)
    cdef double[::1] cl_b = np.empty(m, dtype=np.float64)
    cdef double c1, sp_a, cp_a, sl_a, cl_a, s_phi, s_lmb, h, scale = 2.0 * radius
    for j in range(m):
        cos_b[j] = cos(b_lat[j] * DEG)
        sp_b[j] = sin(b_lat[j] * DEG / 2.0)
        cp_b[j] = cos(b_lat[j] * DEG / 2.0)
        sl_b[j] = sin(b_lon[j] * DEG / 2.0)
        cl_b[j] = cos(b_lon[j] * DEG / 2.0)
    for i in range(n):
        c1 = cos(a_lat[i] * DEG)
        sp_a = sin(a_lat[i] * DEG / 2.0)
        cp_a = cos(a_lat[i] * DEG / 2.0)
        sl_a = sin(a_lon[i] * DEG / 2.0)
        cl_a = cos(a_lon[i] * DEG / 2.0)
        for j in range(m):
            s_phi = sp_b[j] * cp_a - cp_b[j] * sp_a
            s_lmb = sl_b[j] * cl_a - cl_b[j] * sl_a
            h = s_phi * s_phi + c1 * cos_b[j] * s_lmb * s_lmb
            if h < 0.0:
                h = 0.0
            elif h > 1.0:
                h = 1.0
            res[i, j] = scale * asin(sqrt(h))
    return out


def route_lengths(t_nodes, t_cum, t_len, l_nodes, l_cum, l_len, Py_ssize_t n_nodes):
    cdef long long[:, ::1] tn = np.ascontiguousarray(t_nodes, dtype=np.int64)
    cdef double[:, ::1] tc = np.ascontiguousarray(t_cum, dtype=np.float64)
    cdef long long[::1] tlen = np.ascontiguousarray(t_len, dtype=np.int64)
    cdef long long[:, :, ::1] ln = np.ascontiguousarray(l_nodes, dtype=np.int64)
    cdef double[:, :, ::1] lc = np.ascontiguousarray(l_cum, dtype=np.float64)
    cdef long long[:, ::1] llen = np.ascontiguousarray(l_len, dtype=np.int64)
    cdef Py_ssize_t n_land = ln.shape[0], n_probe = ln.shape[1]
    cdef Py_ssize_t p, k, j, q, tl, ll
    cdef double t_end, l_end, tp, lp, total, cur
    out = np.empty(n_land, dtype=np.float64)
    cdef double[::1] best = out
    cdef double[::1] lookup = np.full(n_nodes, NAN, dtype=np.float64)
    cdef unsigned char[::1] mark = np.zeros(n_nodes, dtype=np.uint8)
    for q in range(n_land):
        best[q] = INFINITY
    for p in range(n_probe):
        tl = tlen[p]
        if tl <= 0:
            continue
        t_end = tc[p, tl - 1]
        for k in range(tl):
            tp = t_end - tc[p, k]
            lookup[tn[p, k]] = tp if tp > 0.0 else 0.0
            mark[tn[p, k]] = 1
        for q in range(n_land):
            ll = llen[q, p]
            if ll <= 0:
                continue
            l_end = lc[q, p, ll - 1]
            cur = best[q]
            for j in range(ll):
                if mark[ln[q, p, j]]:
                    lp = l_end - lc[q, p, j]
                    if lp < 0.0:
                        lp = 0.0
                    total = lp + lookup[ln[q, p, j]]
                    if total < cur:
                        cur = total
            best[q] = cur
        for k in range(tl):
            mark[tn[p, k]] = 0
    for q in range(n_land):
        if best[q] == INFINITY:
            best[q] = NAN
    return out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in :mod:`levelgeom._kernels._pure`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

from .._mc_tables import TRI_TABLE
from ._pure import _EDGES

cnp.import_array()

BACKEND = "cython"


def mc_triangle_keys(vals, double iso):
    cdef const double[:, :, ::1] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef Py_ssize_t nx = v.shape[0] - 1, ny = v.shape[1] - 1, nz = v.shape[2] - 1
    cdef const signed char[:, ::1] table = np.ascontiguousarray(TRI_TABLE, dtype=np.int8)
    cdef long long[12] eoff
    cdef Py_ssize_t i, j, k, e, s, t, ntri, count = 0
    cdef int case_
    cdef long long base, sy = nz + 1, sx = (ny + 1) * (nz + 1)
    cdef long long[:, ::1] out
    cdef unsigned char[:, :, ::1] cases = np.zeros((max(nx, 0), max(ny, 0), max(nz, 0)), dtype=np.uint8)

    for e in range(12):
        (ox, oy, oz), axis = _EDGES[e]
        eoff[e] = (ox * sx + oy * sy + oz) * 3 + axis

    # pass 1: classify cells and count triangles
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                case_ = 0
                if v[i, j, k] < iso: case_ |= 1
                if v[i + 1, j, k] < iso: case_ |= 2
                if v[i + 1, j + 1, k] < iso: case_ |= 4
                if v[i, j + 1, k] < iso: case_ |= 8
                if v[i, j, k + 1] < iso: case_ |= 16
                if v[i + 1, j, k + 1] < iso: case_ |= 32
                if v[i + 1, j + 1, k + 1] < iso: case_ |= 64
                if v[i, j + 1, k + 1] < iso: case_ |= 128
                cases[i, j, k] = case_
                if case_ != 0 and case_ != 255:
                    s = 0
                    while s < 15 and table[case_, s] >= 0:
                        s += 3
                    count += s // 3

    out = np.empty((count, 3), dtype=np.int64)
    ntri = 0
    # pass 2: emit edge keys in cell order
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                case_ = cases[i, j, k]
                if case_ == 0 or case_ == 255:
                    continue
                base = (i * sx + j * sy + k) * 3
                s = 0
                while s < 15 and table[case_, s] >= 0:
                    for t in range(3):
                        out[ntri, t] = base + eoff[table[case_, s + t]]
                    ntri += 1
                    s += 3
    return np.asarray(out)


def curvature3(grads, hess, double floor):
    cdef const double[:, ::1] g = np.ascontiguousarray(grads, dtype=np.float64)
    cdef const double[:, :, ::1] q = np.ascontiguousarray(hess, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0], p
    H_arr = np.zeros(n)
    K_arr = np.zeros(n)
    reg_arr = np.zeros(n, dtype=np.bool_)
    cdef double[::1] H = H_arr
    cdef double[::1] K = K_arr
    cdef cnp.npy_bool[::1] reg = reg_arr
    cdef double gx, gy, gz, a, b, c, xy, xz, yz, n2, norm, tr, qg, qstar
    cdef double c00, c11, c22, c01, c02, c12
    for p in range(n):
        gx = g[p, 0]; gy = g[p, 1]; gz = g[p, 2]
        n2 = gx * gx + gy * gy + gz * gz
        norm = sqrt(n2)
        if not norm > floor:
            continue
        a = q[p, 0, 0]; b = q[p, 1, 1]; c = q[p, 2, 2]
        xy = q[p, 0, 1]; xz = q[p, 0, 2]; yz = q[p, 1, 2]
        tr = a + b + c
        qg = a * gx * gx + b * gy * gy + c * gz * gz + 2.0 * (xy * gx * gy + xz * gx * gz + yz * gy * gz)
        c00 = b * c - yz * yz
        c11 = a * c - xz * xz
        c22 = a * b - xy * xy
        c01 = xz * yz - xy * c
        c02 = xy * yz - xz * b
        c12 = xy * xz - a * yz
        qstar = (c00 * gx * gx + c11 * gy * gy + c22 * gz * gz
                 + 2.0 * (c01 * gx * gy + c02 * gx * gz + c12 * gy * gz))
        H[p] = (n2 * tr - qg) / (2.0 * norm * norm * norm)
        K[p] = qstar / (n2 * n2)
        reg[p] = 1
    return H_arr, K_arr, reg_arr

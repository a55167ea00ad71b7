# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same contracts as :mod:`pgrad._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos

cnp.import_array()


def grid_sum(a):
    cdef const double[:, ::1] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t P = x.shape[0], n = x.shape[1], k, i
    out = np.zeros(n)
    cdef double[::1] s = out
    for k in range(P):
        for i in range(n):
            s[i] = s[i] + x[k, i]
    return out


def row_sqnorm(a):
    cdef const double[:, ::1] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t P = x.shape[0], n = x.shape[1], k, i
    out = np.empty(P)
    cdef double[::1] s = out
    cdef double acc
    for k in range(P):
        acc = x[k, 0] * x[k, 0]
        for i in range(1, n):
            acc = acc + x[k, i] * x[k, i]
        s[k] = acc
    return out


def centered_diff(a, double scale):
    cdef const double[:, :, ::1] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t A = x.shape[0], N = x.shape[1], B = x.shape[2]
    cdef Py_ssize_t i, k, j, kp, km
    out = np.empty((A, N, B))
    cdef double[:, :, ::1] y = out
    for i in range(A):
        for k in range(N):
            kp = k + 1 if k + 1 < N else 0
            km = k - 1 if k > 0 else N - 1
            for j in range(B):
                y[i, k, j] = (x[i, kp, j] - x[i, km, j]) * scale
    return out


def forward_diff(a, double scale):
    cdef const double[:, :, ::1] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t A = x.shape[0], N = x.shape[1], B = x.shape[2]
    cdef Py_ssize_t i, k, j, kp
    out = np.empty((A, N, B))
    cdef double[:, :, ::1] y = out
    for i in range(A):
        for k in range(N):
            kp = k + 1 if k + 1 < N else 0
            for j in range(B):
                y[i, k, j] = (x[i, kp, j] - x[i, k, j]) * scale
    return out


def second_diff(a, double scale):
    cdef const double[:, :, ::1] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t A = x.shape[0], N = x.shape[1], B = x.shape[2]
    cdef Py_ssize_t i, k, j, kp, km
    out = np.empty((A, N, B))
    cdef double[:, :, ::1] y = out
    for i in range(A):
        for k in range(N):
            kp = k + 1 if k + 1 < N else 0
            km = k - 1 if k > 0 else N - 1
            for j in range(B):
                y[i, k, j] = (x[i, kp, j] - 2.0 * x[i, k, j] + x[i, km, j]) * scale
    return out


def pseudo_huber(u, h, double kappa):
    cdef const double[:, ::1] x = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] f = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t P = x.shape[0], n = x.shape[1], k, i
    value = np.empty(P)
    grad = np.empty((P, n))
    cdef double[::1] v = value
    cdef double[:, ::1] g = grad
    cdef double r2, root, lin
    for k in range(P):
        r2 = x[k, 0] * x[k, 0]
        lin = x[k, 0] * f[k, 0]
        for i in range(1, n):
            r2 = r2 + x[k, i] * x[k, i]
            lin = lin + x[k, i] * f[k, i]
        root = sqrt(1.0 + r2)
        v[k] = kappa * (root - 1.0) + lin
        for i in range(n):
            g[k, i] = kappa * (x[k, i] / root) + f[k, i]
    return value, grad


def pseudo_huber_diff(u, d, h, double kappa):
    cdef const double[:, ::1] x = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] dx = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[:, ::1] f = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t P = x.shape[0], n = x.shape[1], k, i
    out = np.empty(P)
    cdef double[::1] o = out
    cdef double a0, a1, num, lin, vi
    for k in range(P):
        vi = x[k, 0] + dx[k, 0]
        a0 = x[k, 0] * x[k, 0]
        a1 = vi * vi
        num = (vi + x[k, 0]) * dx[k, 0]
        lin = f[k, 0] * dx[k, 0]
        for i in range(1, n):
            vi = x[k, i] + dx[k, i]
            a0 = a0 + x[k, i] * x[k, i]
            a1 = a1 + vi * vi
            num = num + (vi + x[k, i]) * dx[k, i]
            lin = lin + f[k, i] * dx[k, i]
        o[k] = kappa * (num / (sqrt(1.0 + a1) + sqrt(1.0 + a0))) + lin
    return out


def cosine(u, h, double amp):
    cdef const double[:, ::1] x = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] f = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t P = x.shape[0], n = x.shape[1], k, i
    value = np.empty(P)
    grad = np.empty((P, n))
    cdef double[::1] v = value
    cdef double[:, ::1] g = grad
    cdef double acc, lin
    for k in range(P):
        acc = 1.0 - cos(x[k, 0])
        lin = x[k, 0] * f[k, 0]
        for i in range(1, n):
            acc = acc + (1.0 - cos(x[k, i]))
            lin = lin + x[k, i] * f[k, i]
        v[k] = amp * acc + lin
        for i in range(n):
            g[k, i] = amp * sin(x[k, i]) + f[k, i]
    return value, grad


def cosine_diff(u, d, h, double amp):
    cdef const double[:, ::1] x = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] dx = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[:, ::1] f = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t P = x.shape[0], n = x.shape[1], k, i
    out = np.empty(P)
    cdef double[::1] o = out
    cdef double acc, lin
    for k in range(P):
        acc = 2.0 * sin(x[k, 0] + 0.5 * dx[k, 0]) * sin(0.5 * dx[k, 0])
        lin = f[k, 0] * dx[k, 0]
        for i in range(1, n):
            acc = acc + 2.0 * sin(x[k, i] + 0.5 * dx[k, i]) * sin(0.5 * dx[k, i])
            lin = lin + f[k, i] * dx[k, i]
        o[k] = amp * acc + lin
    return out

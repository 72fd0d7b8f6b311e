# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see pyfallback.py for the reference semantics."""

from libc.math cimport fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pn_eval(double[::1] diag, double[::1] offdiag, double norm0, int n, x):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(xa)
    cdef Py_ssize_t i, m = xa.shape[0]
    cdef int k
    cdef double p0 = 1.0 / sqrt(norm0)
    cdef double p, p_prev, p_next, bk, xi
    for i in range(m):
        xi = xa[i]
        p_prev = 0.0
        p = p0
        for k in range(n):
            bk = offdiag[k - 1] if k > 0 else 0.0
            p_next = ((xi - diag[k]) * p - bk * p_prev) / offdiag[k]
            p_prev = p
            p = p_next
        out[i] = p
    return out


def pn_eval_pair(double[::1] diag, double[::1] offdiag, double norm0, int n, x):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] outp = np.empty_like(xa)
    cdef cnp.ndarray[double, ndim=1] outd = np.empty_like(xa)
    cdef Py_ssize_t i, m = xa.shape[0]
    cdef int k
    cdef double p0 = 1.0 / sqrt(norm0)
    cdef double p, p_prev, p_next, d, d_prev, d_next, bk, xi
    for i in range(m):
        xi = xa[i]
        p_prev = 0.0
        p = p0
        d_prev = 0.0
        d = 0.0
        for k in range(n):
            bk = offdiag[k - 1] if k > 0 else 0.0
            p_next = ((xi - diag[k]) * p - bk * p_prev) / offdiag[k]
            d_next = (p + (xi - diag[k]) * d - bk * d_prev) / offdiag[k]
            p_prev = p
            p = p_next
            d_prev = d
            d = d_next
        outp[i] = p
        outd[i] = d
    return outp, outd


def pn_sum_sq(double[::1] diag, double[::1] offdiag, double norm0, int n, x):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(xa)
    cdef Py_ssize_t i, m = xa.shape[0]
    cdef int k
    cdef double p0 = 1.0 / sqrt(norm0)
    cdef double p, p_prev, p_next, bk, xi, acc
    for i in range(m):
        xi = xa[i]
        p_prev = 0.0
        p = p0
        acc = p * p
        for k in range(n - 1):
            bk = offdiag[k - 1] if k > 0 else 0.0
            p_next = ((xi - diag[k]) * p - bk * p_prev) / offdiag[k]
            p_prev = p
            p = p_next
            acc += p * p
        out[i] = acc
    return out


def pn_matrix(double[::1] diag, double[::1] offdiag, double norm0, int n, x):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t i, m = xa.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n + 1))
    cdef int k
    cdef double p0 = 1.0 / sqrt(norm0)
    cdef double p, p_prev, p_next, bk, xi
    for i in range(m):
        xi = xa[i]
        p_prev = 0.0
        p = p0
        out[i, 0] = p
        for k in range(n):
            bk = offdiag[k - 1] if k > 0 else 0.0
            p_next = ((xi - diag[k]) * p - bk * p_prev) / offdiag[k]
            p_prev = p
            p = p_next
            out[i, k + 1] = p
    return out


def cauchy_node_sum(double[::1] nodes, double[::1] weights, x):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.zeros_like(xa)
    cdef Py_ssize_t i, j, m = xa.shape[0], nn = nodes.shape[0]
    cdef double acc, xi
    for i in range(m):
        xi = xa[i]
        acc = 0.0
        for j in range(nn):
            acc += weights[j] / (nodes[j] - xi)
        out[i] = acc
    return out


def cauchy_node_sum_abs(double[::1] nodes, double[::1] weights, x):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.zeros_like(xa)
    cdef Py_ssize_t i, j, m = xa.shape[0], nn = nodes.shape[0]
    cdef double acc, xi
    for i in range(m):
        xi = xa[i]
        acc = 0.0
        for j in range(nn):
            acc += fabs(weights[j] / (nodes[j] - xi))
        out[i] = acc
    return out


def pn_eval_scaled(double[::1] diag, double[::1] offdiag, double norm0, int n, double x):
    cdef double big = 2.0**512
    cdef double inv = 2.0**-512
    cdef double p_prev = 0.0
    cdef double p = 1.0 / sqrt(norm0)
    cdef double p_next, bk
    cdef long expo = 0
    cdef int k
    for k in range(n):
        bk = offdiag[k - 1] if k > 0 else 0.0
        p_next = ((x - diag[k]) * p - bk * p_prev) / offdiag[k]
        p_prev = p
        p = p_next
        if fabs(p) > big or fabs(p_prev) > big:
            p *= inv
            p_prev *= inv
            expo += 512
    return p, expo

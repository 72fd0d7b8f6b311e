"""NumPy reference implementations of the hot kernels.

Semantics must match ``cpvquad._kernels.native`` bit-for-bit in exact
arithmetic; the two are compared in tests/test_kernels.py and timed against
each other in benchmarks/bench_kernels.py.

All polynomial kernels evaluate the orthonormal system of a three-term
recurrence

    b_{k+1} p_{k+1}(x) = (x - a_k) p_k(x) - b_k p_{k-1}(x),
    p_0 = 1/sqrt(norm0),  p_{-1} = 0,

with ``diag[k] = a_k`` and ``offdiag[k] = b_{k+1}``.
"""

import math

import numpy as np


def pn_eval(diag, offdiag, norm0, n, x):
    """Values of p_n at the points x (1-d float64 array)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(norm0))
    for k in range(n):
        bk = offdiag[k - 1] if k > 0 else 0.0
        p, p_prev = ((x - diag[k]) * p - bk * p_prev) / offdiag[k], p
    return p


def pn_eval_pair(diag, offdiag, norm0, n, x):
    """Values of (p_n, p_n') at the points x, derivative by the
    differentiated recurrence."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(norm0))
    d_prev = np.zeros_like(x)
    d = np.zeros_like(x)
    for k in range(n):
        bk = offdiag[k - 1] if k > 0 else 0.0
        p_next = ((x - diag[k]) * p - bk * p_prev) / offdiag[k]
        d_next = (p + (x - diag[k]) * d - bk * d_prev) / offdiag[k]
        p, p_prev = p_next, p
        d, d_prev = d_next, d
    return p, d


def pn_sum_sq(diag, offdiag, norm0, n, x):
    """sum_{k<n} p_k(x)^2 at the points x (Christoffel denominator)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(norm0))
    acc = p * p
    for k in range(n - 1):
        bk = offdiag[k - 1] if k > 0 else 0.0
        p, p_prev = ((x - diag[k]) * p - bk * p_prev) / offdiag[k], p
        acc += p * p
    return acc


def pn_matrix(diag, offdiag, norm0, n, x):
    """Matrix of shape (len(x), n+1) with columns p_0(x) .. p_n(x)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], n + 1))
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(norm0))
    out[:, 0] = p
    for k in range(n):
        bk = offdiag[k - 1] if k > 0 else 0.0
        p, p_prev = ((x - diag[k]) * p - bk * p_prev) / offdiag[k], p
        out[:, k + 1] = p
    return out


def cauchy_node_sum(nodes, weights, x):
    """sum_j weights[j] / (nodes[j] - x) at each point of x."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for j in range(nodes.shape[0]):
        out += weights[j] / (nodes[j] - x)
    return out


def cauchy_node_sum_abs(nodes, weights, x):
    """sum_j |weights[j] / (nodes[j] - x)|, used for rounding-error models."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for j in range(nodes.shape[0]):
        out += np.abs(weights[j] / (nodes[j] - x))
    return out


def pn_eval_scaled(diag, offdiag, norm0, n, x):
    """p_n at scalar x as (mantissa, exponent) with value = mantissa * 2**exponent.

    Renormalizes whenever the running values exceed 2**512, so it cannot
    overflow for any real x.
    """
    big = 2.0**512
    inv = 2.0**-512
    p_prev = 0.0
    p = 1.0 / math.sqrt(norm0)
    expo = 0
    for k in range(n):
        bk = offdiag[k - 1] if k > 0 else 0.0
        p, p_prev = ((x - diag[k]) * p - bk * p_prev) / offdiag[k], p
        if abs(p) > big or abs(p_prev) > big:
            p *= inv
            p_prev *= inv
            expo += 512
    return p, expo

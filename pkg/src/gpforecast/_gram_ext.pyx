# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused Gram-matrix kernels: one pass per pair computes the composite
covariance and all twelve log-hyperparameter derivatives."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, sin, log1p, M_PI

cnp.import_array()

cdef double SQRT5 = sqrt(5.0)


cdef inline void _pair(const double[:, ::1] A, Py_ssize_t i,
                       const double[:, ::1] B, Py_ssize_t j,
                       const double[::1] v, bint same,
                       double* out, double* g, bint want_grads) noexcept nogil:
    cdef double r2 = 0.0, d, dt, r, s, e, q2, q4, u, sn, kse2, kper, z, logB, zB
    cdef double k1, k2, k3, k4
    cdef Py_ssize_t c
    for c in range(4):
        d = A[i, c] - B[j, c]
        r2 += d * d
    dt = A[i, 0] - B[j, 0]
    if dt < 0:
        dt = -dt
    r = sqrt(r2)

    # v: sigma1 l1 sigma2 l2 p lper sigma3 alpha l3 sigmaf l4 sigman
    s = SQRT5 * r / v[1]
    e = exp(-s)
    k1 = v[0] * v[0] * (1.0 + s + s * s / 3.0) * e

    q2 = r2 / (v[3] * v[3])
    kse2 = v[2] * v[2] * exp(-0.5 * q2)
    u = M_PI * dt / v[4]
    sn = sin(u)
    kper = exp(-2.0 * sn * sn / (v[5] * v[5]))
    k2 = kse2 * kper

    z = r2 / (2.0 * v[7] * v[8] * v[8])
    logB = log1p(z)
    k3 = v[6] * exp(-v[7] * logB)

    q4 = r2 / (v[10] * v[10])
    k4 = v[9] * v[9] * exp(-0.5 * q4)

    out[0] = k1 + k2 + k3 + k4
    if same:
        out[0] += v[11] * v[11]
    if not want_grads:
        return
    g[0] = 2.0 * k1
    g[1] = v[0] * v[0] * e * s * s * (1.0 + s) / 3.0
    g[2] = 2.0 * k2
    g[3] = k2 * q2
    g[4] = k2 * 2.0 * sin(2.0 * u) * u / (v[5] * v[5])
    g[5] = k2 * 4.0 * sn * sn / (v[5] * v[5])
    zB = z / (1.0 + z)
    g[6] = k3
    g[7] = v[7] * k3 * (zB - logB)
    g[8] = 2.0 * v[7] * k3 * zB
    g[9] = 2.0 * k4
    g[10] = k4 * q4
    g[11] = 2.0 * v[11] * v[11] if same else 0.0


def gram_core(const double[:, ::1] X, const double[::1] nat, bint want_grads):
    """Return ``(K, G)`` for points ``X`` (n, 4) under natural-scale parameters."""
    cdef Py_ssize_t n = X.shape[0], i, j, m
    K_arr = np.empty((n, n))
    cdef double[:, ::1] K = K_arr
    cdef double[:, :, ::1] G
    cdef double val
    cdef double g[12]
    if want_grads:
        G_arr = np.empty((12, n, n))
        G = G_arr
    else:
        G_arr = None
    with nogil:
        for i in range(n):
            for j in range(i + 1):
                _pair(X, i, X, j, nat, i == j, &val, g, want_grads)
                K[i, j] = val
                K[j, i] = val
                if want_grads:
                    for m in range(12):
                        G[m, i, j] = g[m]
                        G[m, j, i] = g[m]
    return K_arr, G_arr


def cross_core(const double[:, ::1] A, const double[:, ::1] B, const double[::1] nat):
    cdef Py_ssize_t n = A.shape[0], k = B.shape[0], i, j
    K_arr = np.empty((n, k))
    cdef double[:, ::1] K = K_arr
    cdef double val
    cdef double g[12]
    with nogil:
        for i in range(n):
            for j in range(k):
                _pair(A, i, B, j, nat, False, &val, g, False)
                K[i, j] = val
    return K_arr

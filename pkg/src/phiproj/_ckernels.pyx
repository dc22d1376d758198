# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise kernels; mirrors ``phiproj._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, expm1, log1p, INFINITY, fmax
from phiproj._kernels_py import grid_shapes

cnp.import_array()

cdef enum:
    KIND_BURG = 0
    KIND_KL = 1
    KIND_POWER = 2
    KIND_CHI2_FULL = 3


cdef inline double _phi(int kind, double gamma, double x) noexcept nogil:
    cdef double v, d, lx
    if kind == KIND_CHI2_FULL:
        return 0.5 * (x - 1.0) * (x - 1.0)
    if x < 0.0:
        return INFINITY
    if x == 0.0:
        if kind == KIND_BURG:
            return INFINITY
        if kind == KIND_KL:
            return 1.0
        if gamma > 0.0:
            return 1.0 / gamma
        return INFINITY
    # log through d = x - 1 near x = 1, so that small values do not cancel to 0
    d = x - 1.0
    lx = log1p(d) if -0.5 < d < 0.5 else log(x)
    if kind == KIND_BURG:
        v = d - lx
    elif kind == KIND_KL:
        v = x * lx - d
    else:
        v = (expm1(gamma * lx) - gamma * d) / (gamma * (gamma - 1.0))
    return fmax(v, 0.0)


cdef inline void _conj(int kind, double gamma, double t,
                       double* f, double* f1, double* f2) noexcept nogil:
    cdef double s, e, gm1, base, lb
    if kind == KIND_CHI2_FULL:
        f[0] = t + 0.5 * t * t
        f1[0] = 1.0 + t
        f2[0] = 1.0
        return
    if kind == KIND_KL:
        e = exp(t)
        f[0] = expm1(t)
        f1[0] = e
        f2[0] = e
        return
    f[0] = INFINITY
    f1[0] = INFINITY
    f2[0] = INFINITY
    if kind == KIND_BURG:
        if t < 1.0:
            s = 1.0 - t
            f[0] = -log1p(-t)
            f1[0] = 1.0 / s
            f2[0] = 1.0 / (s * s)
        return
    gm1 = gamma - 1.0
    base = gm1 * t
    if base > -1.0:
        lb = log1p(base)
        f[0] = expm1(gamma * lb / gm1) / gamma
        e = exp(lb / gm1)
        f1[0] = e
        # x**(2 - gamma) = x / x**(gamma - 1) = x / (1 + base)
        f2[0] = e / (1.0 + base)
    elif gamma > 1.0:
        f[0] = -1.0 / gamma
        f1[0] = 0.0
        f2[0] = 0.0
    elif base == -1.0 and gamma < 0.0:
        f[0] = -1.0 / gamma


def phi_values(int kind, double gamma, x):
    cdef cnp.ndarray[double, ndim=1] xf = np.ascontiguousarray(x, dtype=float).ravel()
    cdef Py_ssize_t n = xf.shape[0], i
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    with nogil:
        for i in range(n):
            out[i] = _phi(kind, gamma, xf[i])
    return out.reshape(np.shape(x))


def conj_values(int kind, double gamma, t):
    cdef double[::1] tf = np.ascontiguousarray(t, dtype=float).ravel()
    cdef Py_ssize_t n = tf.shape[0], i
    f_arr, f1_arr, f2_arr = np.empty(n), np.empty(n), np.empty(n)
    cdef double[::1] f = f_arr, f1 = f1_arr, f2 = f2_arr
    cdef double a, b, c
    with nogil:
        for i in range(n):
            _conj(kind, gamma, tf[i], &a, &b, &c)
            f[i] = a
            f1[i] = b
            f2[i] = c
    shape = np.shape(t)
    return f_arr.reshape(shape), f1_arr.reshape(shape), f2_arr.reshape(shape)


def grid_objective(int kind, double gamma, weights, base, basis, coeffs):
    cdef cnp.ndarray[double, ndim=1] w = np.ascontiguousarray(weights, dtype=float)
    cdef cnp.ndarray[double, ndim=1] b0 = np.ascontiguousarray(base, dtype=float)
    cdef Py_ssize_t n = b0.shape[0]
    basis, coeffs = grid_shapes(n, basis, coeffs)
    cdef cnp.ndarray[double, ndim=2] B = np.ascontiguousarray(basis)
    cdef Py_ssize_t dim = B.shape[1]
    cdef cnp.ndarray[double, ndim=2] C = np.ascontiguousarray(coeffs)
    cdef Py_ssize_t m = C.shape[0], k, j, d
    cdef cnp.ndarray[double, ndim=1] out = np.empty(m)
    cdef double acc, q
    with nogil:
        for k in range(m):
            acc = 0.0
            for j in range(n):
                q = b0[j]
                for d in range(dim):
                    q = q + B[j, d] * C[k, d]
                acc = acc + w[j] * _phi(kind, gamma, q)
                if acc == INFINITY:
                    break
            out[k] = acc
    return out

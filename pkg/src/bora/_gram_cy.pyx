# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gram and marginal-likelihood kernels.

Mirrors the functions in the numpy fallback module; the likelihood entry
points factorize through LAPACK directly so a hyperparameter search pays one
C call per evaluation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, NAN, exp, fabs, log, pow
from scipy.linalg.cython_lapack cimport dpotrf, dpotrs

cnp.import_array()


def se_cross_gram(const double[:, ::1] x, const double[:, ::1] z,
                  const double[::1] lengthscales, double signal_variance):
    """Squared-exponential cross Gram matrix, shape (len(x), len(z))."""
    cdef Py_ssize_t n = x.shape[0], q = z.shape[0], d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, q))
    cdef double[:, ::1] o = out
    inv_np = np.ascontiguousarray(1.0 / np.square(np.asarray(lengthscales)))
    cdef double[::1] inv2 = inv_np
    cdef Py_ssize_t i, j, k
    cdef double s, t
    for i in range(n):
        for j in range(q):
            s = 0.0
            for k in range(d):
                t = x[i, k] - z[j, k]
                s += t * t * inv2[k]
            o[i, j] = signal_variance * exp(-0.5 * s)
    return out


def wse_cross_gram(const double[:, ::1] a, const double[:, ::1] b,
                   double p, double scale, double signal_variance):
    """Wasserstein squared-exponential cross Gram matrix over weight rows."""
    cdef Py_ssize_t n = a.shape[0], q = b.shape[0], m = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, q))
    cdef double[:, ::1] o = out
    cdef double e = 2.0 / p
    cdef double inv_s2 = 1.0 / (scale * scale)
    cdef Py_ssize_t i, j, k
    cdef double tv, w2
    for i in range(n):
        for j in range(q):
            tv = 0.0
            for k in range(m):
                tv += fabs(a[i, k] - b[j, k])
            tv *= 0.5
            w2 = tv if e == 1.0 else pow(tv, e)
            o[i, j] = signal_variance * exp(-0.5 * w2 * inv_s2)
    return out


def lml_se(const double[:, :, ::1] d2stack, const double[::1] inv_ell2,
           double signal_variance, double noise_variance, const double[::1] y):
    """Gaussian log marginal likelihood from precomputed squared differences.

    d2stack has shape (n, n, d) with per-dimension squared input differences.
    Returns NaN when the shifted Gram matrix is not positive definite.
    """
    cdef Py_ssize_t n = d2stack.shape[0], d = d2stack.shape[2]
    cdef cnp.ndarray[double, ndim=2] kmat = np.empty((n, n))
    cdef double[:, ::1] km = kmat
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        km[i, i] = signal_variance + noise_variance
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                s += inv_ell2[k] * d2stack[i, j, k]
            s = signal_variance * exp(-0.5 * s)
            km[i, j] = s
            km[j, i] = s
    return _lml_inplace(kmat, y)


def lml_wse(const double[:, ::1] tv, double p, double scale,
            double signal_variance, double noise_variance, const double[::1] y):
    """Gaussian log marginal likelihood from a precomputed total-variation matrix."""
    cdef Py_ssize_t n = tv.shape[0]
    cdef cnp.ndarray[double, ndim=2] kmat = np.empty((n, n))
    cdef double[:, ::1] km = kmat
    cdef double e = 2.0 / p
    cdef double inv_s2 = 1.0 / (scale * scale)
    cdef Py_ssize_t i, j
    cdef double w2, s
    for i in range(n):
        km[i, i] = signal_variance + noise_variance
        for j in range(i + 1, n):
            w2 = tv[i, j] if e == 1.0 else pow(tv[i, j], e)
            s = signal_variance * exp(-0.5 * w2 * inv_s2)
            km[i, j] = s
            km[j, i] = s
    return _lml_inplace(kmat, y)


cdef double _lml_inplace(cnp.ndarray[double, ndim=2] kmat, const double[::1] y):
    # A symmetric matrix has the same bytes in C and Fortran order, so the
    # LAPACK calls can use the C buffer as long as uplo stays consistent.
    cdef int n = <int> kmat.shape[0], info = 0, nrhs = 1
    cdef char uplo = b"L"
    cdef cnp.ndarray[double, ndim=1] alpha = np.asarray(y).copy()
    cdef double[:, ::1] km = kmat
    cdef double[::1] al = alpha
    dpotrf(&uplo, &n, &km[0, 0], &n, &info)
    if info != 0:
        return NAN
    dpotrs(&uplo, &n, &nrhs, &km[0, 0], &n, &al[0], &n, &info)
    if info != 0:
        return NAN
    cdef double quad = 0.0, logdet = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        quad += y[i] * al[i]
        logdet += log(km[i, i])
    return -0.5 * quad - logdet - 0.5 * n * log(2.0 * M_PI)

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: CSR matvec and the Jacobi-preconditioned CG loop.

Signature-compatible with kernels._fallback; the operator is A + diag(shift)
with A given by raw CSR arrays.  Summation order is fixed (row-major, then
sequential dots) so repeated runs are bit-identical.
"""

from libc.math cimport sqrt

import numpy as np


cpdef void csr_matvec(const double[::1] data, const int[::1] indices,
                      const int[::1] indptr, const double[::1] x,
                      double[::1] out) noexcept:
    cdef Py_ssize_t i, jj, n = out.shape[0]
    cdef double acc
    for i in range(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        out[i] = acc


cdef double _dot(const double[::1] a, const double[::1] b) noexcept:
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i] * b[i]
    return acc


def cg_shifted(data, indices, indptr, shift, b, x, double tol, Py_ssize_t maxiter):
    """Solve (A + diag(shift)) x = b by preconditioned CG, in place in x.

    Stops when ||b - (A+S)x||_2 <= tol * ||b||_2 (or absolute tol if b = 0).
    Returns (iterations, relative_residual).
    """
    cdef const double[::1] dv = data
    cdef const int[::1] iv = indices
    cdef const int[::1] pv = indptr
    cdef const double[::1] sv = shift
    cdef const double[::1] bv = b
    cdef double[::1] xv = x

    cdef Py_ssize_t n = bv.shape[0]
    cdef Py_ssize_t i, jj, it
    cdef double bnorm, rz, rz_new, alpha, beta, pap, rnorm

    diag = np.zeros(n)
    cdef double[::1] dg = diag
    for i in range(n):
        for jj in range(pv[i], pv[i + 1]):
            if iv[jj] == i:
                dg[i] += dv[jj]
        dg[i] += sv[i]
        if dg[i] <= 0.0:
            dg[i] = 1.0

    bnorm = sqrt(_dot(bv, bv))
    if bnorm == 0.0:
        for i in range(n):
            xv[i] = 0.0
        return 0, 0.0

    r = np.zeros(n)
    z = np.zeros(n)
    p = np.zeros(n)
    ap = np.zeros(n)
    cdef double[::1] rv = r
    cdef double[::1] zv = z
    cdef double[::1] qv = p
    cdef double[::1] av = ap

    csr_matvec(dv, iv, pv, xv, av)
    for i in range(n):
        rv[i] = bv[i] - (av[i] + sv[i] * xv[i])
        zv[i] = rv[i] / dg[i]
        qv[i] = zv[i]
    rz = _dot(rv, zv)
    rnorm = sqrt(_dot(rv, rv))
    if rnorm <= tol * bnorm:
        return 0, rnorm / bnorm

    for it in range(1, maxiter + 1):
        csr_matvec(dv, iv, pv, qv, av)
        for i in range(n):
            av[i] += sv[i] * qv[i]
        pap = _dot(qv, av)
        if pap <= 0.0:
            break
        alpha = rz / pap
        for i in range(n):
            xv[i] += alpha * qv[i]
            rv[i] -= alpha * av[i]
        rnorm = sqrt(_dot(rv, rv))
        if rnorm <= tol * bnorm:
            return it, rnorm / bnorm
        for i in range(n):
            zv[i] = rv[i] / dg[i]
        rz_new = _dot(rv, zv)
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            qv[i] = zv[i] + beta * qv[i]

    return maxiter, rnorm / bnorm

"""Pure numpy/scipy implementations of the hot kernels.

Same call signatures as the compiled module; used when the extension was
not built.  The CG loop is the classic preconditioned recursion with a
Jacobi preconditioner built from diag(A) + shift.
"""

import numpy as np
import scipy.sparse as sp


def _wrap(data, indices, indptr):
    n = len(indptr) - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n), copy=False)


def csr_matvec(data, indices, indptr, x, out):
    A = _wrap(data, indices, indptr)
    out[:] = A.dot(x)


def cg_shifted(data, indices, indptr, shift, b, x, tol, maxiter):
    """Solve (A + diag(shift)) x = b by preconditioned CG, in place in x.

    Stops when ||b - (A+S)x||_2 <= tol * ||b||_2.  Returns
    (iterations, relative_residual).
    """
    A = _wrap(data, indices, indptr)
    n = b.shape[0]

    diag = A.diagonal() + shift
    diag = np.where(diag > 0.0, diag, 1.0)

    bnorm = float(np.sqrt(np.dot(b, b)))
    if bnorm == 0.0:
        x[:] = 0.0
        return 0, 0.0

    r = b - (A.dot(x) + shift * x)
    z = r / diag
    p = z.copy()
    rz = float(np.dot(r, z))
    rnorm = float(np.sqrt(np.dot(r, r)))
    if rnorm <= tol * bnorm:
        return 0, rnorm / bnorm

    for it in range(1, maxiter + 1):
        ap = A.dot(p) + shift * p
        pap = float(np.dot(p, ap))
        if pap <= 0.0:
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rnorm = float(np.sqrt(np.dot(r, r)))
        if rnorm <= tol * bnorm:
            return it, rnorm / bnorm
        z = r / diag
        rz_new = float(np.dot(r, z))
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p

    return maxiter, rnorm / bnorm

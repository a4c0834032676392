# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels.

Same contract as :mod:`degenctl._sweeps_py`; see that module for the
meaning of every argument.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef int _thomas(const double[::1] lo, const double[::1] di, const double[::1] up,
                 double[::1] rhs, double[::1] cp) noexcept nogil:
    # Solves in place; rhs holds the solution on return.  lo[0], up[n-1] unused.
    cdef Py_ssize_t n = di.shape[0]
    cdef Py_ssize_t j
    cdef double denom
    denom = di[0]
    if denom == 0.0:
        return -1
    cp[0] = up[0] / denom
    rhs[0] = rhs[0] / denom
    for j in range(1, n):
        denom = di[j] - lo[j] * cp[j - 1]
        if denom == 0.0:
            return -1
        cp[j] = up[j] / denom
        rhs[j] = (rhs[j] - lo[j] * rhs[j - 1]) / denom
    for j in range(n - 2, -1, -1):
        rhs[j] -= cp[j] * rhs[j + 1]
    return 0


def thomas_solve(lower, diag, upper, rhs):
    cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    x = np.array(rhs, dtype=np.float64, copy=True, order="C")
    cdef double[::1] xv = x
    cdef double[::1] cp = np.empty(di.shape[0])
    if _thomas(lo, di, up, xv, cp) != 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    return x


def forward_sweep(lower, diag, upper, bvals, double theta, double dt, memk,
                  u0, inj, bint has_memory=True):
    cdef double[::1] L = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] D = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] U = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(bvals, dtype=np.float64)
    cdef double[:, ::1] M = np.ascontiguousarray(memk, dtype=np.float64)
    cdef double[:, ::1] F = np.ascontiguousarray(inj, dtype=np.float64)
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t nt = b.shape[0] - 1
    out = np.zeros((nt + 1, n))
    out[0] = u0
    cdef double[:, ::1] S = out
    cdef double[::1] lo = np.empty(n)
    cdef double[::1] di = np.empty(n)
    cdef double[::1] up = np.empty(n)
    cdef double[::1] rhs = np.empty(n)
    cdef double[::1] cp = np.empty(n)
    cdef Py_ssize_t k, m, j
    cdef double c_impl, c_expl, w, dt2 = dt * dt
    cdef int status = 0
    with nogil:
        for k in range(nt):
            c_impl = theta * dt * b[k + 1]
            c_expl = (1.0 - theta) * dt * b[k]
            for j in range(n):
                rhs[j] = S[k, j] + F[k + 1, j]
                if c_expl != 0.0:
                    w = D[j] * S[k, j]
                    if j > 0:
                        w = w + L[j] * S[k, j - 1]
                    if j < n - 1:
                        w = w + U[j] * S[k, j + 1]
                    rhs[j] += c_expl * w
                lo[j] = -c_impl * L[j]
                up[j] = -c_impl * U[j]
                di[j] = 1.0 - c_impl * D[j]
            if has_memory:
                for m in range(k + 1):
                    w = M[k + 1, m] * dt2
                    if m == 0:
                        w = 0.5 * w
                    if w != 0.0:
                        for j in range(n):
                            rhs[j] -= w * S[m, j]
                w = 0.5 * dt2 * M[k + 1, k + 1]
                for j in range(n):
                    di[j] += w
            status = _thomas(lo, di, up, rhs, cp)
            if status != 0:
                break
            for j in range(n):
                S[k + 1, j] = rhs[j]
    if status != 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    return out


def adjoint_sweep(lower, diag, upper, bvals, double theta, double dt, memk,
                  g, bint has_memory=True):
    cdef double[::1] L = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] D = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] U = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(bvals, dtype=np.float64)
    cdef double[:, ::1] M = np.ascontiguousarray(memk, dtype=np.float64)
    cdef double[:, ::1] G = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t nt = b.shape[0] - 1
    out = np.zeros((nt + 1, n))
    cdef double[:, ::1] P = out
    cdef double[::1] lo = np.empty(n)
    cdef double[::1] di = np.empty(n)
    cdef double[::1] up = np.empty(n)
    cdef double[::1] rhs = np.empty(n)
    cdef double[::1] cp = np.empty(n)
    cdef Py_ssize_t k, m, j
    cdef double c_impl, c_expl, w, dt2 = dt * dt
    cdef int status = 0
    with nogil:
        for k in range(nt, 0, -1):
            c_impl = theta * dt * b[k]
            c_expl = (1.0 - theta) * dt * b[k]
            for j in range(n):
                rhs[j] = G[k, j]
                # transposed operator: sub-diagonal of A^T is U shifted, super is L shifted
                lo[j] = -c_impl * U[j - 1] if j > 0 else 0.0
                up[j] = -c_impl * L[j + 1] if j < n - 1 else 0.0
                di[j] = 1.0 - c_impl * D[j]
            if k < nt:
                for j in range(n):
                    w = P[k + 1, j]
                    if c_expl != 0.0:
                        w = w + c_expl * D[j] * P[k + 1, j]
                        if j > 0:
                            w = w + c_expl * U[j - 1] * P[k + 1, j - 1]
                        if j < n - 1:
                            w = w + c_expl * L[j + 1] * P[k + 1, j + 1]
                    rhs[j] += w
            if has_memory:
                for m in range(k + 1, nt + 1):
                    w = M[m, k] * dt2
                    if w != 0.0:
                        for j in range(n):
                            rhs[j] -= w * P[m, j]
                w = 0.5 * dt2 * M[k, k]
                for j in range(n):
                    di[j] += w
            status = _thomas(lo, di, up, rhs, cp)
            if status != 0:
                break
            for j in range(n):
                P[k, j] = rhs[j]
    if status != 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    return out

"""NumPy fallback for the time-stepping kernels.

Both sweeps integrate the θ-scheme with trapezoidal Volterra memory,

    B_{k+1} u^{k+1} = C_k u^k + inj[k+1] - dt^2 (M[k+1,0] u^0 / 2 + sum_{m=1..k} M[k+1,m] u^m)
    B_{k+1} = I - θ dt b_{k+1} A + (dt^2 / 2) M[k+1,k+1] I
    C_k     = I + (1 - θ) dt b_k A

where A is the unit (b = 1) tridiagonal operator given by its row-aligned
diagonals ``lower``, ``diag``, ``upper``.  ``adjoint_sweep`` solves the
transposed block system ``S^T p = g`` of that recurrence, so that
``sum_k g[k] . u[k] == sum_k p[k] . inj[k]`` when ``u0 = 0``.
"""

import numpy as np
from scipy.linalg import solve_banded


def thomas_solve(lower, diag, upper, rhs):
    """Thomas elimination; ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = len(diag)
    cp = np.empty(n)
    x = np.array(rhs, dtype=float)
    if diag[0] == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    cp[0] = upper[0] / diag[0]
    x[0] = x[0] / diag[0]
    for j in range(1, n):
        denom = diag[j] - lower[j] * cp[j - 1]
        if denom == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        cp[j] = upper[j] / denom
        x[j] = (x[j] - lower[j] * x[j - 1]) / denom
    for j in range(n - 2, -1, -1):
        x[j] -= cp[j] * x[j + 1]
    return x


def _banded(lower, diag, upper, scale, shift):
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = -scale * upper[:-1]
    ab[1, :] = 1.0 - scale * diag + shift
    ab[2, :-1] = -scale * lower[1:]
    return ab


def _apply(lower, diag, upper, u):
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def _apply_t(lower, diag, upper, p):
    out = diag * p
    out[1:] += upper[:-1] * p[:-1]
    out[:-1] += lower[1:] * p[1:]
    return out


def forward_sweep(lower, diag, upper, bvals, theta, dt, memk, u0, inj, has_memory=True):
    nt = len(bvals) - 1
    n = len(diag)
    S = np.zeros((nt + 1, n))
    S[0] = u0
    dt2 = dt * dt
    hist_w = np.ones(nt + 1)
    hist_w[0] = 0.5
    for k in range(nt):
        rhs = S[k] + inj[k + 1]
        c_expl = (1.0 - theta) * dt * bvals[k]
        if c_expl != 0.0:
            rhs = rhs + c_expl * _apply(lower, diag, upper, S[k])
        shift = 0.0
        if has_memory:
            rhs = rhs - dt2 * ((hist_w[: k + 1] * memk[k + 1, : k + 1]) @ S[: k + 1])
            shift = 0.5 * dt2 * memk[k + 1, k + 1]
        ab = _banded(lower, diag, upper, theta * dt * bvals[k + 1], shift)
        S[k + 1] = solve_banded((1, 1), ab, rhs, check_finite=False)
    return S


def adjoint_sweep(lower, diag, upper, bvals, theta, dt, memk, g, has_memory=True):
    nt = len(bvals) - 1
    n = len(diag)
    P = np.zeros((nt + 1, n))
    dt2 = dt * dt
    # B^T in banded storage: swap roles of the off-diagonals
    lo_t = np.concatenate(([0.0], upper[:-1]))
    up_t = np.concatenate((lower[1:], [0.0]))
    for k in range(nt, 0, -1):
        rhs = np.array(g[k], dtype=float)
        if k < nt:
            rhs += P[k + 1]
            c_expl = (1.0 - theta) * dt * bvals[k]
            if c_expl != 0.0:
                rhs += c_expl * _apply_t(lower, diag, upper, P[k + 1])
        shift = 0.0
        if has_memory:
            rhs -= dt2 * (memk[k + 1 :, k] @ P[k + 1 :])
            shift = 0.5 * dt2 * memk[k, k]
        ab = _banded(lo_t, diag, up_t, theta * dt * bvals[k], shift)
        P[k] = solve_banded((1, 1), ab, rhs, check_finite=False)
    return P

"""Numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation so the two backends agree
to rounding. They are used whenever the compiled module is unavailable.
"""
from math import factorial

import numpy as np

PADE_ORDER = 8
# ||A||_1 bound for the [8/8] core; the truncation error there is far below 1e-16.
PADE_THETA = 1.0
PIVOT_FLOOR = 1e-13


def _pade_coefficients(m):
    return np.array(
        [
            factorial(2 * m - k) * factorial(m) / (factorial(2 * m) * factorial(k) * factorial(m - k))
            for k in range(m + 1)
        ]
    )


PADE_COEFFS = _pade_coefficients(PADE_ORDER)


def squaring_count(norm1):
    if norm1 <= PADE_THETA:
        return 0
    return int(np.ceil(np.log2(norm1 / PADE_THETA)))


def expm(a):
    a = np.asarray(a)
    n = a.shape[0]
    s = squaring_count(np.abs(a).sum(axis=0).max() if n else 0.0)
    if s:
        a = a / (2.0**s)
    c = PADE_COEFFS
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    a8 = a4 @ a4
    u = a @ (c[1] * ident + c[3] * a2 + c[5] * a4 + c[7] * a6)
    v = c[0] * ident + c[2] * a2 + c[4] * a4 + c[6] * a6 + c[8] * a8
    f = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        f = f @ f
    return f


def wn_matrix(ads, tau):
    """Column j is column j of exp(tau_0 ad_0) ... exp(tau_{j-1} ad_{j-1})."""
    n = ads.shape[0]
    m = np.empty((n, n))
    p = np.eye(n)
    for j in range(n):
        m[:, j] = p[:, j]
        if j < n - 1 and tau[j] != 0.0:
            p = p @ expm(tau[j] * ads[j])
    return m


def lu_solve_det(m, x):
    """Solve m y = x by LU with partial pivoting.

    Returns (y, det, ok); ok is False when a pivot falls below PIVOT_FLOOR,
    in which case y is filled with nan.
    """
    a = np.array(m, dtype=float)
    b = np.array(x, dtype=float)
    n = a.shape[0]
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < PIVOT_FLOOR:
            return np.full(n, np.nan), 0.0, False
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
            det = -det
        det *= a[k, k]
        f = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(f, a[k, k:])
        b[k + 1 :] -= f * b[k]
    y = np.empty(n)
    for k in range(n - 1, -1, -1):
        y[k] = (b[k] - a[k, k + 1 :] @ y[k + 1 :]) / a[k, k]
    return y, det, True


def wn_rhs(ads, tau, x):
    return lu_solve_det(wn_matrix(ads, tau), x)


def wn_det(ads, tau):
    return float(np.linalg.det(wn_matrix(ads, tau)))

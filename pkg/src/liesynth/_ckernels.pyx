# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense kernels: small-matrix exponential and the Wei-Norman matrix.

Same algorithms as ``_pykernels``: [8/8] Pade core with scaling and squaring,
LU with partial pivoting for the Pade solve and the Wei-Norman right-hand side.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, ceil, log2
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport dgemm, zgemm

cnp.import_array()

ctypedef fused scalar:
    double
    double complex

cdef double PADE_THETA = 1.0
cdef double PIVOT_FLOOR = 1e-13
cdef double C[9]
C[:] = [1.0, 0.5, 0.11666666666666667, 0.016666666666666666, 0.0016025641025641025,
        0.00010683760683760684, 4.856254856254856e-06, 1.3875013875013875e-07,
        1.9270852604185937e-09]


cdef inline double _abs(scalar z) nogil:
    if scalar is double:
        return fabs(z)
    else:
        return (z.real * z.real + z.imag * z.imag) ** 0.5


cdef void _matmul(int n, scalar* a, scalar* b, scalar* out) noexcept nogil:
    """out = a @ b for row-major n x n; BLAS sees the transposed problem b^T a^T."""
    cdef char t = b'N'
    cdef double one = 1.0, zero = 0.0
    cdef double complex zone = 1.0, zzero = 0.0
    if scalar is double:
        dgemm(&t, &t, &n, &n, &n, &one, b, &n, a, &n, &zero, out, &n)
    else:
        zgemm(&t, &t, &n, &n, &n, &zone, b, &n, a, &n, &zzero, out, &n)


cdef int _lu_solve(int n, scalar* a, scalar* b, int nrhs, double* det_out) noexcept nogil:
    """In-place LU solve of a X = b (b is n x nrhs, row-major). Returns 0 on a tiny pivot."""
    cdef int i, j, k, p
    cdef double best, v
    cdef scalar t, f
    cdef double det_sign = 1.0
    cdef scalar det = 1
    for k in range(n):
        p = k
        best = _abs(a[k * n + k])
        for i in range(k + 1, n):
            v = _abs(a[i * n + k])
            if v > best:
                best = v
                p = i
        if best < PIVOT_FLOOR:
            if det_out != NULL:
                det_out[0] = 0.0
            return 0
        if p != k:
            det_sign = -det_sign
            for j in range(n):
                t = a[k * n + j]; a[k * n + j] = a[p * n + j]; a[p * n + j] = t
            for j in range(nrhs):
                t = b[k * nrhs + j]; b[k * nrhs + j] = b[p * nrhs + j]; b[p * nrhs + j] = t
        det = det * a[k * n + k]
        for i in range(k + 1, n):
            f = a[i * n + k] / a[k * n + k]
            if f == 0:
                continue
            for j in range(k, n):
                a[i * n + j] -= f * a[k * n + j]
            for j in range(nrhs):
                b[i * nrhs + j] -= f * b[k * nrhs + j]
    for k in range(n - 1, -1, -1):
        for j in range(nrhs):
            t = b[k * nrhs + j]
            for i in range(k + 1, n):
                t = t - a[k * n + i] * b[i * nrhs + j]
            b[k * nrhs + j] = t / a[k * n + k]
    if det_out != NULL:
        if scalar is double:
            det_out[0] = det_sign * det
        else:
            det_out[0] = det_sign * det.real
    return 1


cdef int _expm(int n, scalar* a, scalar* out) noexcept nogil:
    """out = exp(a); a is left untouched. Returns 0 if the Pade solve failed."""
    cdef int i, j, s = 0
    cdef double norm1 = 0.0, col
    cdef int nn = n * n
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += _abs(a[i * n + j])
        if col > norm1:
            norm1 = col
    if norm1 > PADE_THETA:
        s = <int>ceil(log2(norm1 / PADE_THETA))
    cdef double scale = 1.0
    for i in range(s):
        scale *= 0.5

    cdef scalar* work = <scalar*>malloc(7 * nn * sizeof(scalar))
    if work == NULL:
        return 0
    cdef scalar* x = work
    cdef scalar* a2 = work + nn
    cdef scalar* a4 = work + 2 * nn
    cdef scalar* a6 = work + 3 * nn
    cdef scalar* a8 = work + 4 * nn
    cdef scalar* tmp = work + 5 * nn
    cdef scalar* u = work + 6 * nn
    cdef int ok

    for i in range(nn):
        x[i] = a[i] * scale
    _matmul(n, x, x, a2)
    _matmul(n, a2, a2, a4)
    _matmul(n, a4, a2, a6)
    _matmul(n, a4, a4, a8)
    for i in range(nn):
        tmp[i] = C[3] * a2[i] + C[5] * a4[i] + C[7] * a6[i]
        out[i] = C[2] * a2[i] + C[4] * a4[i] + C[6] * a6[i] + C[8] * a8[i]
    for i in range(n):
        tmp[i * n + i] += C[1]
        out[i * n + i] += C[0]
    _matmul(n, x, tmp, u)
    # out <- V + U (rhs), tmp <- V - U (lhs)
    for i in range(nn):
        tmp[i] = out[i] - u[i]
        out[i] = out[i] + u[i]
    ok = _lu_solve(n, tmp, out, n, NULL)
    for j in range(s):
        _matmul(n, out, out, a2)
        for i in range(nn):
            out[i] = a2[i]
    free(work)
    return ok


def expm(a):
    arr = np.asarray(a)
    n = arr.shape[0]
    if np.iscomplexobj(arr):
        return _expm_complex(np.ascontiguousarray(arr, dtype=np.complex128), n)
    return _expm_real(np.ascontiguousarray(arr, dtype=np.float64), n)


cdef _expm_real(double[:, ::1] a, int n):
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    if n == 0:
        return out
    if not _expm(n, &a[0, 0], &o[0, 0]):
        raise ArithmeticError("singular Pade denominator")
    return out


cdef _expm_complex(double complex[:, ::1] a, int n):
    out = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    if n == 0:
        return out
    if not _expm(n, &a[0, 0], &o[0, 0]):
        raise ArithmeticError("singular Pade denominator")
    return out


cdef void _wn_matrix(int n, double* ads, double* tau, double* m, double* p,
                     double* e, double* t, double* scaled) noexcept nogil:
    cdef int i, j, k
    cdef int nn = n * n
    for i in range(nn):
        p[i] = 0.0
    for i in range(n):
        p[i * n + i] = 1.0
    for j in range(n):
        for i in range(n):
            m[i * n + j] = p[i * n + j]
        if j < n - 1 and tau[j] != 0.0:
            for k in range(nn):
                scaled[k] = tau[j] * ads[j * nn + k]
            _expm(n, scaled, e)
            _matmul(n, p, e, t)
            for k in range(nn):
                p[k] = t[k]


def wn_matrix(ads, tau):
    cdef double[:, :, ::1] A = np.ascontiguousarray(ads, dtype=np.float64)
    cdef double[::1] T = np.ascontiguousarray(tau, dtype=np.float64)
    cdef int n = A.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] M = out
    buf = np.empty(4 * n * n, dtype=np.float64)
    cdef double[::1] B = buf
    if n == 0:
        return out
    with nogil:
        _wn_matrix(n, &A[0, 0, 0], &T[0], &M[0, 0], &B[0], &B[n * n], &B[2 * n * n], &B[3 * n * n])
    return out


def lu_solve_det(m, x):
    cdef double[:, ::1] M = np.array(m, dtype=np.float64, order="C")
    y = np.array(x, dtype=np.float64)
    cdef double[::1] Y = y
    cdef int n = M.shape[0]
    cdef double det = 0.0
    cdef int ok
    with nogil:
        ok = _lu_solve(n, &M[0, 0], &Y[0], 1, &det)
    if not ok:
        return np.full(n, np.nan), 0.0, False
    return y, det, True


def wn_rhs(ads, tau, x):
    cdef double[:, :, ::1] A = np.ascontiguousarray(ads, dtype=np.float64)
    cdef double[::1] T = np.ascontiguousarray(tau, dtype=np.float64)
    cdef int n = A.shape[0]
    y = np.array(x, dtype=np.float64)
    cdef double[::1] Y = y
    buf = np.empty(5 * n * n, dtype=np.float64)
    cdef double[::1] B = buf
    cdef double det = 0.0
    cdef int ok
    with nogil:
        _wn_matrix(n, &A[0, 0, 0], &T[0], &B[0], &B[n * n], &B[2 * n * n], &B[3 * n * n], &B[4 * n * n])
        ok = _lu_solve(n, &B[0], &Y[0], 1, &det)
    if not ok:
        return np.full(n, np.nan), 0.0, False
    return y, det, True


def wn_det(ads, tau):
    m = wn_matrix(ads, tau)
    return float(np.linalg.det(m))

"""Dense matrix kernels for su(N) work: exp, unitary log, brackets, vectorization.

Two real vectorizations of a 4x4 skew-Hermitian matrix are provided:

``vectorize``
    coefficients over the orthogonal tensor basis ``TENSOR_BASIS`` built from
    the quaternion units (an isometry up to the factor 2).
``real_parameters``
    the 16 free real numbers of the matrix itself: imaginary parts of the
    diagonal, then real and imaginary parts of each upper-triangle entry.
    Conditioning of control bases and the 16x16 determinant use this one.
"""
import warnings

import numpy as np
from scipy.linalg import schur

from . import kernels
from .errors import DimensionError, DomainError, NumericFailure

ONE = np.eye(2, dtype=complex)
QI = np.array([[0, 1j], [1j, 0]])
QJ = np.array([[0, -1], [1, 0]], dtype=complex)
QK = np.array([[1j, 0], [0, -1j]])
QUATERNION_UNITS = (ONE, QI, QJ, QK)


def _tensor_basis():
    basis = []
    for a, ua in enumerate(QUATERNION_UNITS):
        for b, ub in enumerate(QUATERNION_UNITS):
            m = np.kron(ua, ub)
            # a product of two skew (or two Hermitian) factors is Hermitian
            if (a == 0) == (b == 0):
                m = 1j * m
            basis.append(m)
    return np.array(basis)


TENSOR_BASIS = _tensor_basis()
TENSOR_BASIS.setflags(write=False)
_BASIS_NORM2 = 4.0
_UPPER = np.triu_indices(4, 1)


class BranchAmbiguityWarning(UserWarning):
    """An eigenphase sits on the branch cut of the logarithm."""


def _square(a, name="matrix"):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def is_skew_hermitian(a, tol=1e-10):
    a = _square(a)
    return bool(np.abs(a + a.conj().T).max(initial=0.0) <= tol)


def is_traceless(a, tol=1e-10):
    return bool(abs(np.trace(_square(a))) <= tol)


def is_unitary(a, tol=1e-10):
    a = _square(a)
    return bool(np.abs(a.conj().T @ a - np.eye(a.shape[0])).max(initial=0.0) <= tol)


def rms_distance(a, b):
    """sqrt(tr(E^dag E) / n^2) for E = a - b, the entrywise rms error."""
    e = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.sum(np.abs(e) ** 2) / e.size))


def mat_exp(a):
    """Matrix exponential by scaling and squaring around an [8/8] Pade core."""
    a = _square(a)
    if not np.all(np.isfinite(a)):
        raise NumericFailure("matrix exponential of non-finite input")
    return kernels.expm(a)


def _echelon_basis(z):
    """Canonical orthonormal basis of span(z): Gram-Schmidt on the projector columns."""
    n, m = z.shape
    proj = z @ z.conj().T
    out = []
    for k in range(n):
        v = proj[:, k].copy()
        for w in out:
            v -= w * (w.conj() @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            out.append(v / nv)
            if len(out) == m:
                break
    return np.array(out).T


def mat_log_unitary(u, tol=1e-9, cluster_tol=1e-8):
    """Skew-Hermitian logarithm of a unitary matrix.

    Eigenphases are taken in (-pi, pi]. For det u = 1 the smallest number of
    phases is moved by 2 pi so that the result is traceless; the largest
    phases move first. Degenerate eigenspaces get a canonical basis (echelon
    order of their projector) and among exactly tied phases the later basis
    vector moves.
    """
    u = _square(u, "unitary")
    if not is_unitary(u, tol):
        raise DomainError("mat_log_unitary: input is not unitary within tolerance")
    n = u.shape[0]
    t, z = schur(u.astype(complex), output="complex")
    d = np.diag(t).copy()
    # group near-equal eigenvalues and canonicalize their eigenbasis
    order = []
    used = np.zeros(n, dtype=bool)
    for i in range(n):
        if used[i]:
            continue
        group = [j for j in range(n) if not used[j] and abs(d[j] - d[i]) < cluster_tol]
        used[group] = True
        order.append(group)
    cols, vals = [], []
    for group in order:
        zc = _echelon_basis(z[:, group]) if len(group) > 1 else z[:, group]
        lam = d[group].mean()
        for c in range(zc.shape[1]):
            cols.append(zc[:, c])
            vals.append(lam)
    z = np.array(cols).T
    d = np.array(vals)
    recon = z @ np.diag(d) @ z.conj().T
    if np.abs(recon - u).max() > 1e-11 * max(1.0, n):
        raise NumericFailure("unitary eigendecomposition residual too large")

    theta = np.angle(d)
    near_cut = np.abs(np.abs(theta) - np.pi) <= tol
    if near_cut.any():
        warnings.warn(
            "eigenphase on the branch cut; taking the +pi branch",
            BranchAmbiguityWarning,
            stacklevel=2,
        )
        theta[near_cut] = np.pi
    det = np.prod(d)
    if abs(det - 1.0) <= 1e-8 * n:
        k = int(round(theta.sum() / (2 * np.pi)))
        idx = np.arange(n)
        if k > 0:
            # largest phase first; exact ties go to the later vector
            pick = sorted(idx, key=lambda i: (round(theta[i], 9), i), reverse=True)[:k]
            theta[pick] -= 2 * np.pi
        elif k < 0:
            pick = sorted(idx, key=lambda i: (round(theta[i], 9), -i))[:-k]
            theta[pick] += 2 * np.pi
    log = z @ np.diag(1j * theta) @ z.conj().T
    return 0.5 * (log - log.conj().T)


def ad(x, y):
    x, y = _square(x), _square(y)
    if x.shape != y.shape:
        raise DimensionError(f"ad: shapes {x.shape} and {y.shape} differ")
    return x @ y - y @ x


def Ad(g, y, tol=1e-12):
    """Conjugation g y g^-1 (g^dag is used when g is unitary)."""
    g, y = _square(g), _square(y)
    if g.shape != y.shape:
        raise DimensionError(f"Ad: shapes {g.shape} and {y.shape} differ")
    if is_unitary(g, tol):
        return g @ y @ g.conj().T
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise DomainError("Ad: conjugating matrix is singular") from exc
    if not np.all(np.isfinite(ginv)) or np.linalg.cond(g) > 1e14:
        raise DomainError("Ad: conjugating matrix is singular")
    return g @ y @ ginv


def vectorize(x, return_residual=False):
    """Coordinates over TENSOR_BASIS; a non-skew-Hermitian input is projected."""
    x = _square(x)
    if x.shape != (4, 4):
        raise DimensionError(f"vectorize expects a 4x4 matrix, got {x.shape}")
    coords = np.einsum("kij,ij->k", TENSOR_BASIS.conj(), x).real / _BASIS_NORM2
    if return_residual:
        return coords, float(np.linalg.norm(x - devectorize(coords)))
    return coords


def devectorize(coords):
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (16,):
        raise DimensionError(f"devectorize expects 16 coordinates, got {coords.shape}")
    return np.einsum("k,kij->ij", coords, TENSOR_BASIS)


def real_parameters(x):
    """The 16 real parameters of a 4x4 skew-Hermitian matrix."""
    x = _square(x)
    if x.shape != (4, 4):
        raise DimensionError(f"real_parameters expects a 4x4 matrix, got {x.shape}")
    upper = x[_UPPER]
    return np.concatenate([np.diag(x).imag, np.column_stack([upper.real, upper.imag]).ravel()])


def from_real_parameters(p):
    p = np.asarray(p, dtype=float)
    x = np.zeros((4, 4), dtype=complex)
    x[np.diag_indices(4)] = 1j * p[:4]
    upper = p[4::2] + 1j * p[5::2]
    x[_UPPER] = upper
    x[(_UPPER[1], _UPPER[0])] = -upper.conj()
    return x


def independent_subset(vectors, tol=1e-9):
    """Indices of a maximal linearly independent subset, greedy in input order.

    A vector is rejected when its residual after projection onto the span
    accepted so far is below ``tol`` times its own norm, or when the vector
    itself is below ``tol`` times the largest norm in the list.
    """
    rows = np.atleast_2d(np.asarray(vectors, dtype=float))
    if rows.size == 0:
        return []
    norms = np.linalg.norm(rows, axis=1)
    scale = norms.max()
    if scale == 0.0:
        return []
    basis = []
    keep = []
    for i, v in enumerate(rows):
        if norms[i] <= tol * scale:
            continue
        r = v.copy()
        for _ in range(2):  # second sweep restores orthogonality lost to rounding
            for q in basis:
                r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol * norms[i]:
            basis.append(r / nr)
            keep.append(i)
    return keep


def gram_determinant_16(elements):
    """Determinant of the 16x16 real-parameter array of 15 elements plus i*identity."""
    elements = list(elements)
    if len(elements) != 15:
        raise DimensionError(f"gram_determinant_16 needs 15 elements, got {len(elements)}")
    rows = [real_parameters(np.asarray(e)) for e in elements]
    rows.append(real_parameters(1j * np.eye(4)))
    return float(np.linalg.det(np.array(rows)))


def condition_number(rows, zero_tol=None):
    """(sigma_max, sigma_min, ratio) of the stacked row vectors.

    Singular values below ``zero_tol`` (default max(shape) * eps * sigma_max)
    count as exactly zero, giving ratio = inf.
    """
    a = np.atleast_2d(np.asarray(rows, dtype=float))
    sv = np.linalg.svd(a, compute_uv=False)
    smax = float(sv.max(initial=0.0))
    smin = float(sv.min()) if sv.size else 0.0
    if sv.size < min(a.shape):
        smin = 0.0
    if zero_tol is None:
        zero_tol = max(a.shape) * np.finfo(float).eps * smax
    if smin <= zero_tol:
        smin = 0.0
    ratio = smax / smin if smin > 0 else float("inf")
    return smax, smin, ratio

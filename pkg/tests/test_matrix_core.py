import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liesynth.errors import DimensionError, DomainError, NumericFailure
from liesynth.matrix_core import (
    QI,
    QJ,
    QK,
    TENSOR_BASIS,
    Ad,
    BranchAmbiguityWarning,
    ad,
    condition_number,
    devectorize,
    from_real_parameters,
    gram_determinant_16,
    independent_subset,
    is_skew_hermitian,
    mat_exp,
    mat_log_unitary,
    real_parameters,
    rms_distance,
    vectorize,
)
from liesynth.spin import GeneratorSet, NamedBasis, PhysicalConstants

from .conftest import random_skew

seeds = st.integers(0, 2**32 - 1)


def taylor_exp(a, terms=30):
    out = np.eye(a.shape[0], dtype=complex)
    term = out.copy()
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


# mat_exp

def test_exp_of_zero_is_identity(backend):
    assert np.array_equal(mat_exp(np.zeros((4, 4))), np.eye(4))


def test_exp_coupling_period_is_identity(backend):
    c = PhysicalConstants()
    k = GeneratorSet(c).K
    u = mat_exp(c.coupling_scale * k * c.period_units)
    assert np.abs(u - np.eye(4)).max() < 1e-12


@given(seeds)
def test_exp_matches_taylor(seed):
    a = random_skew(np.random.default_rng(seed), traceless=False)
    assert np.abs(mat_exp(a) - taylor_exp(a)).max() < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7, 15])
def test_exp_general_real_and_complex(backend, n):
    from scipy.linalg import expm

    rng = np.random.default_rng(n)
    for a in (rng.normal(size=(n, n)) * 3, rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))):
        ref = expm(a)
        assert np.abs(mat_exp(a) - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


def test_exp_large_norm_uses_squaring():
    a = 40 * random_skew(np.random.default_rng(3))
    u = mat_exp(a)
    assert np.abs(u @ u.conj().T - np.eye(4)).max() < 1e-11


def test_exp_errors():
    with pytest.raises(DimensionError):
        mat_exp(np.zeros((2, 3)))
    with pytest.raises(NumericFailure):
        mat_exp(np.array([[np.nan, 0], [0, 0]]))


# mat_log_unitary

def test_log_identity_is_zero():
    assert np.abs(mat_log_unitary(np.eye(4))).max() < 1e-14


def test_log_of_j_times_i():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        log = mat_log_unitary(np.kron(QJ, QI))
    want = -1j * np.pi / 2 * (np.kron(QI, QJ) + np.kron(QK, QK))
    assert np.abs(log - want).max() < 1e-12
    assert any(issubclass(x.category, BranchAmbiguityWarning) for x in w)


def test_log_roundtrip_field_generator():
    x0 = GeneratorSet().X0
    assert np.abs(mat_log_unitary(mat_exp(0.3 * x0)) - 0.3 * x0).max() < 1e-12


@given(seeds)
def test_log_exp_roundtrip_inside_principal_branch(seed):
    a = random_skew(np.random.default_rng(seed), scale=2.5)
    assert np.abs(mat_log_unitary(mat_exp(a)) - a).max() < 1e-10


@given(seeds)
def test_log_is_traceless_for_special_unitary(seed):
    a = random_skew(np.random.default_rng(seed), scale=8.0)
    log = mat_log_unitary(mat_exp(a))
    assert is_skew_hermitian(log, 1e-10)
    assert abs(np.trace(log)) < 1e-9
    assert np.abs(mat_exp(log) - mat_exp(a)).max() < 1e-10


def test_log_minus_identity_branch_is_deterministic():
    u = -np.eye(4, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        a, b = mat_log_unitary(u), mat_log_unitary(u)
    assert np.array_equal(a, b)
    assert abs(np.trace(a)) < 1e-12
    assert np.abs(mat_exp(a) - u).max() < 1e-12


def test_log_rejects_non_unitary():
    with pytest.raises(DomainError):
        mat_log_unitary(2 * np.eye(4))


# ad and Ad

def test_ad_self_is_zero():
    x = random_skew(np.random.default_rng(0))
    assert np.abs(ad(x, x)).max() < 1e-15


def test_ad_k_x_is_kx():
    nb = NamedBasis()
    assert np.abs(0.5 * ad(nb["K"], nb["X"]) - nb["KX"]).max() < 1e-12


def test_ad_against_entrywise_products():
    g = GeneratorSet()
    x, y = g.X0, g.Y0
    brute = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            brute[i, j] = sum(x[i, k] * y[k, j] - y[i, k] * x[k, j] for k in range(4))
    assert np.abs(ad(x, y) - brute).max() < 1e-15


def test_ad_shape_mismatch():
    with pytest.raises(DimensionError):
        ad(np.zeros((2, 2)), np.zeros((4, 4)))


def test_Ad_identity():
    y = random_skew(np.random.default_rng(1))
    assert np.array_equal(Ad(np.eye(4), y), y)


def test_Ad_first_order_series():
    rng = np.random.default_rng(2)
    x, y = random_skew(rng), random_skew(rng)
    s = 1e-5
    got = Ad(mat_exp(s * x), y)
    assert np.abs(got - (y + s * ad(x, y))).max() < 10 * s**2


def test_Ad_non_unitary_uses_inverse():
    g = np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex)
    y = random_skew(np.random.default_rng(4))
    assert np.abs(Ad(g, y) - g @ y @ np.linalg.inv(g)).max() < 1e-14
    with pytest.raises(DomainError):
        Ad(np.zeros((4, 4)), y)


def test_Ad_H5_fixture(fixtures):
    c = PhysicalConstants()
    g = GeneratorSet(c)
    h5 = Ad(mat_exp((0.3015 * g.XU + g.KU) * 1.021), 1.109 * g.KU)
    assert np.abs(h5 - fixtures["H5"]).max() < 1e-12


@given(seeds)
def test_Ad_is_bracket_homomorphism(seed):
    rng = np.random.default_rng(seed)
    g = mat_exp(random_skew(rng, scale=2))
    x, y = random_skew(rng), random_skew(rng)
    assert np.abs(Ad(g, ad(x, y)) - ad(Ad(g, x), Ad(g, y))).max() < 1e-12


# vectorization

def test_vectorize_identity_direction():
    v = vectorize(1j * np.eye(4))
    assert v[0] == pytest.approx(1.0) and np.count_nonzero(np.abs(v) > 1e-15) == 1


def test_vectorize_K():
    v = vectorize(GeneratorSet().K)
    nz = np.flatnonzero(np.abs(v) > 1e-15)
    assert list(nz) == [5, 10, 15]  # (i,i), (j,j), (k,k)
    assert np.allclose(v[nz], 0.5)


def test_tensor_basis_is_orthogonal_skew():
    g = np.einsum("aij,bij->ab", TENSOR_BASIS.conj(), TENSOR_BASIS)
    assert np.abs(g - 4 * np.eye(16)).max() < 1e-15
    assert all(is_skew_hermitian(b) for b in TENSOR_BASIS)


@given(seeds)
def test_vectorize_roundtrip(seed):
    x = random_skew(np.random.default_rng(seed), traceless=False)
    assert np.abs(devectorize(vectorize(x)) - x).max() < 1e-12
    assert np.abs(from_real_parameters(real_parameters(x)) - x).max() < 1e-15


def test_vectorize_projects_and_reports_residual():
    h = np.diag([1.0, 0, 0, 0]).astype(complex)  # Hermitian, no skew part
    v, r = vectorize(h, return_residual=True)
    assert np.allclose(v, 0) and r == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        vectorize(np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        devectorize(np.zeros(15))


# independence, determinants, conditioning

def test_independent_subset_duplicates():
    v = np.arange(16.0)
    assert independent_subset([v, 2 * v]) == [0]
    assert independent_subset([np.zeros(4), np.zeros(4)]) == []
    assert independent_subset([]) == []


def test_named_fifteen_plus_identity_independent():
    nb = NamedBasis()
    rows = [real_parameters(m) for m in nb.fifteen("L")] + [real_parameters(1j * np.eye(4))]
    assert len(independent_subset(rows)) == 16


def test_kk_triple_relation():
    # the dependency that actually holds among the KK-type elements
    nb = NamedBasis()
    assert np.abs(nb["KXX"] + nb["KYY"] + nb["KZZ"] + 2 * nb["K"]).max() < 1e-15
    rows = [real_parameters(nb[k]) for k in ("KXX", "KYY", "KZZ", "K")]
    assert len(independent_subset(rows)) == 3


@given(seeds)
def test_independent_subset_matches_svd_rank(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 8))
    base = rng.normal(size=(k, 16))
    rows = rng.normal(size=(10, k)) @ base
    assert len(independent_subset(rows)) == np.linalg.matrix_rank(rows)


def test_gram_determinant_L_variant():
    assert gram_determinant_16(NamedBasis().fifteen("L")) == pytest.approx(-1 / 16, abs=1e-12)


def test_gram_determinant_repeated_element():
    m = NamedBasis().fifteen("L")
    m[3] = m[2]
    assert abs(gram_determinant_16(m)) < 1e-14
    with pytest.raises(DimensionError):
        gram_determinant_16(m[:14])


def test_condition_number_cases():
    assert condition_number(np.eye(5)) == (1.0, 1.0, 1.0)
    smax, smin, ratio = condition_number([[1.0, 2.0], [2.0, 4.0]])
    assert smin == 0.0 and ratio == math.inf
    smax, smin, ratio = condition_number(np.diag([3.0, 0.5]))
    assert (smax, smin, ratio) == pytest.approx((3.0, 0.5, 6.0))


def test_rms_distance_definition():
    e = np.zeros((4, 4))
    e[0, 0] = 4.0
    assert rms_distance(e, np.zeros((4, 4))) == pytest.approx(1.0)

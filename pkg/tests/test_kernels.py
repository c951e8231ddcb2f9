"""Compiled and numpy kernels must agree; each must satisfy its own contract."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm as scipy_expm

from liesynth import kernels

BACKENDS = kernels.available_backends()
seeds = st.integers(0, 2**32 - 1)


def test_default_backend_is_compiled_when_built():
    if "compiled" in BACKENDS:
        assert kernels.BACKEND == "compiled"


def test_use_backend_restores():
    before = kernels.expm
    with kernels.use_backend("python"):
        assert kernels.BACKEND == "python"
    assert kernels.expm is before
    with pytest.raises(ValueError):
        with kernels.use_backend("fortran"):
            pass


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("n,cplx", [(1, False), (4, True), (4, False), (15, False), (16, True)])
def test_expm_against_scipy(name, n, cplx):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(n, n)) + (1j * rng.normal(size=(n, n)) if cplx else 0)
    ref = scipy_expm(a)
    got = BACKENDS[name].expm(a)
    assert np.abs(got - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


@pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
@given(seeds)
def test_backends_agree_on_wn(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 16))
    ads = rng.normal(size=(n, n, n))
    tau = rng.uniform(-0.3, 0.3, n)
    x = rng.normal(size=n)
    py, c = BACKENDS["python"], BACKENDS["compiled"]
    mp, mc = py.wn_matrix(ads, tau), c.wn_matrix(ads, tau)
    assert np.abs(mp - mc).max() < 1e-11 * max(1.0, np.abs(mp).max())
    yp, dp, okp = py.wn_rhs(ads, tau, x)
    yc, dc, okc = c.wn_rhs(ads, tau, x)
    assert okp == okc
    if okp:
        assert np.abs(yp - yc).max() < 1e-8 * max(1.0, np.abs(yp).max())
        assert dp == pytest.approx(dc, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_lu_solve_det(name):
    rng = np.random.default_rng(0)
    m = rng.normal(size=(7, 7))
    x = rng.normal(size=7)
    y, det, ok = BACKENDS[name].lu_solve_det(m, x)
    assert ok
    assert np.abs(m @ y - x).max() < 1e-12
    assert det == pytest.approx(np.linalg.det(m), rel=1e-12)
    _, det0, ok0 = BACKENDS[name].lu_solve_det(np.zeros((3, 3)), np.ones(3))
    assert not ok0 and det0 == 0.0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_wn_matrix_at_zero_is_identity(name):
    ads = np.random.default_rng(1).normal(size=(6, 6, 6))
    assert np.array_equal(BACKENDS[name].wn_matrix(ads, np.zeros(6)), np.eye(6))

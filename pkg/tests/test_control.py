import dataclasses
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liesynth.control import (
    ControlParams,
    _objective,
    build_control_basis,
    components_in_basis,
    conditioning,
    optimize_params,
    random_params,
)
from liesynth.errors import DegenerateBasisError, NotInSpanError, ValidationError
from liesynth.matrix_core import BranchAmbiguityWarning, is_skew_hermitian, mat_log_unitary
from liesynth.reproduce import PAPER_X, jxi
from liesynth.spin import PhysicalConstants

from .conftest import random_skew

seeds = st.integers(0, 2**32 - 1)


def test_params_defaults_and_io(tmp_path):
    p = ControlParams()
    assert len(p.names()) == 33 and p.b1 == 2.003 and p.s15 == 1.377
    path = tmp_path / "p.json"
    p.to_json(path)
    assert ControlParams.from_json(path) == p
    assert ControlParams.from_array(p.as_array()) == p
    assert p.cap_violations() == ["b1", "b2", "b3"]
    path.write_text('{"b99": 1}')
    with pytest.raises(ValidationError):
        ControlParams.from_json(path)
    with pytest.raises(ValidationError):
        ControlParams(tau3=-0.1)
    with pytest.raises(ValidationError):
        ControlParams(b2=float("nan"))


def test_paper_conditioning(basis):
    assert basis.sigma_max == pytest.approx(15.82, abs=0.05)
    assert basis.sigma_min == pytest.approx(1.70, abs=0.05)
    assert basis.cond == pytest.approx(9.3, abs=0.1)
    assert basis.stacked_coords.shape == (15, 16)


def test_basis_is_reproducible(basis):
    again = build_control_basis()
    assert again.sigma_max == pytest.approx(basis.sigma_max, rel=1e-13)
    assert again.sigma_min == pytest.approx(basis.sigma_min, rel=1e-13)


def test_elements_match_fixtures(basis, fixtures):
    assert np.abs(basis.matrices[0] - fixtures["H1"]).max() < 1e-12
    assert np.abs(basis.matrices[4] - fixtures["H5"]).max() < 1e-12


def test_recipes_reconstruct(basis):
    shapes = [len(e.conjugators) for e in basis.elements]
    assert shapes == [0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2]
    for e in basis.elements:
        assert is_skew_hermitian(e.matrix, 1e-12)
        assert np.abs(e.reconstruct() - e.matrix).max() < 1e-10


def test_vanishing_conjugators_degenerate():
    tiny = {n: 1e-14 for n in ControlParams.names() if n[0] in "ts" and n not in ("tau1", "tau2", "tau3", "tau4")}
    for n in ("tau7", "tau10"):
        tiny[n] = 1e-14
    p = dataclasses.replace(ControlParams(), **tiny)
    with pytest.raises(DegenerateBasisError) as info:
        build_control_basis(p)
    assert info.value.sigma_min is not None


def test_cond_responds_to_perturbation():
    c = PhysicalConstants()
    base = conditioning()[2]
    for name in ("b5", "tau13", "c15"):
        for d in (1e-3, -1e-3):
            p = dataclasses.replace(ControlParams(), **{name: getattr(ControlParams(), name) + d})
            delta = conditioning(p, c)[2] - base
            assert np.isfinite(delta) and 0 < abs(delta) < 0.1


def test_components_of_paper_log(basis):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        x = components_in_basis(mat_log_unitary(jxi()), basis)
    assert np.abs(x - PAPER_X).max() <= 1e-3
    assert x[0] == pytest.approx(-0.287893, abs=1e-5)
    assert x[3] == pytest.approx(-0.846392, abs=1e-5)
    assert x[7] == pytest.approx(0.77681, abs=1e-5)
    assert x[14] == pytest.approx(-0.269563, abs=1e-5)


def test_components_of_basis_element(basis):
    x = components_in_basis(basis.matrices[2], basis)
    assert np.abs(x - np.eye(15)[2]).max() < 1e-12


@given(seeds)
def test_components_roundtrip(basis, seed):
    a = random_skew(np.random.default_rng(seed), scale=3.0)
    x, r = components_in_basis(a, basis, return_residual=True)
    assert np.abs(sum(c * m for c, m in zip(x, basis.matrices)) - a).max() < 1e-10


def test_components_rejects_trace(basis):
    with pytest.raises(NotInSpanError):
        components_in_basis(1j * np.eye(4), basis)


def test_optimize_from_defaults_does_not_regress():
    res = optimize_params(max_passes=30)
    assert res.cond <= 9.3 + 1e-6
    assert res.cond <= res.initial_cond
    assert all(b >= a for a, b in zip(res.history[1:], res.history[:-1]))


def test_optimize_random_start_regression():
    res = optimize_params(random_params(np.random.default_rng(0)), max_passes=40)
    assert res.initial_cond > 1000
    assert res.cond < 100
    assert res.cond == pytest.approx(8.390641159970876, rel=1e-6)
    assert build_control_basis(res.params).sigma_min > 0


def test_optimum_is_stationary():
    c = PhysicalConstants()
    res = optimize_params(max_passes=1000, improve_tol=1e-3)
    assert res.converged
    arr = res.params.as_array()
    for i in range(arr.size):
        for sign in (1.0, -1.0):
            probe = arr.copy()
            probe[i] += sign * 2 * res.steps[i]  # the last rejected step
            assert _objective(probe, c) >= res.cond - 1e-3


def test_optimize_needs_a_rank_15_start():
    bad = dataclasses.replace(
        ControlParams(), **{n: 1e-14 for n in ControlParams.names() if n[0] in "ts" and n not in ("tau1", "tau2", "tau3", "tau4")}
    )
    with pytest.raises(DegenerateBasisError):
        optimize_params(bad, restarts=0)

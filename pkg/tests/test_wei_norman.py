import csv
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from liesynth.control import components_in_basis
from liesynth.errors import DimensionError, ValidationError, WeiNormanBreakdown
from liesynth.matrix_core import BranchAmbiguityWarning, mat_log_unitary
from liesynth.reproduce import PAPER_H, jxi, rk4_ratio
from liesynth.wei_norman import (
    WeiNormanProblem,
    _stack,
    find_coordinates,
    integrate,
    reconstruction_error,
    split_order,
    wn_matrix,
    wn_step,
)

seeds = st.integers(0, 2**32 - 1)

SU2 = [np.array([[0, 1j], [1j, 0]]), np.array([[0, -1], [1, 0]], dtype=complex), np.array([[1j, 0], [0, -1j]])]


@pytest.fixture(scope="module")
def full(basis):
    return WeiNormanProblem.from_basis(basis.matrices, np.zeros(15))


@pytest.fixture(scope="module")
def paper_problem(basis):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        x = components_in_basis(mat_log_unitary(jxi()), basis)
    return WeiNormanProblem.from_basis(basis.matrices, x)


def test_problem_validation():
    with pytest.raises(DimensionError):
        WeiNormanProblem.from_basis(SU2, np.zeros(2))
    with pytest.raises(ValidationError):
        WeiNormanProblem.from_basis(SU2[:2], np.zeros(2))  # not bracket-closed


def test_wn_matrix_identity_at_zero(full, backend):
    assert np.array_equal(wn_matrix(full, np.zeros(15)), np.eye(15))


def test_wn_matrix_one_dimensional():
    p = WeiNormanProblem.from_basis([SU2[0]], [0.3])
    assert np.array_equal(wn_matrix(p, [0.7]), np.eye(1))


@given(seeds)
def test_wn_matrix_against_conjugation_chain(seed):
    tau = np.random.default_rng(seed).uniform(-2, 2, 3)
    p = WeiNormanProblem.from_basis(SU2, np.zeros(3))
    a = _stack(SU2)
    cols = []
    for j in range(3):
        g = np.eye(2, dtype=complex)
        for i in range(j):
            g = g @ expm(tau[i] * SU2[i])
        v = g @ SU2[j] @ np.linalg.inv(g)
        cols.append(np.linalg.lstsq(a, np.concatenate([v.real.ravel(), v.imag.ravel()]), rcond=None)[0])
    assert np.abs(wn_matrix(p, tau) - np.column_stack(cols)).max() < 1e-12


def test_wn_step_zero_target():
    p = WeiNormanProblem.from_basis(SU2, np.zeros(3))
    tau0 = np.array([0.1, -0.2, 0.3])
    t, tau = wn_step(p, (0.0, tau0), 0.01)
    assert t == 0.01 and np.array_equal(tau, tau0)


def test_commuting_basis_is_linear():
    d = [np.diag([1j, -1j, 0, 0]), np.diag([0, 1j, -1j, 0]), np.diag([0, 0, 1j, -1j])]
    x = np.array([0.3, -0.7, 0.2])
    p = WeiNormanProblem.from_basis(d, x)
    tr = integrate(p, dt=0.01)
    assert np.abs(tr.tau - np.outer(tr.times, x)).max() < 1e-14
    tau, n, _ = find_coordinates(p)
    assert n == 1 and np.abs(tau - x).max() < 1e-14


def test_single_generator_target(full):
    x = np.zeros(15)
    x[0] = 0.1
    tau, n, tr = find_coordinates(full.with_target(x))
    assert n == 1 and tr.breakdown_time is None
    assert np.abs(tau - x).max() < 1e-12


def test_zero_target(full):
    tau, n, _ = find_coordinates(full)
    assert n == 1 and not tau.any()


def test_paper_target(paper_problem, tmp_path):
    tau, n, tr = find_coordinates(paper_problem, dt=0.001, eps=0.1)
    assert 0.12 <= tr.first_breakdown_time <= 0.20
    assert n == 7 == tr.scale
    assert np.abs(tau - PAPER_H).max() <= 5e-3
    assert tau[0] == pytest.approx(-0.0724497, abs=1e-5) and tau[8] == pytest.approx(0.203289, abs=1e-5)
    assert reconstruction_error(paper_problem, tau, n) <= 1e-8
    assert tr.dets.min() >= 0.1 and tr.times[-1] == 1.0
    first = tr.earlier[0]
    assert first.dets[-1] < 0.1 <= first.dets[-2]
    path = tmp_path / "wn.csv"
    tr.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0][:3] == ["t", "det", "tau1"] and len(rows) == 1002


def test_breakdown_carries_time(paper_problem):
    tr = integrate(paper_problem, dt=0.001, eps=0.1)
    assert tr.breakdown_time == pytest.approx(tr.times[-1])
    assert split_order(tr.breakdown_time) == int(np.floor(1 / tr.breakdown_time)) + 1
    with pytest.raises(WeiNormanBreakdown):
        split_order(0.0)


def test_split_limit_raises(paper_problem):
    with pytest.raises(WeiNormanBreakdown) as info:
        find_coordinates(paper_problem, max_split=3)
    assert info.value.trace is not None
    assert info.value.time == pytest.approx(0.15, abs=0.03)


def test_option_validation(full):
    with pytest.raises(ValidationError):
        find_coordinates(full, dt=0.5)
    with pytest.raises(ValidationError):
        find_coordinates(full, eps=1.5)
    with pytest.raises(ValidationError):
        integrate(full, dt=0.003)


@settings(max_examples=8)
@given(seeds)
def test_random_small_targets_reconstruct(full, seed):
    x = np.random.default_rng(seed).uniform(-0.1, 0.1, 15)
    p = full.with_target(x)
    tau, n, _ = find_coordinates(p)
    assert reconstruction_error(p, tau, n) <= 1e-9


def test_rk4_fourth_order(full):
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(5):
        x = rng.uniform(-0.1, 0.1, 15)
        _, n, _ = find_coordinates(full.with_target(x))
        ratios.append(rk4_ratio(full.with_target(x / n)))
    assert abs(np.median(ratios) - 16) <= 4


def test_backends_give_same_coordinates(paper_problem, backend):
    tau, n, _ = find_coordinates(paper_problem)
    assert n == 7 and np.abs(tau - PAPER_H).max() <= 5e-3

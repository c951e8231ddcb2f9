import json
import pathlib
import warnings

import numpy as np
import pytest
from hypothesis import settings

from liesynth import kernels
from liesynth.control import build_control_basis

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture(scope="session")
def basis():
    return build_control_basis()


@pytest.fixture(scope="session")
def fixtures():
    with open(DATA / "control_fixtures.json") as fh:
        raw = json.load(fh)
    out = dict(raw)
    for k in ("H1", "H5"):
        out[k] = np.array(raw[k]["re"]) + 1j * np.array(raw[k]["im"])
    return out


@pytest.fixture(scope="session")
def jxi_schedule(basis):
    from liesynth.matrix_core import BranchAmbiguityWarning
    from liesynth.reproduce import jxi
    from liesynth.synth import synthesize

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        return synthesize(jxi(), basis)


def random_skew(rng, n=4, scale=1.0, traceless=True):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = a - a.conj().T
    if traceless:
        a -= np.trace(a) / n * np.eye(n)
    return scale * a / np.linalg.norm(a, 2)


def haar_unitary(rng, n=4):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[k])

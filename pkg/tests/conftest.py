import warnings

import numpy as np
import pytest

from sparsebf.admm import RhoBelowBoundWarning
from sparsebf.signal_model import Scenario


def random_hpd(rng, m, cond=100.0):
    """Random Hermitian positive-definite matrix with a chosen condition number."""
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, _ = np.linalg.qr(z)
    ev = np.geomspace(1.0, cond, m)
    a = (q * ev) @ q.conj().T
    return 0.5 * (a + a.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def first_example():
    return Scenario.from_db(12, 0.0, 10.0, interferer_doas=(-10.0, 10.0), inr_db=20.0)


@pytest.fixture
def sixth_example():
    return Scenario.from_db(12, 0.0, 0.0, interferer_doas=(-40.0, 30.0), inr_db=20.0)


@pytest.fixture
def quiet_rho():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RhoBelowBoundWarning)
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

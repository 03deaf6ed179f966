import numpy as np
import pytest

from jisstpca.tensor import SemiSymTensor


def random_semisym(rng, p, N):
    G = rng.standard_normal((N, p, p))
    return SemiSymTensor(G + G.transpose(0, 2, 1))


def random_basis(rng, p, r):
    Q, _ = np.linalg.qr(rng.standard_normal((p, r)))
    return Q


def unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

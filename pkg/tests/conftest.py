import gate
import numpy as np
import pytest

from soicf import kernels
from soicf.classifier import fit_knn_softmax
from soicf.timeseries import Dataset, cbf_train_test

try:
    import numba  # noqa: F401

    BACKENDS = ["numpy", "numba"]
except ImportError:
    BACKENDS = ["numpy"]


@pytest.fixture(params=BACKENDS)
def kern(request):
    return kernels.backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cbf_small():
    return cbf_train_test(30, 12, 128, seed=3)


@pytest.fixture(scope="session")
def knn_small(cbf_small):
    return fit_knn_softmax(cbf_small[0])


@pytest.fixture
def tiny_two_class():
    X = np.array([[0.0, 0.0, 0.0, 0.0], [0.1, 0.0, -0.1, 0.0], [3.0, 3.0, 3.0, 3.0], [2.9, 3.1, 3.0, 3.0]])
    return Dataset(X, [0, 0, 1, 1])


def pytest_terminal_summary(terminalreporter):
    if gate.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(gate.LINES):
            terminalreporter.write_line(line)

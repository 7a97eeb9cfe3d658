import numpy as np
import pytest

from mixcobra.combine import CLASSIFICATION, REGRESSION, Dataset, MachinePredictions


def make_regression(n, d, p, seed):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.random((n, d)), rng.random(n), REGRESSION)
    preds = MachinePredictions(rng.random((n, p)), tuple(f"m{j}" for j in range(p)))
    return data, preds


def make_classification(n, d, p, seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n).astype(float)
    data = Dataset(rng.random((n, d)), y, CLASSIFICATION)
    preds = MachinePredictions(rng.integers(0, 2, (n, p)).astype(float), tuple(f"m{j}" for j in range(p)))
    return data, preds


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

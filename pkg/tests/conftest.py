import numpy as np
import pytest

from gpforecast import data, synthetic
from gpforecast.kernels import HyperParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_csv():
    return synthetic.fixture_path()


@pytest.fixture(scope="session")
def fixture_split(fixture_csv):
    """Committed 120-month fixture: first 108 months train, last 12 test."""
    monthly = data.load_csv(fixture_csv)
    return data.build_dataset(monthly, monthly[107].period)


def random_points(rng, n, spacing=1.0):
    t = np.cumsum(rng.uniform(0.5, 1.5, n)) * spacing
    return np.column_stack([t, rng.normal(size=(n, 3))])


def random_theta(rng, low=-1.0, high=1.0):
    theta = rng.uniform(low, high, 12)
    theta[HyperParams._fields.index("log_p")] = np.log(rng.uniform(3.0, 15.0))
    return theta


def unit_theta(**overrides):
    """All magnitudes 1, unit length scales, period 12, noise 1."""
    values = dict(sigma1=1.0, l1=1.0, sigma2=1.0, l2=1.0, p=12.0, lper=1.0, sigma3=1.0,
                  alpha=1.0, l3=1.0, sigmaf=1.0, l4=1.0, sigman=1.0)
    values.update(overrides)
    return np.asarray(HyperParams.from_natural(**values))


_ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line; the lines are echoed in the terminal summary."""

    def record(number, title, passed, detail, status=None):
        status = status or ("PASS" if passed else "FAIL")
        line = f"criterion {number} [{status}] {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

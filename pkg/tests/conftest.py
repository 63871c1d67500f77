import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curlhomog.mesh import build_grid

settings.register_profile("lab", deadline=None, max_examples=25, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

# acceptance results, filled by tests/test_acceptance.py and printed at the end of the run
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cube8():
    return build_grid(0.0, 1.0, 8)


@pytest.fixture(scope="session")
def box():
    """A deliberately anisotropic box."""
    return build_grid([0.1, -0.2, 0.3], [1.0, 1.5, 0.75], [5, 6, 4])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

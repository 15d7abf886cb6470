import warnings

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_quadpack():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*IntegrationWarning.*")
        warnings.filterwarnings("ignore", category=UserWarning, module="scipy.integrate")
        yield


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(REPORT_LINES, key=lambda k: int(k)):
            terminalreporter.write_line(REPORT_LINES[key])

import warnings

import numpy as np
import pytest

from tendonsense.geometry import WorkspaceWarning
from tendonsense.tendon import PathPolicy, default_layout


@pytest.fixture(autouse=True)
def _quiet_workspace():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WorkspaceWarning)
        yield


@pytest.fixture(scope="session")
def layout():
    return default_layout()


@pytest.fixture(scope="session", params=[p.value for p in PathPolicy])
def any_layout(request):
    return default_layout(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)

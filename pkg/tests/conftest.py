import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from twinmz.analysis import offset_displacements

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def inject_bias():
    """Add a constant displacement offset to a framed class, as seen on the bench.

    Returns a function (framed_set, bias_um) -> framed_set. Passing the negated
    bias removes it again.
    """
    return offset_displacements


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)

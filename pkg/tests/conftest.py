import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from artic.synth import generate, make_template

settings.register_profile("artic", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("artic")


@pytest.fixture(scope="session")
def door():
    """Small noiseless door: (template, sequence, gt axis)."""
    tpl = make_template("door", seed=1)
    seq, gt = generate(tpl, points_per_part=512, seed=1)
    return tpl, seq, gt


@pytest.fixture(scope="session")
def drawer():
    tpl = make_template("drawer", seed=2)
    seq, gt = generate(tpl, points_per_part=512, seed=2)
    return tpl, seq, gt


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])

import numpy as np
import pytest
from hypothesis import settings

from edgeoffload.sim import EnvConfig, MECEnv

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def small_cfg():
    return EnvConfig(n_servers=3, n_users=4, max_steps=50, overload_queue_delay_s=0.5, seed=3)


@pytest.fixture
def env(small_cfg):
    e = MECEnv(small_cfg)
    e.reset(11)
    return e


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

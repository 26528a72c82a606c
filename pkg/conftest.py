import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from simulation.scenario import default_scenario  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training or campaign test")


@pytest.fixture
def short_scenario():
    """Default layout cut to 20 s with shadowing and traffic kept."""
    return default_scenario(duration=20_000)


@pytest.fixture
def quiet_scenario():
    """Default layout without shadowing or traffic, handy for exact radio checks."""
    return default_scenario(duration=20_000, traffic=[], shadowing={"enabled": False})

"""
Shared pytest setup for charflow
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False,
                     help="run the hyperbolic bundle suites")


def pytest_configure(config):
    config.addinivalue_line("markers", "extended: long-running numerical suites")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="needs --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def t3_model():
    from models import build_t3_contact
    return build_t3_contact()


@pytest.fixture(scope="session")
def sphere_model():
    from models import LevelSetSpec, build_levelset
    return build_levelset(LevelSetSpec.sphere())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

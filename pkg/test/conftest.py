#!/usr/bin/env python
# file conftest.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Configuration script for PyTest.

Define in this script:
    - Fixtures shared among tests
    - Helpers functions for tests
    - External plugins
    - Hooks
"""

import os
import shutil
import numpy as np
import pytest
from pytest import fixture
from hypothesis import settings, HealthCheck

from nfloc.channel import subcarrier_frequencies
from nfloc.estimator import SearchGrid
from nfloc.geometry import ArrayGeometry
from nfloc.helpers import Scenario
from nfloc.hybrid_array import CombinerLayout
from nfloc.io import ScenarioConfig

settings.register_profile('nfloc', max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('nfloc')

def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the slow Monte Carlo tests')

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='need --runslow option to run')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)

@fixture
def datadir(tmpdir, request):
    '''
    Fixture responsible for searching a folder with the same name of test
    module and, if available, moving all contents to a temporary directory so
    tests can use them freely.

    from: https://stackoverflow.com/a/29631801
    '''
    filename = request.module.__file__
    test_dir, _ = os.path.splitext(filename)

    if os.path.isdir(test_dir):
        shutil.copytree(test_dir, str(tmpdir), dirs_exist_ok=True)

    return tmpdir

@fixture
def rng():
    return np.random.default_rng(0)

@fixture
def small_band():
    return subcarrier_frequencies(300e9, 30e9, 4)

@fixture
def small_geometry():
    return ArrayGeometry(32, 5e-4)

@fixture
def small_layout():
    return CombinerLayout.from_antennas(32, 2, 4)

@fixture
def small_scenario(small_band):
    """Two users, 128 antennas, 4 subcarriers, noiseless."""
    g = ArrayGeometry(128, 5e-4)
    layout = CombinerLayout.from_antennas(128, 4, 4)
    users = np.array([[3., np.pi / 3], [3., np.pi / 4]])
    grid = SearchGrid(counts=(20, 360))
    return Scenario(small_band, g, layout, 5e-9, users, np.inf, 16, grid)

@fixture(scope='module')
def reference_scenario():
    """Default configuration: 256 antennas, 12 subcarriers, users at 8 m."""
    return ScenarioConfig().scenario(np.inf)

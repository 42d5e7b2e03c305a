"""
Shared fixtures; puts the stage directories on sys.path like the scripts do
"""

import os
import sys

import pytest

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
for stage in ('simulation', 'analysis', 'cli'):
    sys.path.insert(0, os.path.join(TESTS_DIR, '..', stage))

from discretization import GridSpec
from energy_analysis import energy_series
from integrator import SimConfig, run
from string_model import ProfileSpec, StringParams


@pytest.fixture
def reference_params():
    return StringParams(v=0.3, b=1.0, delta=0.2, eta=0.05)


@pytest.fixture(scope='session')
def reference_config():
    """v=0.3, delta=0.2, eta=0.05, b=1, f=0.2 sin(pi x), g=0, n=256, t_end=10"""
    return SimConfig(params=StringParams(v=0.3, b=1.0, delta=0.2, eta=0.05),
                     grid=GridSpec(256), f=ProfileSpec.sine(0.2), g=ProfileSpec.zero(),
                     scheme='imex_cn', t_end=10.0)


@pytest.fixture(scope='session')
def reference_trajectory(reference_config):
    return run(reference_config)


@pytest.fixture(scope='session')
def reference_series(reference_trajectory):
    return energy_series(reference_trajectory)

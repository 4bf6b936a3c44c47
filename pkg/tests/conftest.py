import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))   # makes oracles importable

from reflexq import SdofParams, discretize


@pytest.fixture(scope="session")
def frame_params():
    """The benchmark frame: 2000 kg, 7.9e6 N/m, 2.5e5 N*s/m."""
    return SdofParams()


@pytest.fixture(scope="session")
def frame_model(frame_params):
    return discretize(frame_params, 0.01)

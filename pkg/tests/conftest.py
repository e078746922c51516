import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zinbgt import _kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # keep JIT compilation out of individual test timings
    _kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

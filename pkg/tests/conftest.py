import sys
from pathlib import Path

import numpy as np
import pytest

from pdtdisasm import analyze

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def build():
    def _build(data):
        return analyze(bytes(data))
    return _build

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pnrarray import DetectorConfig  # noqa: E402


@pytest.fixture
def ref_cfg():
    """Reference array: 16 bins, 49 % efficiency, dark counts neglected."""
    return DetectorConfig(n=16, eta=0.49, p_d=0.0)

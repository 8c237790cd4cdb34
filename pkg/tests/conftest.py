import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import SCENARIO_DIR, table2_cluster  # noqa: E402


@pytest.fixture
def cluster():
    return table2_cluster()


@pytest.fixture
def scenarios():
    return SCENARIO_DIR

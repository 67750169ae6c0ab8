import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stub_engine import StubEngine

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture()
def engine():
    return StubEngine()


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES

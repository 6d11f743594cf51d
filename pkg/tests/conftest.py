import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dobby.sim import Destination, Pose

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def small_lab() -> list[Destination]:
    """Three-destination lab for fast engine/executor tests."""
    return [
        Destination("lobby", "Lobby", Pose(0.0, 0.0), "Where tours begin."),
        Destination("apple_table", "Apple", Pose(2.0, 0.0), "A table with apples."),
        Destination("banana_table", "Banana", Pose(0.0, 2.0), "A table with bananas."),
    ]


@pytest.fixture
def small_items() -> dict[str, str]:
    return {"apple": "apple_table", "banana": "banana_table"}

"""Shipped project fixtures."""

from importlib import resources
from pathlib import Path

FIXTURES = ("highschool", "highschool_synthetic")


def fixture_path(name: str = "highschool") -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files(__name__) / f"{name}.json"))

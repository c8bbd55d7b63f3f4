from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from corpus import CORPUS  # noqa: E402


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def corpus_timelines():
    """Exact-engine timelines for the whole corpus, computed once."""
    from smagrid import run
    return [(name, scenario, run(scenario)) for name, scenario in CORPUS]

"""Shared fixtures: a session-wide baseline cache, pre-warmed for the heavy tests."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from quenchwalk import SYMMETRIC
from quenchwalk.measurement import BaselineCache

WARM_T_MAX = 100_000
WARM_PROBES = (0, 5, 10, 15, 20, 25)


@pytest.fixture(scope="session")
def baselines():
    """One cache of detector-free runs shared across the whole session."""
    return BaselineCache()


@pytest.fixture(scope="session")
def warm_baselines(baselines):
    """The same cache after one long free run covering every probe site the
    saturation/correlation tests touch; shorter requests are served by
    truncation instead of recomputation."""
    baselines.free_run(SYMMETRIC, WARM_T_MAX, probes=WARM_PROBES)
    return baselines

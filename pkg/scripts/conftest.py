"""Shared fixtures — run from project root: pytest"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.events import EventSeries


@pytest.fixture
def four_events():
    """{0.1, 0.2, 0.3, 0.6} on [0, 1): level-1 counts (3, 1)."""
    return EventSeries(np.array([0.1, 0.2, 0.3, 0.6]), 1.0)


@pytest.fixture
def empty_series():
    return EventSeries(np.empty(0), 1.0)


@pytest.fixture
def tmp_runs(tmp_path, monkeypatch):
    """Redirect CLI sidecars and bench outputs into a temp directory."""
    import cli.commands
    import cli.main
    runs = tmp_path / "runs"
    monkeypatch.setattr(cli.main, "RUNS_DIR", str(runs))
    monkeypatch.setattr(cli.commands, "RUNS_DIR", str(runs))
    return runs

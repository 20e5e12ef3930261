"""Pytest configuration for the PAS shaping lab tests."""
import pytest
import sys
import os
from pathlib import Path

import numpy as np

src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from pas_npn_lab.shaping.models import AmplitudeAlphabet  # noqa: E402


@pytest.fixture
def rng():
    """Fresh seeded generator per test."""
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def binary_alphabet():
    """Two-level alphabet {1, 3} used by the enumeration examples."""
    return AmplitudeAlphabet(levels=(1, 3))


@pytest.fixture(scope="session")
def ask8_alphabet():
    """Four-level alphabet {1, 3, 5, 7} (64-QAM amplitudes)."""
    return AmplitudeAlphabet.ask(4)


@pytest.fixture(scope="session")
def ask16_alphabet():
    """Eight-level alphabet of 256-QAM."""
    return AmplitudeAlphabet.ask(8)


@pytest.fixture
def runtime_dirs(tmp_path, monkeypatch):
    """Point output, cache and log directories at a temporary location."""
    from pas_npn_lab.core.config import runtime_config

    monkeypatch.setattr(runtime_config, "out_dir", str(tmp_path / "results"))
    monkeypatch.setattr(runtime_config, "cache_dir", str(tmp_path / "cache"))
    monkeypatch.setattr(runtime_config, "log_dir", str(tmp_path / "logs"))
    monkeypatch.setattr(runtime_config, "log_file", str(tmp_path / "logs" / "test.log"))
    return tmp_path


def slow_runs_enabled() -> bool:
    """Check if PAS_NPN_SLOW_TESTS is set."""
    return bool(os.getenv("PAS_NPN_SLOW_TESTS"))


skip_if_no_slow_runs = pytest.mark.skipif(
    not slow_runs_enabled(),
    reason="PAS_NPN_SLOW_TESTS not set"
)

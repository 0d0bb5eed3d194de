import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root directory to Python's module search path
root_dir = Path(__file__).parent.parent
sys.path.insert(0, str(root_dir))

from src.dynamics.elementary import ElementaryMap  # noqa: E402
from src.series import CoefficientRule  # noqa: E402
from src.settings import Settings  # noqa: E402


@pytest.fixture(autouse=True)
def setup_test_environment(monkeypatch, tmp_path):
    """Keep runs out of the working tree and away from a developer .env.local."""
    monkeypatch.setenv("HOLORENORM_OUTPUT_DIR", str(tmp_path / "output"))
    monkeypatch.setenv("HOLORENORM_LOG_LEVEL", "WARNING")
    monkeypatch.setenv("ENABLE_METRICS", "true")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def quadratic_map():
    """``(2u, 3v + u^2)``: the basic renormalizable example with ``N = 2``."""
    return ElementaryMap(2.0, 3.0, CoefficientRule.monomial(2))


@pytest.fixture
def settings(tmp_path):
    return Settings(output_dir=str(tmp_path / "runs"), log_level="WARNING", enable_metrics=True)


@pytest.fixture
def write_config(tmp_path):
    """Write a TOML config to a temporary file and return its path."""

    def _write(text: str, name: str = "run.toml") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write

"""
E2E fixtures: run modes and sweep settings.

Supports two modes:
- Default: bounded sweeps that finish in seconds.
- Long mode (--long flag): the full acceptance grids, including the
  general engine on every oracle instance and the nine-term pi26 family.

Sweep bounds can be moved with environment variables, read from .env.e2e
at the repository root when it exists:
  VNA_E2E_MAX_BLOCKS, VNA_E2E_MAX_SIZE, VNA_E2E_DENOMINATOR, VNA_E2E_DEPTH
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import pytest

logger = logging.getLogger(__name__)


# Load environment variables from .env.e2e if it exists
def _load_env_file():
    """Load environment variables from .env.e2e file if it exists."""
    env_file = Path(__file__).parent.parent.parent / ".env.e2e"
    if env_file.exists():
        try:
            from dotenv import load_dotenv

            load_dotenv(env_file)
            logger.info("Loaded environment from %s", env_file)
        except ImportError:
            # Fallback: parse the file manually
            logger.info("python-dotenv not installed, parsing %s manually", env_file)
            with open(env_file) as f:
                for line in f:
                    line = line.strip()
                    if line and not line.startswith("#") and "=" in line:
                        key, _, value = line.partition("=")
                        key = key.strip()
                        value = value.strip()
                        # Remove surrounding quotes if present
                        if value and value[0] == value[-1] and value[0] in ('"', "'"):
                            value = value[1:-1]
                        os.environ.setdefault(key, value)


_load_env_file()


def pytest_addoption(parser):
    """Add command line options for e2e tests."""
    parser.addoption(
        "--long",
        action="store_true",
        default=False,
        help="Run the full acceptance grids instead of the bounded ones",
    )


def pytest_configure(config):
    """Register the long_sweep marker."""
    config.addinivalue_line("markers", "long_sweep: mark test as only running with --long")


def pytest_collection_modifyitems(config, items):
    """Skip long sweeps unless --long is given."""
    if config.getoption("--long"):
        return
    skip_long = pytest.mark.skip(reason="Full acceptance grid, run with --long")
    for item in items:
        if "long_sweep" in item.keywords:
            item.add_marker(skip_long)


# =============================================================================
# Settings
# =============================================================================


@dataclass(frozen=True)
class SweepSettings:
    """Bounds for the generated sweeps."""

    max_blocks: int
    max_size: int
    denominator: int
    depth: int


def _int_env(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value else default


@pytest.fixture(scope="session")
def is_long_mode(request):
    """Return True if running the full grids."""
    return request.config.getoption("--long")


@pytest.fixture(scope="session")
def sweep_settings(is_long_mode):
    """Return sweep bounds, wider in long mode."""
    if is_long_mode:
        defaults = SweepSettings(max_blocks=4, max_size=3, denominator=16, depth=8)
    else:
        defaults = SweepSettings(max_blocks=3, max_size=2, denominator=8, depth=6)
    settings = SweepSettings(
        max_blocks=_int_env("VNA_E2E_MAX_BLOCKS", defaults.max_blocks),
        max_size=_int_env("VNA_E2E_MAX_SIZE", defaults.max_size),
        denominator=_int_env("VNA_E2E_DENOMINATOR", defaults.denominator),
        depth=_int_env("VNA_E2E_DEPTH", defaults.depth),
    )
    logger.info("Sweep settings: %s", settings)
    return settings

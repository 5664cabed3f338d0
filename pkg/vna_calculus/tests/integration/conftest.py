"""Integration test fixtures: problem files on disk."""

import pytest

from ..test_constants import BAD_EMBED_PROBLEM, FF_PROBLEM


@pytest.fixture
def ff_file(tmp_path):
    """Write the free group factor problem and return its path."""
    path = tmp_path / "ff.vna"
    path.write_text(FF_PROBLEM, encoding="utf-8")
    return path


@pytest.fixture
def bad_file(tmp_path):
    """Write a problem with an invalid embedding and return its path."""
    path = tmp_path / "bad.vna"
    path.write_text(BAD_EMBED_PROBLEM, encoding="utf-8")
    return path

"""Root fixtures for vna_calculus tests."""

from fractions import Fraction

import pytest

from vna_calculus.algebra import Summand
from vna_calculus.const import CONF_DEPTH, CONF_FORMAT, CONF_TRUNCATE

from .test_constants import HALVES_PROBLEM, TestDataFactory


@pytest.fixture
def factory():
    """Return the shared test data factory."""
    return TestDataFactory


@pytest.fixture
def mock_options():
    """Return standard resolved options for tests."""
    return {CONF_DEPTH: 4, CONF_TRUNCATE: 9, CONF_FORMAT: "text"}


@pytest.fixture
def halves_problem():
    """Return H(1), H(1) over C(1/2) (+) C(1/2) with both embeddings."""
    return TestDataFactory.halves_problem()


@pytest.fixture
def mixed_problem():
    """Return a diffuse-plus-free-factor algebra against a free factor."""
    return TestDataFactory.mixed_problem()


@pytest.fixture
def multimatrix():
    """Return M(2; 1/4) (+) C(1/2)."""
    return TestDataFactory.algebra(Summand.matrix(2, Fraction(1, 4)), Summand.matrix(1, Fraction(1, 2)))


@pytest.fixture
def problem_file(tmp_path):
    """Write the halves problem to a file and return its path."""
    path = tmp_path / "halves.vna"
    path.write_text(HALVES_PROBLEM, encoding="utf-8")
    return path

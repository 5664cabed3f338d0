"""
Tests for vna_calculus option schemas.

Covers:
1. Defaults and coercion
2. Command-line overrides
3. Rejected values
"""

import pytest
import voluptuous as vol

from vna_calculus.config import get_options_schema, resolve_options
from vna_calculus.const import (
    CONF_DEPTH,
    CONF_FORMAT,
    CONF_TRUNCATE,
    DEFAULT_DEPTH,
    DEFAULT_FORMAT,
    DEFAULT_TRUNCATE,
    MAX_DEPTH,
)
from vna_calculus.exceptions import ValidationError

# =============================================================================
# 1. Defaults
# =============================================================================


class TestOptionsSchema:
    """Tests for get_options_schema."""

    def test_defaults(self):
        """An empty mapping gets every default."""
        options = get_options_schema()({})
        assert options == {CONF_DEPTH: DEFAULT_DEPTH, CONF_TRUNCATE: DEFAULT_TRUNCATE, CONF_FORMAT: DEFAULT_FORMAT}
        assert (options[CONF_DEPTH], options[CONF_TRUNCATE], options[CONF_FORMAT]) == (8, 9, "text")

    def test_custom_defaults(self):
        """Callers can move the defaults."""
        options = get_options_schema({CONF_DEPTH: 3})({})
        assert options[CONF_DEPTH] == 3

    def test_coerces_strings(self):
        """Problem-file values arrive as text."""
        options = get_options_schema()({CONF_DEPTH: "4", CONF_TRUNCATE: "12"})
        assert options[CONF_DEPTH] == 4
        assert options[CONF_TRUNCATE] == 12

    def test_depth_range(self):
        """Depth stays inside its bounds."""
        schema = get_options_schema()
        with pytest.raises(vol.Invalid):
            schema({CONF_DEPTH: MAX_DEPTH + 1})


# =============================================================================
# 2. Overrides
# =============================================================================


class TestResolveOptions:
    """Tests for resolve_options."""

    def test_file_values(self):
        """File options are used when nothing overrides them."""
        assert resolve_options({CONF_DEPTH: "4"})[CONF_DEPTH] == 4

    def test_cli_wins(self):
        """Command-line flags override the file."""
        options = resolve_options({CONF_DEPTH: "4", CONF_FORMAT: "text"}, {CONF_DEPTH: 6, CONF_FORMAT: "json"})
        assert options[CONF_DEPTH] == 6
        assert options[CONF_FORMAT] == "json"

    def test_none_falls_through(self):
        """Unset flags keep the file value."""
        options = resolve_options({CONF_TRUNCATE: "5"}, {CONF_TRUNCATE: None, CONF_DEPTH: None})
        assert options[CONF_TRUNCATE] == 5
        assert options[CONF_DEPTH] == DEFAULT_DEPTH

    def test_no_input(self):
        """Both sources may be missing."""
        assert resolve_options()[CONF_FORMAT] == DEFAULT_FORMAT


# =============================================================================
# 3. Rejected values
# =============================================================================


class TestRejectedOptions:
    """Tests for invalid options."""

    def test_depth_zero(self):
        """Depth budgets are at least 1."""
        with pytest.raises(ValidationError, match="option depth"):
            resolve_options({CONF_DEPTH: "0"})

    def test_unknown_format(self):
        """Only text and json output."""
        with pytest.raises(ValidationError, match="option format"):
            resolve_options(None, {CONF_FORMAT: "xml"})

    def test_unknown_key(self):
        """Unknown option names are rejected."""
        with pytest.raises(ValidationError, match="extra keys"):
            resolve_options({"precision": "3"})

    def test_non_integer(self):
        """Depth must be an integer."""
        with pytest.raises(ValidationError):
            resolve_options({CONF_DEPTH: "deep"})

    def test_problems_listed(self):
        """Every problem is reported."""
        with pytest.raises(ValidationError) as err:
            resolve_options({CONF_DEPTH: "0", CONF_TRUNCATE: "0"})
        assert len(err.value.problems) == 2

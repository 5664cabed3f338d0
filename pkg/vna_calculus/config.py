"""Option schemas for problem files and the command line."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from typing import Any

import voluptuous as vol

from .const import (
    CONF_DEPTH,
    CONF_FORMAT,
    CONF_TRUNCATE,
    DEFAULT_DEPTH,
    DEFAULT_FORMAT,
    DEFAULT_TRUNCATE,
    MAX_DEPTH,
    MAX_TRUNCATE,
    MIN_DEPTH,
    OUTPUT_FORMATS,
)
from .exceptions import ValidationError

_LOGGER = logging.getLogger(__name__)


def get_options_schema(defaults: dict[str, Any] | None = None) -> vol.Schema:
    """Get the options schema with optional defaults."""
    if defaults is None:
        defaults = {}

    return vol.Schema(
        {
            vol.Required(
                CONF_DEPTH,
                default=defaults.get(CONF_DEPTH, DEFAULT_DEPTH),
            ): vol.All(vol.Coerce(int), vol.Range(min=MIN_DEPTH, max=MAX_DEPTH)),
            vol.Required(
                CONF_TRUNCATE,
                default=defaults.get(CONF_TRUNCATE, DEFAULT_TRUNCATE),
            ): vol.All(vol.Coerce(int), vol.Range(min=1, max=MAX_TRUNCATE)),
            vol.Optional(
                CONF_FORMAT,
                default=defaults.get(CONF_FORMAT, DEFAULT_FORMAT),
            ): vol.In(OUTPUT_FORMATS),
        }
    )


def resolve_options(
    file_options: Mapping[str, Any] | None = None,
    cli_overrides: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Merge problem-file options with command-line flags; flags win.

    Flags left as None fall through to the file value, then to the default.
    """
    merged = dict(file_options or {})
    for key, value in (cli_overrides or {}).items():
        if value is not None:
            merged[key] = value
    try:
        options = get_options_schema()(merged)
    except vol.MultipleInvalid as err:
        raise ValidationError([_describe(error) for error in err.errors]) from err
    except vol.Invalid as err:
        raise ValidationError([_describe(err)]) from err
    _LOGGER.debug("Resolved options %s", options)
    return options


def _describe(error: vol.Invalid) -> str:
    path = ".".join(str(part) for part in error.path)
    return f"option {path}: {error.msg}" if path else error.msg

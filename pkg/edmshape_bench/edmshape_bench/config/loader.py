#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Loading of JSON5 config files with schema validation.
"""

import logging
from typing import Any, Dict, Optional

import json5     # To read configs with comments and other JSON5 syntax features
from jsonschema import SchemaError, ValidationError

from edmshape_bench.config.schemas import ConfigSchema
from edmshape_core.exceptions import ConfigError

_LOG = logging.getLogger(__name__)


def validate_config(config: Dict[str, Any], schema_type: ConfigSchema, source: str = "<config>") -> None:
    """
    Validate a config dictionary, converting schema failures to ConfigError.
    """
    try:
        schema_type.validate(config)
    except (ValidationError, SchemaError) as ex:
        _LOG.error("Failed to validate config %s against schema type %s at %s",
                   source, schema_type.name, schema_type.value)
        raise ConfigError(f"Invalid config {source}: {ex.message}") from ex


def load_config(json_file_name: str, schema_type: Optional[ConfigSchema]) -> Dict[str, Any]:
    """
    Load a JSON5 config file.

    Parameters
    ----------
    json_file_name : str
        Path to the input config file.
    schema_type : Optional[ConfigSchema]
        The schema type to validate the config against.

    Returns
    -------
    config : dict
        The config, without its $schema attribute.

    Raises
    ------
    ConfigError
        If the file cannot be read or parsed, or fails validation.
    """
    _LOG.info("Load config: %s", json_file_name)
    try:
        with open(json_file_name, mode='r', encoding='utf-8') as fh_json:
            config = json5.load(fh_json)
    except OSError as ex:
        raise ConfigError(f"Cannot read config {json_file_name}: {ex}") from ex
    except ValueError as ex:
        raise ConfigError(f"Cannot parse config {json_file_name}: {ex}") from ex
    if not isinstance(config, dict):
        raise ConfigError(f"Config {json_file_name} must be a JSON object")
    if schema_type is not None:
        validate_config(config, schema_type, json_file_name)
    else:
        _LOG.warning("Config %s is not validated against a schema.", json_file_name)
    # Remove $schema attributes from the config after we've validated them.
    config.pop("$schema", None)
    return config

#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for loading the CLI config examples.
"""

import pytest

from edmshape_bench.config.loader import load_config
from edmshape_bench.config.schemas import ConfigSchema
from edmshape_bench.launcher import COMMAND_OPTIONS, Launcher
from edmshape_bench.tests.config import BUILTIN_CONFIG_PATH, locate_config_examples

configs = locate_config_examples(BUILTIN_CONFIG_PATH, "cli")
assert configs


@pytest.mark.parametrize("config_path", configs)
def test_load_cli_config_examples(config_path: str) -> None:
    """Every example validates and names a known command."""
    config = load_config(config_path, ConfigSchema.CLI)
    assert "$schema" not in config
    assert config["command"] in COMMAND_OPTIONS


@pytest.mark.parametrize("config_path", configs)
def test_launcher_resolves_cli_config_examples(config_path: str) -> None:
    """Every example resolves into a full command config, with file values kept."""
    config = load_config(config_path, ConfigSchema.CLI)
    launcher = Launcher("test", argv=["--config", config_path])
    assert launcher.config.command == config["command"]
    for (key, value) in config.items():
        if key in ("command", "log_level", "log_file"):
            continue
        assert launcher.config[key] == value
    assert launcher.config["out"]

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# Built-in modules
import json
from logging import DEBUG

# pip modules
import pytest
from click.testing import CliRunner

# local modules
from rifscascade.rc_cli import cli
from rifscascade.rc_core import CascadeConfig, worked_example_config
from rifscascade.rc_errors import ConfigError
from rifscascade.rc_logging import ConsoleHandler, logger, setup_logging
from rifscascade.rc_parallel import map_ordered, resolve_threads
from rifscascade.rc_utils import (
    CONFIG_ENV,
    CONFIG_PATH,
    is_compatible_version,
    load_config,
    parse_integer,
    parse_number,
    resolve_config_path,
)


def test_bundled_config_is_the_worked_example(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert resolve_config_path(None) == CONFIG_PATH
    assert CascadeConfig.from_flat(load_config()) == worked_example_config()


def test_config_path_from_environment(monkeypatch, tmp_path):
    path = tmp_path / "env.json"
    path.write_text(json.dumps({"max_depth": 4}), encoding="utf-8")
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert load_config() == {"max_depth": 4}
    assert resolve_config_path("explicit.json") == "explicit.json"


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(broken))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(listing))


def test_parse_number():
    assert parse_number("x", "1/3") == 1.0 / 3.0
    assert parse_number("x", 2) == 2.0
    assert parse_number("x", " 0.25 ") == 0.25
    for value in (True, "one", "1/0", None):
        with pytest.raises(ConfigError):
            parse_number("x", value)


def test_parse_integer():
    assert parse_integer("n", 3) == 3
    for value in (3.0, False, "3"):
        with pytest.raises(ConfigError):
            parse_integer("n", value)


def test_version_compatibility():
    assert is_compatible_version("1.0.0", "1.0.7")
    assert not is_compatible_version("1.0.0", "1.1.0")
    assert not is_compatible_version(None, "1.0.0")


def test_map_ordered_keeps_input_order():
    items = list(range(50))
    assert map_ordered(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert map_ordered(lambda x: x, [], threads=4) == []
    assert resolve_threads(0) >= 1
    assert resolve_threads(3) == 3


def test_setup_logging_rebuilds_handlers():
    package_logger = setup_logging()
    assert package_logger is logger
    count = len(logger.handlers)
    assert setup_logging(verbose=True) is logger
    assert len(logger.handlers) == count
    assert isinstance(logger.handlers[0], ConsoleHandler)
    assert logger.handlers[0].level == DEBUG


def test_console_logging_follows_stderr(capsys):
    setup_logging()
    result = CliRunner().invoke(cli, ["defaults"])
    assert result.exit_code == 0
    logger.warning("logged after a command run")
    assert "logged after a command run" in capsys.readouterr().err

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Utils for config files, JSON output, digests etc.
"""

# Built-in modules
import json
from fractions import Fraction
from hashlib import sha256
from json import JSONDecodeError
from math import isfinite
from os import getenv, makedirs
from os.path import abspath, dirname, exists, join
from typing import Any, Optional

# pip modules
import numpy as np

# local modules
from rifscascade.rc_errors import ConfigError, InputFormatError
from rifscascade.rc_logging import logger

# optional pip module
try:
    from orjson import OPT_INDENT_2, OPT_SORT_KEYS
    from orjson import dumps as orjson_dumps
except ModuleNotFoundError:
    orjson_dumps = None

VERSION = "1.0.0"
ROOT_DIR = dirname(dirname(dirname(abspath(__file__))))
CONFIG_PATH = join(ROOT_DIR, "config.json")
CONFIG_ENV = "RIFS_CONFIG"


def is_compatible_version(v1: str, v2: str) -> bool:
    """Checks if Major and Minor version numbers match between v1 and v2"""
    if not v1 or not v2:
        return False
    try:
        p1 = [int(x) for x in str(v1).split(".")[:2]]
        p2 = [int(x) for x in str(v2).split(".")[:2]]
    except ValueError:
        return v1 == v2
    return p1 == p2


def resolve_config_path(path: Optional[str]) -> str:
    """Explicit path first, then the environment, then the bundled config.json"""
    if path:
        return path
    env_path = getenv(CONFIG_ENV)
    if env_path and env_path.strip():
        return env_path
    return CONFIG_PATH


def load_config(path: Optional[str] = None) -> dict:
    """Loads a flat key-value JSON config file"""
    config_path = resolve_config_path(path)
    if not exists(config_path):
        raise ConfigError("config", f"file not found: {config_path}")
    try:
        with open(config_path, "r", encoding="utf-8") as file:
            data = json.load(file)
    except (OSError, JSONDecodeError) as exc:
        raise ConfigError("config", f"failed to read {config_path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", "must be a JSON object")
    logger.debug("Loaded config from %s", config_path)
    return data


def parse_number(field: str, value: Any) -> float:
    """Accepts JSON numbers and fraction strings such as "1/3" """
    if isinstance(value, bool):
        raise ConfigError(field, "must be a number, not a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(field, f"cannot parse {value!r} as a number") from exc
    raise ConfigError(field, f"must be a number, got {type(value).__name__}")


def parse_integer(field: str, value: Any) -> int:
    """Integers only, no silent truncation"""
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"must be an integer, got {value!r}")
    return value


def plain(value: Any) -> Any:
    """Converts numpy containers and non-finite floats into JSON-safe Python values"""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [plain(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return plain(value.item())
    if isinstance(value, float) and not isfinite(value):
        return None
    return value


def dump_json(data: Any, compact: bool = False) -> str:
    """Serializes to key-sorted JSON, indented unless compact (one line, no trailing newline)"""
    data = plain(data)
    if compact:
        if orjson_dumps is not None:
            return orjson_dumps(data, option=OPT_SORT_KEYS).decode("utf-8")
        return json.dumps(data, sort_keys=True, separators=(",", ":"))
    if orjson_dumps is not None:
        return orjson_dumps(data, option=OPT_INDENT_2 | OPT_SORT_KEYS).decode("utf-8") + "\n"
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def read_json(path: str) -> Any:
    """Reads a JSON document written by this toolkit"""
    try:
        with open(path, "r", encoding="utf-8") as file:
            return json.load(file)
    except (OSError, JSONDecodeError) as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def write_text(path: str, text: str) -> None:
    """Writes text with unix newlines, creating the parent folder if needed"""
    folder = dirname(abspath(path))
    if not exists(folder):
        makedirs(folder)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write(text)


def file_digest(path: str) -> str:
    """Returns the sha256 hex digest of a file"""
    digest = sha256()
    with open(path, "rb") as file:
        for block in iter(lambda: file.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()

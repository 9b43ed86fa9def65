#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Everything logging related
"""

# Built-in modules
import sys
from logging import (
    CRITICAL,
    DEBUG,
    ERROR,
    INFO,
    WARNING,
    FileHandler,
    Formatter,
    Logger,
    LogRecord,
    StreamHandler,
    getLogger,
)
from os import getenv

LOGLEVEL = getenv("LOGLEVEL") or INFO
NO_COLOR = bool(getenv("NO_COLOR"))
LOG_FILE = getenv("RIFS_LOG_FILE")

# Don't call "getLogger" every time we need the logger
logger = getLogger("rifscascade")

# ANSI escape codes, https://en.wikipedia.org/wiki/ANSI_escape_code#3-bit_and_4-bit
RED = "\033[31m"
BRIGHT_BLACK = "\033[90m"
BRIGHT_RED = "\033[91m"
BRIGHT_GREEN = "\033[92m"
BRIGHT_YELLOW = "\033[93m"
BRIGHT_WHITE = "\033[97m"
RESET = "\033[m"

PLAIN_FORMAT = "[%(asctime)s %(levelname)s] [rifs] %(message)s"


class ColouredFormatter(Formatter):
    """Tints every record by level"""

    def __init__(self, fmt: str, datefmt: str = "%H:%M:%S") -> None:
        super().__init__()
        self.datefmt = datefmt
        self.formats = {
            DEBUG: f"{BRIGHT_BLACK}{fmt}{RESET}",
            INFO: f"{BRIGHT_WHITE}{fmt}{RESET}",
            WARNING: f"{BRIGHT_YELLOW}{fmt}{RESET}",
            ERROR: f"{BRIGHT_RED}{fmt}{RESET}",
            CRITICAL: f"{RED}{fmt}{RESET}",
        }

    def format(self, record: LogRecord) -> str:
        formatter = Formatter(self.formats.get(record.levelno), datefmt=self.datefmt)
        return formatter.format(record)


def highlight(text: str) -> str:
    """Green text for successful outcomes, unless colours are off"""
    if NO_COLOR:
        return text
    return f"{BRIGHT_GREEN}{text}{RESET}"


class ConsoleHandler(StreamHandler):
    """Writes to whatever sys.stderr is when the record is emitted"""

    @property
    def stream(self):  # type: ignore[override]
        return sys.stderr

    @stream.setter
    def stream(self, _value) -> None:
        pass


def setup_logging(verbose: bool = False) -> Logger:
    """(Re)builds the package logger's handlers"""
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    logger.setLevel(DEBUG)
    logger.propagate = False

    if NO_COLOR:
        console_formatter = Formatter(fmt=PLAIN_FORMAT, datefmt="%H:%M:%S")
    else:
        console_formatter = ColouredFormatter(
            fmt=f"[%(asctime)s %(levelname)s] {BRIGHT_WHITE}[rifs]{RESET} %(message)s"
        )

    console_handler = ConsoleHandler()
    console_handler.setLevel(DEBUG if verbose else LOGLEVEL)
    console_handler.setFormatter(console_formatter)
    logger.addHandler(console_handler)

    if LOG_FILE:
        file_handler = FileHandler(LOG_FILE, encoding="utf-8")
        # Always log everything to file
        file_handler.setLevel(DEBUG)
        file_handler.setFormatter(Formatter(fmt=PLAIN_FORMAT))
        logger.addHandler(file_handler)

    return logger

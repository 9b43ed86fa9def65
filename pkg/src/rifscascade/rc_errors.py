#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exceptions raised by the cascade toolkit
"""

# pylint: disable=too-few-public-methods


class CascadeError(Exception):
    """Base class for every error the toolkit raises on purpose"""


class ConfigError(CascadeError):
    """A configuration value is missing, malformed or violates an assumption"""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class InputFormatError(CascadeError):
    """An input file does not follow the expected layout"""


class PlacementInfeasibleError(CascadeError):
    """Children of a node could not be packed without overlap"""

    def __init__(self, node_id: int, attempts: int) -> None:
        super().__init__(
            f"node {node_id}: disjoint placement infeasible after {attempts} attempts"
        )
        self.node_id = node_id
        self.attempts = attempts


class ExtinctDepthError(CascadeError):
    """A requested depth has no surviving leaves"""

    def __init__(self, depth: int, detail: str = "") -> None:
        message = f"depth {depth} has no leaves"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.depth = depth


class InsufficientDataError(CascadeError):
    """Not enough usable depths to fit a scaling exponent"""


class NotEnumerableError(CascadeError):
    """An expectation cannot be computed by finite enumeration"""

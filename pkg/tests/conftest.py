#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Shared fixtures
"""

# Built-in modules
import sys
from os.path import abspath, dirname, join

sys.path.insert(0, join(dirname(dirname(abspath(__file__))), "src"))

# pip modules
import pytest  # noqa: E402  pylint: disable=wrong-import-position

# local modules
from rifscascade.rc_core import (  # noqa: E402  pylint: disable=wrong-import-position
    dyadic_config,
    grow,
    worked_example_config,
)


@pytest.fixture(scope="session")
def dyadic_realization():
    """N = 2, R = 1/2, disjoint packing, depth 10"""
    return grow(dyadic_config(max_depth=10))


@pytest.fixture(scope="session")
def worked_realization():
    """Worked example at depth 14"""
    return grow(worked_example_config(max_depth=14, master_seed=7))


@pytest.fixture(scope="session")
def small_worked_realization():
    """Worked example at depth 8"""
    return grow(worked_example_config(max_depth=8, master_seed=3))

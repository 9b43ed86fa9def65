#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Branching-process random IFS cascades: simulation, cascade measures,
multifractal spectrum estimation and tangent-measure tests
"""

# local modules
from rifscascade.rc_utils import VERSION

__version__ = VERSION

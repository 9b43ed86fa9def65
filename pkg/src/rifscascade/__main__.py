#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Runs the command line
"""

# Built-in modules
import runpy

if __name__ == "__main__":
    runpy.run_module("rifscascade.rc_cli", run_name="__main__", alter_sys=True)

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Threads for independent work items (frontier leaves, ensemble seeds)
"""

# Built-in modules
from concurrent.futures import ThreadPoolExecutor
from os import cpu_count
from typing import Callable, Iterable, List, Optional, TypeVar

Item = TypeVar("Item")
Result = TypeVar("Result")


def resolve_threads(threads: Optional[int]) -> int:
    """0 or None means one worker per CPU"""
    if not threads or threads < 0:
        return cpu_count() or 1
    return threads


def map_ordered(
    func: Callable[[Item], Result], items: Iterable[Item], threads: Optional[int] = 1
) -> List[Result]:
    """
    Runs func over items and returns the results in input order.
    The result never depends on the number of threads.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rifs") as executor:
        return list(executor.map(func, items))

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Counter-based random streams (SplitMix64).

Every node owns a 64-bit seed derived from the master seed and its
root-to-node rank path. Draws are a pure function of (seed, counter),
so subtrees can be grown in any order on any number of threads.
"""

# Built-in modules
from math import log
from typing import Iterable, List

# pip modules
import numpy as np

MASK64 = 0xFFFF_FFFF_FFFF_FFFF
GOLDEN_GAMMA = 0x9E37_79B9_7F4A_7C15
ROOT_SALT = 0x5851_F42D_4C95_7F2D
CHILD_SALT = 0xD1B5_4A32_D192_ED03
PURPOSE_SALT = 0x8CB9_2BA7_2F3D_8DD7

# Sub-stream tags
OFFSPRING = 1
RATIO = 2
PLACEMENT = 3
SELECTION = 4
ENSEMBLE = 5

# 52-bit mantissa keeps (k + 0.5) * 2**-52 exactly representable, so draws never hit 0 or 1
UNIT = 2.0**-52


def mix64(value: int) -> int:
    """SplitMix64 finalizer"""
    value &= MASK64
    value = ((value ^ (value >> 30)) * 0xBF58_476D_1CE4_E5B9) & MASK64
    value = ((value ^ (value >> 27)) * 0x94D0_49BB_1331_11EB) & MASK64
    return value ^ (value >> 31)


def child_seed(seed: int, rank: int) -> int:
    """Seed of the child with the given sibling rank"""
    return mix64(seed ^ mix64((rank + 1) * CHILD_SALT))


def derive_node_seed(master_seed: int, path: Iterable[int]) -> int:
    """Folds the root-to-node rank path into a 64-bit node seed"""
    seed = mix64((master_seed & MASK64) ^ ROOT_SALT)
    for rank in path:
        seed = child_seed(seed, rank)
    return seed


class CounterStream:
    """
    Sequential view on the counter-based generator of one seed.
    Each call advances the counter by one.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0) -> None:
        self.seed = seed & MASK64
        self.counter = counter

    def __repr__(self) -> str:
        return f"CounterStream(seed={self.seed:#018x}, counter={self.counter})"

    def next_u64(self) -> int:
        """Next raw 64-bit output"""
        self.counter += 1
        return mix64(self.seed + self.counter * GOLDEN_GAMMA)

    def random(self) -> float:
        """Uniform on the open interval (0, 1)"""
        return ((self.next_u64() >> 12) + 0.5) * UNIT

    def uniform(self, low: float, high: float) -> float:
        """Uniform on the open interval (low, high)"""
        return low + (high - low) * self.random()

    def exponential(self) -> float:
        """Standard exponential"""
        return -log(self.random())

    def below(self, count: int) -> int:
        """Uniform integer in [0, count)"""
        return min(int(self.random() * count), count - 1)

    def substream(self, purpose: int) -> "CounterStream":
        """Independent stream for one purpose of the same node"""
        return CounterStream(mix64(self.seed ^ (purpose * PURPOSE_SALT)))

    def spawn(self, rank: int) -> "CounterStream":
        """Stream of the child with the given rank"""
        return CounterStream(child_seed(self.seed, rank))

    def numpy_generator(self) -> np.random.Generator:
        """numpy Generator seeded from this stream, for vectorised Monte Carlo"""
        return np.random.default_rng(self.next_u64())


def stream_for(master_seed: int, path: Iterable[int] = ()) -> CounterStream:
    """Stream of the node reached by path"""
    return CounterStream(derive_node_seed(master_seed, path))


def ensemble_seeds(master_seed: int, count: int, side: int = 0) -> List[int]:
    """Master seeds for a batch of independent realizations; sides never share seeds"""
    base = stream_for(master_seed).substream(ENSEMBLE).spawn(side)
    return [base.spawn(index).seed for index in range(count)]

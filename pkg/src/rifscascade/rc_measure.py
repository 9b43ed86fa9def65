#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Cascade measures on a realization and the depth-indexed scale matrix
"""

# Built-in modules
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple

# pip modules
import numpy as np

# local modules
from rifscascade.rc_core import Canonical, Explicit, RawProduct, Realization, WeightingMode
from rifscascade.rc_errors import (
    ConfigError,
    ExtinctDepthError,
    InputFormatError,
    InsufficientDataError,
)


class Source(Enum):
    """Which leaf quantity enters the partition sums"""

    MASS = "mass"
    DIAMETER = "diameter"


def _sibling_weights(realization: Realization, mode: WeightingMode) -> np.ndarray:
    arrays = realization.arrays()
    weights = np.ones(len(arrays.parent), dtype=np.float64)
    if len(weights) == 1:
        return weights
    parent = arrays.parent[1:]

    if isinstance(mode, Canonical):
        raw = arrays.ratio[1:] ** mode.beta
    elif isinstance(mode, Explicit):
        family = np.bincount(parent, minlength=len(weights))[parent]
        if family.max() > len(mode.weights):
            raise ConfigError(
                "weighting.weights",
                f"a family has {family.max()} children but only {len(mode.weights)} weights",
            )
        raw = np.asarray(mode.weights, dtype=np.float64)[arrays.rank[1:]]
    else:
        raise TypeError(f"no sibling weights for {mode!r}")

    totals = np.zeros(len(weights), dtype=np.float64)
    np.add.at(totals, parent, raw)
    weights[1:] = raw / totals[parent]
    return weights


def node_masses(realization: Realization, mode: Optional[WeightingMode] = None) -> np.ndarray:
    """
    Mass of every node, indexed by node id.

    Canonical and Explicit masses are products of sibling-normalized weights
    along the root path, so a parent's mass is the sum of its children's.
    RawProduct masses are the path products of ratios, i.e. the diameters,
    and are only meaningful after per-depth normalization.
    """
    mode = realization.config.weighting if mode is None else mode
    arrays = realization.arrays()
    if isinstance(mode, RawProduct):
        return arrays.diameter.copy()

    weights = _sibling_weights(realization, mode)
    masses = np.ones(len(weights), dtype=np.float64)
    for tier in range(1, int(arrays.tier.max(initial=0)) + 1):
        members = np.flatnonzero(arrays.tier == tier)
        masses[members] = masses[arrays.parent[members]] * weights[members]
    return masses


def _depth_rows(
    realization: Realization, masses: np.ndarray, max_depth: int
) -> Tuple[List[np.ndarray], List[np.ndarray], List[np.ndarray], Optional[int]]:
    arrays = realization.arrays()
    diameters, lefts, mass_rows = [], [], []
    for depth in range(max_depth + 1):
        ids = np.asarray(realization.leaves_by_depth[depth], dtype=np.int64)
        if ids.size == 0:
            return diameters, lefts, mass_rows, depth
        row = masses[ids]
        diameters.append(arrays.diameter[ids])
        lefts.append(arrays.left[ids])
        mass_rows.append(row / row.sum())
    return diameters, lefts, mass_rows, None


def leaf_masses(
    realization: Realization,
    mode: Optional[WeightingMode] = None,
    max_depth: Optional[int] = None,
) -> List[np.ndarray]:
    """Per-depth leaf masses, each row normalized to sum to 1"""
    max_depth = realization.depth if max_depth is None else max_depth
    if max_depth > realization.depth:
        raise ExtinctDepthError(max_depth, f"realization only grown to depth {realization.depth}")
    _, _, rows, empty = _depth_rows(realization, node_masses(realization, mode), max_depth)
    if empty is not None:
        raise ExtinctDepthError(empty)
    return rows


@dataclass(frozen=True)
class ScaleMatrix:
    """Leaf diameters, masses and left endpoints per depth, one row per non-empty depth"""

    diameters: Tuple[np.ndarray, ...]
    masses: Optional[Tuple[np.ndarray, ...]]
    lefts: Tuple[np.ndarray, ...]
    extinct_depth: Optional[int] = None

    @property
    def depths(self) -> int:
        return len(self.diameters)

    @property
    def leaf_count(self) -> List[int]:
        return [len(row) for row in self.diameters]

    def row(self, depth: int, source: Source = Source.DIAMETER) -> np.ndarray:
        if depth >= self.depths:
            if self.extinct_depth is not None and depth >= self.extinct_depth:
                raise ExtinctDepthError(self.extinct_depth)
            raise InsufficientDataError(f"depth {depth} was not grown")
        if source is Source.DIAMETER:
            return self.diameters[depth]
        if self.masses is None:
            raise InputFormatError("leaf masses are not available")
        return self.masses[depth]

    @classmethod
    def from_leaf_rows(
        cls, rows: Iterable[Tuple[int, float, float, Optional[float]]]
    ) -> "ScaleMatrix":
        """Builds a matrix from (depth, left, diameter, mass) records sorted by depth"""
        by_depth: List[List[Tuple[float, float, Optional[float]]]] = []
        for depth, left, diameter, mass in rows:
            if depth == len(by_depth):
                by_depth.append([])
            elif depth != len(by_depth) - 1:
                raise InputFormatError(f"depth {depth} out of order")
            by_depth[-1].append((left, diameter, mass))
        if not by_depth:
            raise InputFormatError("no leaf rows")
        have_masses = all(mass is not None for row in by_depth for _, _, mass in row)
        return cls(
            diameters=tuple(np.array([d for _, d, _ in row]) for row in by_depth),
            masses=tuple(np.array([m for _, _, m in row]) for row in by_depth) if have_masses else None,
            lefts=tuple(np.array([l for l, _, _ in row]) for row in by_depth),
        )

    def truncated(self, max_depth: int) -> "ScaleMatrix":
        return ScaleMatrix(
            diameters=self.diameters[: max_depth + 1],
            masses=None if self.masses is None else self.masses[: max_depth + 1],
            lefts=self.lefts[: max_depth + 1],
            extinct_depth=self.extinct_depth if max_depth >= self.depths else None,
        )


def scale_matrix(realization: Realization, mode: Optional[WeightingMode] = None) -> ScaleMatrix:
    """Extracts every non-empty depth; an extinct depth ends the matrix"""
    diameters, lefts, masses, empty = _depth_rows(
        realization, node_masses(realization, mode), realization.depth
    )
    return ScaleMatrix(
        diameters=tuple(diameters),
        masses=tuple(masses),
        lefts=tuple(lefts),
        extinct_depth=empty,
    )


def mass_heatmap_bins(matrix: ScaleMatrix, bins: int) -> np.ndarray:
    """
    Histogram of leaf mass over position in [0, 1], one row per depth.
    Each interval spreads its mass over the bins in proportion to overlap length.
    """
    if bins < 1:
        raise ConfigError("bins", "must be at least 1")
    edges = np.linspace(0.0, 1.0, bins + 1)
    heatmap = np.zeros((matrix.depths, bins), dtype=np.float64)
    for depth in range(matrix.depths):
        lefts = matrix.lefts[depth][:, None]
        diameters = matrix.diameters[depth][:, None]
        covered = np.clip((edges[None, :] - lefts) / diameters, 0.0, 1.0)
        heatmap[depth] = matrix.row(depth, Source.MASS) @ np.diff(covered, axis=1)
    return heatmap

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tangent measures below leaves of anchored realizations.

The measure restricted to a depth-n leaf interval, renormalized and
rescaled to [0, 1], has the law of a non-anchored cascade grown to the
same relative depth. The equivalence test compares the two ensembles
with two-sample Kolmogorov-Smirnov tests.
"""

# Built-in modules
from dataclasses import dataclass
from math import log, sqrt
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

# pip modules
import numpy as np
from scipy.stats import ks_2samp

# local modules
from rifscascade.rc_core import (
    CascadeConfig,
    ContractionLaw,
    Realization,
    Variant,
    WeightingMode,
    grow,
)
from rifscascade.rc_errors import ExtinctDepthError, InsufficientDataError
from rifscascade.rc_logging import logger
from rifscascade.rc_measure import ScaleMatrix, node_masses
from rifscascade.rc_parallel import map_ordered
from rifscascade.rc_random import SELECTION, CounterStream, ensemble_seeds, stream_for

# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals

MIN_ENSEMBLE = 30
MAX_EXTINCT_FRACTION = 0.5
ANCHORED_SIDE = 0
NON_ANCHORED_SIDE = 1


@dataclass(frozen=True)
class TangentSample:
    """Descendants of one leaf at a fixed relative depth, rescaled to [0, 1]"""

    source_leaf: int
    source_depth: int
    sub_depth: int
    node_ids: Tuple[int, ...]
    lefts: np.ndarray
    diameters: np.ndarray
    masses: np.ndarray

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return [(float(l), float(l + d)) for l, d in zip(self.lefts, self.diameters)]

    @property
    def leaf_count(self) -> int:
        return len(self.node_ids)


def _require_depth(realization: Realization, depth: int) -> None:
    if depth > realization.depth:
        raise ExtinctDepthError(depth, f"realization only reaches depth {realization.depth}")


def tangent_measure(
    realization: Realization,
    leaf: int,
    sub_depth: int,
    mode: Optional[WeightingMode] = None,
    masses: Optional[np.ndarray] = None,
) -> TangentSample:
    """Applies x -> (x - left(leaf)) / diameter(leaf) to the depth(leaf) + k descendants"""
    source = realization.nodes[leaf]
    target = source.depth + sub_depth
    _require_depth(realization, target)
    ids = realization.descendants_at(leaf, target)
    if not ids:
        raise ExtinctDepthError(target, f"leaf {leaf} has no descendants")

    masses = node_masses(realization, mode) if masses is None else masses
    index = np.asarray(ids, dtype=np.int64)
    arrays = realization.arrays()
    below = masses[index]
    return TangentSample(
        source_leaf=leaf,
        source_depth=source.depth,
        sub_depth=sub_depth,
        node_ids=tuple(ids),
        lefts=(arrays.left[index] - source.left) / source.diameter,
        diameters=arrays.diameter[index] / source.diameter,
        masses=below / below.sum(),
    )


def root_sample(
    realization: Realization, sub_depth: int, mode: Optional[WeightingMode] = None
) -> TangentSample:
    """The whole realization at depth k seen as a tangent sample of the root"""
    return tangent_measure(realization, 0, sub_depth, mode)


def tangent_scale_matrix(
    realization: Realization, leaf: int, sub_depth: int, mode: Optional[WeightingMode] = None
) -> ScaleMatrix:
    """Rescaled scale matrix of the tangent measure across relative depths 0..k"""
    masses = node_masses(realization, mode)
    rows = []
    for k in range(sub_depth + 1):
        try:
            rows.append(tangent_measure(realization, leaf, k, masses=masses))
        except ExtinctDepthError:
            source_depth = realization.nodes[leaf].depth
            return ScaleMatrix(
                diameters=tuple(s.diameters for s in rows),
                masses=tuple(s.masses for s in rows),
                lefts=tuple(s.lefts for s in rows),
                extinct_depth=k if source_depth + k <= realization.depth else None,
            )
    return ScaleMatrix(
        diameters=tuple(s.diameters for s in rows),
        masses=tuple(s.masses for s in rows),
        lefts=tuple(s.lefts for s in rows),
    )


@dataclass(frozen=True)
class EnsembleStatistics:
    """
    Pooled and per-sample summaries of an ensemble. drawn_* hold one
    uniformly chosen leaf per sample, which keeps the KS inputs independent.
    """

    pooled_log_mass: np.ndarray
    pooled_log_diameter: np.ndarray
    drawn_log_mass: np.ndarray
    drawn_log_diameter: np.ndarray
    leaf_counts: np.ndarray

    @property
    def size(self) -> int:
        return len(self.leaf_counts)


def ensemble_statistics(
    samples: Sequence[Union[TangentSample, Realization]],
    stream: CounterStream,
    sub_depth: Optional[int] = None,
    mode: Optional[WeightingMode] = None,
) -> EnsembleStatistics:
    """Realizations are read at depth sub_depth through their root sample"""
    if len(samples) < MIN_ENSEMBLE:
        logger.warning("Ensemble of %s samples is below the recommended %s", len(samples), MIN_ENSEMBLE)
    tangents = []
    for sample in samples:
        if isinstance(sample, Realization):
            if sub_depth is None:
                raise ValueError("sub_depth is required for realizations")
            sample = root_sample(sample, sub_depth, mode)
        tangents.append(sample)

    drawn = [stream.below(sample.leaf_count) for sample in tangents]
    return EnsembleStatistics(
        pooled_log_mass=np.sort(np.concatenate([np.log(s.masses) for s in tangents])),
        pooled_log_diameter=np.sort(np.concatenate([np.log(s.diameters) for s in tangents])),
        drawn_log_mass=np.array([log(s.masses[i]) for s, i in zip(tangents, drawn)]),
        drawn_log_diameter=np.array([log(s.diameters[i]) for s, i in zip(tangents, drawn)]),
        leaf_counts=np.array([s.leaf_count for s in tangents], dtype=np.int64),
    )


def ks_critical_value(first: int, second: int, alpha: float = 0.05) -> float:
    """Asymptotic two-sample KS critical value, 1.358 sqrt((n + m) / nm) at 5%"""
    return sqrt(-0.5 * log(alpha / 2.0)) * sqrt((first + second) / (first * second))


def _ks(first: np.ndarray, second: np.ndarray, alpha: float) -> Dict[str, Any]:
    result = ks_2samp(first, second)
    return {
        "statistic": float(result.statistic),
        "p_value": float(result.pvalue),
        "critical_value": ks_critical_value(len(first), len(second), alpha),
        "rejected": bool(result.pvalue < alpha),
        "sizes": [len(first), len(second)],
    }


def compare_ensembles(
    first: EnsembleStatistics, second: EnsembleStatistics, alpha: float = 0.05
) -> Dict[str, Dict[str, Any]]:
    """KS reports on drawn log-mass, drawn log-diameter, leaf count and the pooled log-mass"""
    if first.size < 2 or second.size < 2:
        raise InsufficientDataError("both ensembles need at least two samples")
    pooled = _ks(first.pooled_log_mass, second.pooled_log_mass, alpha)
    pooled["tested"] = False
    return {
        "log_mass": _ks(first.drawn_log_mass, second.drawn_log_mass, alpha),
        "log_diameter": _ks(first.drawn_log_diameter, second.drawn_log_diameter, alpha),
        "leaf_count": _ks(first.leaf_counts, second.leaf_counts, alpha),
        "pooled_log_mass": pooled,
    }


@dataclass
class TangentReport:
    n: int
    k: int
    seeds: int
    extinct_anchored: int
    extinct_non_anchored: int
    statistics: Dict[str, Dict[str, Any]]
    verdict: str
    alpha: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "seeds": self.seeds,
            "alpha": self.alpha,
            "extinct": {"anchored": self.extinct_anchored, "non_anchored": self.extinct_non_anchored},
            "statistics": self.statistics,
            "verdict": self.verdict,
        }


def _anchored_tangent(config: CascadeConfig, n: int, k: int, seed: int) -> Optional[TangentSample]:
    realization = grow(config.with_changes(master_seed=seed))
    if realization.depth < n + k or not realization.leaves_by_depth[n]:
        return None
    leaves = realization.leaves_by_depth[n]
    leaf = leaves[stream_for(seed).substream(SELECTION).below(len(leaves))]
    try:
        return tangent_measure(realization, leaf, k)
    except ExtinctDepthError:
        return None


def _non_anchored_sample(config: CascadeConfig, k: int, seed: int) -> Optional[TangentSample]:
    realization = grow(config.with_changes(master_seed=seed))
    if realization.depth < k:
        return None
    try:
        return root_sample(realization, k)
    except ExtinctDepthError:
        return None


def tangent_equivalence_test(
    config: CascadeConfig,
    n: int,
    k: int,
    seeds: int,
    master_seed: Optional[int] = None,
    baseline_contraction: Optional[ContractionLaw] = None,
    alpha: float = 0.05,
    threads: int = 1,
) -> TangentReport:
    """
    Grows `seeds` anchored realizations to depth n + k and takes the tangent
    sample of one uniformly chosen depth-n leaf each, then grows `seeds`
    non-anchored realizations to depth k on disjoint seeds. A realization
    whose chosen lineage dies counts as extinct; more than half extinct on
    either side makes the verdict inconclusive.
    """
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    master_seed = config.master_seed if master_seed is None else master_seed
    config.validate()

    anchored = config.with_changes(variant=Variant.ANCHORED, max_depth=max(n + k, 1))
    non_anchored = config.with_changes(variant=Variant.NON_ANCHORED, max_depth=max(k, 1))
    if baseline_contraction is not None:
        non_anchored = non_anchored.with_changes(contraction=baseline_contraction)

    tangents = map_ordered(
        lambda seed: _anchored_tangent(anchored, n, k, seed),
        ensemble_seeds(master_seed, seeds, ANCHORED_SIDE),
        threads,
    )
    references = map_ordered(
        lambda seed: _non_anchored_sample(non_anchored, k, seed),
        ensemble_seeds(master_seed, seeds, NON_ANCHORED_SIDE),
        threads,
    )
    tangents = [sample for sample in tangents if sample is not None]
    references = [sample for sample in references if sample is not None]
    extinct_anchored = seeds - len(tangents)
    extinct_non_anchored = seeds - len(references)

    statistics: Dict[str, Dict[str, Any]] = {}
    too_extinct = max(extinct_anchored, extinct_non_anchored) > MAX_EXTINCT_FRACTION * seeds
    if too_extinct or len(tangents) < 2 or len(references) < 2:
        verdict = "inconclusive"
        logger.warning(
            "Tangent test inconclusive: %s anchored and %s non-anchored of %s seeds extinct",
            extinct_anchored,
            extinct_non_anchored,
            seeds,
        )
    else:
        selection = stream_for(master_seed).substream(SELECTION)
        statistics = compare_ensembles(
            ensemble_statistics(tangents, selection.spawn(ANCHORED_SIDE)),
            ensemble_statistics(references, selection.spawn(NON_ANCHORED_SIDE)),
            alpha,
        )
        rejected = statistics["log_mass"]["rejected"] or statistics["log_diameter"]["rejected"]
        verdict = "rejected" if rejected else "not rejected"
        logger.info(
            "Tangent test n=%s k=%s: KS log-mass %.4f, log-diameter %.4f, %s",
            n,
            k,
            statistics["log_mass"]["statistic"],
            statistics["log_diameter"]["statistic"],
            verdict,
        )

    return TangentReport(
        n=n,
        k=k,
        seeds=seeds,
        extinct_anchored=extinct_anchored,
        extinct_non_anchored=extinct_non_anchored,
        statistics=statistics,
        verdict=verdict,
        alpha=alpha,
    )

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Analytic ground truths for the one-step cascade and the worked-example benchmark
"""

# Built-in modules
from dataclasses import dataclass
from itertools import product
from math import exp, fsum, inf, log, sqrt
from typing import Any, Dict, List, Optional, Sequence, Tuple

# pip modules
import numpy as np
from scipy.special import logsumexp

# local modules
from rifscascade.rc_core import (
    Canonical,
    CascadeConfig,
    ContractionLaw,
    OffspringLaw,
    RawProduct,
    Realization,
    Uniform,
    grow,
    worked_example_config,
)
from rifscascade.rc_errors import ConfigError, NotEnumerableError
from rifscascade.rc_logging import logger
from rifscascade.rc_measure import Source, scale_matrix
from rifscascade.rc_parallel import map_ordered
from rifscascade.rc_random import CounterStream, ensemble_seeds, stream_for
from rifscascade.rc_spectrum import MeshMode, QGrid, tau_fit

# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals

MAX_OUTCOMES = 10**6
MIN_SAMPLES = 100
DEFAULT_MC_SAMPLES = 10**4
BENCHMARK_TOLERANCE = 0.05


@dataclass(frozen=True)
class OneStepEnvironment:
    """Laws of one family: offspring count and contraction ratios, canonical exponent beta"""

    offspring: OffspringLaw
    contraction: ContractionLaw
    beta: float = 1.0

    @property
    def enumerable(self) -> bool:
        return self.contraction.is_finite

    def outcome_count(self) -> int:
        total = 0
        for count in self.offspring.support:
            if count == 0:
                continue
            outcomes = 1
            for rank in range(count):
                outcomes *= len(self.contraction.rank_support(rank) or ())
            total += outcomes
        return total

    @classmethod
    def from_config(cls, config: CascadeConfig) -> "OneStepEnvironment":
        if not isinstance(config.weighting, Canonical):
            raise ConfigError("weighting.mode", "closed forms are only known for canonical weights")
        return cls(config.offspring, config.contraction, config.weighting.beta)


def worked_example_environment() -> OneStepEnvironment:
    return OneStepEnvironment.from_config(worked_example_config())


def canonical_weights(ratios: Sequence[float], beta: float = 1.0) -> np.ndarray:
    raw = np.asarray(ratios, dtype=np.float64) ** beta
    return raw / raw.sum()


def one_step_log_S(weights: Sequence[float], q: float) -> float:
    """log sum_i W_i^q; exactly 0 at q = 1 and log N at q = 0"""
    if q == 1.0:
        return 0.0
    if q == 0.0:
        return log(len(weights))
    return float(logsumexp(q * np.log(np.asarray(weights, dtype=np.float64))))


def one_step_S(weights: Sequence[float], q: float) -> float:
    """S(q) = sum_i W_i^q"""
    return exp(one_step_log_S(weights, q))


def kappa_closed_form_worked_example(q: float) -> float:
    """kappa(q) = 1/2 log(2 * 2^-q * ((1/3)^q + (2/3)^q))"""
    return 0.5 * log(2.0 * 2.0**-q * one_step_S((1.0 / 3.0, 2.0 / 3.0), q))


def kappa_exact(env: OneStepEnvironment, q: float) -> float:
    """
    E[log S(q)] by enumerating every (N, ratio tuple) outcome, conditional
    on N >= 1. Environments with more than 10^6 outcomes fall back to Monte Carlo.
    """
    if not env.enumerable:
        raise NotEnumerableError(
            f"{type(env.contraction).__name__} has continuous support, use kappa_monte_carlo"
        )
    survival = 1.0 - env.offspring.probs[0]
    if survival <= 0.0:
        raise NotEnumerableError("every family is empty")
    if env.outcome_count() > MAX_OUTCOMES:
        logger.warning(
            "%s outcomes exceed %s, estimating kappa(%s) by Monte Carlo",
            env.outcome_count(),
            MAX_OUTCOMES,
            q,
        )
        return kappa_monte_carlo(env, q, DEFAULT_MC_SAMPLES * 10, stream_for(0))[0]

    terms = []
    for count in env.offspring.support:
        if count == 0:
            continue
        weight = env.offspring.probs[count] / survival
        supports = [env.contraction.rank_support(rank) for rank in range(count)]
        for outcome in product(*supports):
            probability = weight
            for _, p in outcome:
                probability *= p
            ratios = [value for value, _ in outcome]
            terms.append(probability * one_step_log_S(canonical_weights(ratios, env.beta), q))
    return fsum(terms)


def _surviving_count(law: OffspringLaw, stream: CounterStream) -> int:
    while True:
        count = law.sample(stream)
        if count > 0:
            return count


def kappa_monte_carlo(
    env: OneStepEnvironment, q: float, samples: int, stream: CounterStream
) -> Tuple[float, float]:
    """Sample mean of log S(q) over families with N >= 1, with its standard error"""
    if samples < MIN_SAMPLES:
        raise ConfigError("samples", f"need at least {MIN_SAMPLES} samples")
    if env.offspring.probs[0] >= 1.0:
        raise ConfigError("offspring.probs", "every family is empty")
    values = np.empty(samples, dtype=np.float64)
    for index in range(samples):
        count = _surviving_count(env.offspring, stream)
        ratios = [env.contraction.sample_ratio(stream, rank) for rank in range(count)]
        values[index] = one_step_log_S(canonical_weights(ratios, env.beta), q)
    return float(values.mean()), float(values.std(ddof=1) / sqrt(samples))


@dataclass(frozen=True)
class PowerMeanReport:
    passed: bool
    s_value: float
    lower: float
    upper: float

    @property
    def margins(self) -> Tuple[float, float]:
        return self.s_value - self.lower, self.upper - self.s_value


def power_mean_bounds_check(weights: Sequence[float], q: float, tolerance: float = 1e-12) -> PowerMeanReport:
    """S(q) lies between N^(1-q) and 1; lower holds whichever bound is smaller"""
    count = len(weights)
    s_value = one_step_S(weights, q)
    bound = float(count) ** (1.0 - q)
    if q >= 1.0:
        lower, upper = bound, 1.0
    elif q >= 0.0:
        lower, upper = 1.0, bound
    else:
        lower, upper = bound, inf
    slack = tolerance * max(abs(lower), 1.0)
    passed = lower - slack <= s_value <= upper + tolerance * max(abs(upper), 1.0)
    return PowerMeanReport(passed=passed, s_value=s_value, lower=lower, upper=upper)


@dataclass(frozen=True)
class DomainEndpoints:
    q_minus: float
    q_plus: float
    t_star: float
    degenerate: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q_minus": self.q_minus,
            "q_plus": self.q_plus,
            "t_star": self.t_star,
            "degenerate": self.degenerate,
        }


def domain_endpoints(law: ContractionLaw, beta: float = 1.0) -> DomainEndpoints:
    """
    q_- = -t_star where t_star = sup{t : E[R^(-beta t)] < inf}; q_+ is
    always +inf under canonical weights.
    """
    degenerate = law.is_degenerate()
    if degenerate:
        logger.warning("Degenerate contraction law %s: tau is affine", law)
    if isinstance(law, Uniform) and law.lo == 0.0:
        t_star = 1.0 / beta
        return DomainEndpoints(q_minus=-t_star, q_plus=inf, t_star=t_star, degenerate=degenerate)
    return DomainEndpoints(q_minus=-inf, q_plus=inf, t_star=inf, degenerate=degenerate)


# ---------------------------------------------------------------------------
# Simulation against the closed forms
# ---------------------------------------------------------------------------


def simulated_kappa(
    config: CascadeConfig,
    depth: int,
    seeds: int,
    qgrid: QGrid,
    master_seed: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """kappa_hat(q) per seed (rows) from the mass partition sums"""

    def one_seed(seed: int) -> np.ndarray:
        realization = grow(config.with_changes(max_depth=depth, master_seed=seed))
        estimate = tau_fit(scale_matrix(realization), qgrid, MeshMode.GEO_MEAN, Source.MASS)
        return estimate.kappa_hat

    return np.vstack(map_ordered(one_seed, ensemble_seeds(master_seed, seeds), threads))


@dataclass
class BenchmarkReport:
    q: np.ndarray
    kappa_closed: np.ndarray
    kappa_exact: np.ndarray
    kappa_mc: np.ndarray
    kappa_mc_se: np.ndarray
    kappa_hat_mean: np.ndarray
    kappa_hat_se: np.ndarray
    depth: int
    seeds: int
    tolerance: float = BENCHMARK_TOLERANCE

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.kappa_hat_mean - self.kappa_closed)

    @property
    def passed(self) -> bool:
        return bool((self.abs_error <= self.tolerance).all())

    def rows(self) -> List[Dict[str, float]]:
        return [
            {
                "q": float(self.q[i]),
                "kappa_closed": float(self.kappa_closed[i]),
                "kappa_exact": float(self.kappa_exact[i]),
                "kappa_mc": float(self.kappa_mc[i]),
                "kappa_mc_se": float(self.kappa_mc_se[i]),
                "kappa_hat_mean": float(self.kappa_hat_mean[i]),
                "kappa_hat_se": float(self.kappa_hat_se[i]),
                "abs_error": float(self.abs_error[i]),
            }
            for i in range(len(self.q))
        ]


def run_benchmark(
    depth: int = 14,
    seeds: int = 20,
    qgrid: Optional[QGrid] = None,
    master_seed: int = 0,
    threads: int = 1,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    tolerance: float = BENCHMARK_TOLERANCE,
) -> BenchmarkReport:
    """Worked example: closed form, enumeration, Monte Carlo and simulated kappa side by side"""
    qgrid = QGrid.arithmetic(-1.0, 3.0, 0.5) if qgrid is None else qgrid
    if seeds < 1:
        raise ConfigError("seeds", "need at least one seed")
    env = worked_example_environment()
    q = qgrid.array
    closed = np.array([kappa_closed_form_worked_example(value) for value in q])
    exact = np.array([kappa_exact(env, value) for value in q])
    mc = [
        kappa_monte_carlo(env, value, mc_samples, stream_for(master_seed, (index,)))
        for index, value in enumerate(q)
    ]

    kappa_hat = simulated_kappa(worked_example_config(), depth, seeds, qgrid, master_seed, threads)
    spread = kappa_hat.std(axis=0, ddof=1) / sqrt(seeds) if seeds > 1 else np.full(len(q), np.nan)
    report = BenchmarkReport(
        q=q,
        kappa_closed=closed,
        kappa_exact=exact,
        kappa_mc=np.array([value for value, _ in mc]),
        kappa_mc_se=np.array([se for _, se in mc]),
        kappa_hat_mean=kappa_hat.mean(axis=0),
        kappa_hat_se=spread,
        depth=depth,
        seeds=seeds,
        tolerance=tolerance,
    )
    logger.info(
        "Benchmark depth %s over %s seeds: max |kappa_hat - kappa| = %.4f",
        depth,
        seeds,
        float(report.abs_error.max()),
    )
    return report


def kappa_convergence(
    depths: Sequence[int] = (8, 11, 14),
    seeds: int = 20,
    qgrid: Optional[QGrid] = None,
    master_seed: int = 0,
    threads: int = 1,
) -> List[Dict[str, Any]]:
    """Bias and seed-to-seed spread of kappa_hat per depth for the worked example"""
    qgrid = QGrid.arithmetic(-1.0, 3.0, 0.5) if qgrid is None else qgrid
    env = worked_example_environment()
    exact = np.array([kappa_exact(env, value) for value in qgrid.values])
    summary = []
    for depth in depths:
        kappa_hat = simulated_kappa(worked_example_config(), depth, seeds, qgrid, master_seed, threads)
        summary.append(
            {
                "depth": depth,
                "max_bias": float(np.abs(kappa_hat.mean(axis=0) - exact).max()),
                "mean_spread": float(kappa_hat.std(axis=0, ddof=1).mean()),
            }
        )
    return summary


def normalization_equivalence(
    realization: Realization,
    qgrid: Optional[QGrid] = None,
    mesh_mode: MeshMode = MeshMode.GEO_MEAN,
    tolerance: float = BENCHMARK_TOLERANCE,
) -> Dict[str, Any]:
    """tau under canonical weights against tau under normalized ratio products"""
    qgrid = QGrid.arithmetic(0.0, 3.0, 0.25) if qgrid is None else qgrid
    weighting = realization.config.weighting
    beta = weighting.beta if isinstance(weighting, Canonical) else 1.0
    canonical = tau_fit(scale_matrix(realization, Canonical(beta)), qgrid, mesh_mode, Source.MASS)
    raw = tau_fit(scale_matrix(realization, RawProduct()), qgrid, mesh_mode, Source.MASS)
    difference = np.abs(canonical.tau - raw.tau)
    return {
        "q": qgrid.array,
        "tau_canonical": canonical.tau,
        "tau_raw_product": raw.tau,
        "max_difference": float(difference.max()),
        "agrees": bool(difference.max() <= tolerance),
    }

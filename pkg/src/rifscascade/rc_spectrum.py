#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
L^q-spectrum tau(q) and multifractal spectrum f(alpha) from a scale matrix.

tau(q) is the least-squares slope of log Z_n(q) against log eps_n over a
window of depths. An independent estimate divides the growth rate
kappa(q) (slope of log Z_n(q) against n) by the mesh decay rate lambda.
"""

# Built-in modules
from dataclasses import dataclass, field
from enum import Enum
from math import ceil, floor
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

# pip modules
import numpy as np
from scipy.special import logsumexp
from scipy.stats import linregress

# local modules
from rifscascade.rc_errors import ConfigError, InsufficientDataError
from rifscascade.rc_logging import logger
from rifscascade.rc_measure import ScaleMatrix, Source

# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals
# pylint: disable=too-many-instance-attributes

AFFINE_TOLERANCE = 1e-6
CONCAVITY_TOLERANCE = 1e-6
DEFAULT_DISCARD = 3
MIN_DEPTHS = 3
MIN_LEAVES = 2
MAX_LEGENDRE_STEP = 0.25
LOG_DECIMALS = 9


class MeshMode(Enum):
    MAX = "max"
    GEO_MEAN = "geomean"
    MEDIAN = "median"


@dataclass(frozen=True)
class QGrid:
    """Sorted q values; arithmetic grids always contain 0 and 1 when in range"""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(sorted({float(q) for q in self.values}))
        if not values:
            raise ConfigError("q", "the q grid is empty")
        object.__setattr__(self, "values", values)

    @classmethod
    def arithmetic(cls, q_min: float = -2.0, q_max: float = 4.0, q_step: float = 0.1) -> "QGrid":
        if not q_step > 0.0:
            raise ConfigError("q_step", "must be positive")
        if q_min > q_max:
            raise ConfigError("q_min", f"{q_min!r} exceeds q_max {q_max!r}")
        if q_step > MAX_LEGENDRE_STEP:
            logger.warning("q step %s is coarse for finite-difference Legendre transforms", q_step)
        first = ceil(q_min / q_step - 1e-9)
        last = floor(q_max / q_step + 1e-9)
        values = {round(k * q_step, 12) for k in range(first, last + 1)}
        values.update(q for q in (0.0, 1.0) if q_min <= q <= q_max)
        return cls(tuple(values))

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "QGrid":
        return cls(tuple(values))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @property
    def q_min(self) -> float:
        return self.values[0]

    @property
    def q_max(self) -> float:
        return self.values[-1]

    def __len__(self) -> int:
        return len(self.values)

    def index(self, q: float) -> int:
        return self.values.index(float(q))

    def clipped(self, q_min: float) -> "QGrid":
        return QGrid(tuple(q for q in self.values if q >= q_min))


def log_partition_function(row: Sequence[float], q: Any) -> Any:
    """log sum_i row_i^q, evaluated with log-sum-exp; q may be a scalar or an array"""
    logs = np.log(np.asarray(row, dtype=np.float64))
    if logs.size == 0:
        raise InsufficientDataError("partition function of an empty row")
    q_values = np.asarray(q, dtype=np.float64)
    result = logsumexp(np.multiply.outer(q_values, logs), axis=-1)
    return float(result) if q_values.ndim == 0 else result


def partition_function(row: Sequence[float], q: float) -> float:
    """Z(q) = sum_i row_i^q"""
    return float(np.exp(log_partition_function(row, q)))


def _interpolated_median(logs: np.ndarray) -> float:
    """Median of the mid-distribution function, interpolated between atoms"""
    values, counts = np.unique(np.round(logs, LOG_DECIMALS), return_counts=True)
    if values.size == 1:
        return float(values[0])
    mid_cdf = (np.cumsum(counts) - 0.5 * counts) / logs.size
    return float(np.interp(0.5, mid_cdf, values))


def mesh_scale(diameters: Sequence[float], mode: MeshMode = MeshMode.GEO_MEAN) -> float:
    values = np.asarray(diameters, dtype=np.float64)
    if values.size == 0:
        raise InsufficientDataError("mesh scale of an empty row")
    if mode is MeshMode.MAX:
        return float(values.max())
    if mode is MeshMode.GEO_MEAN:
        return float(np.exp(np.log(values).mean()))
    return float(np.exp(_interpolated_median(np.log(values))))


@dataclass(frozen=True)
class DepthWindow:
    depths: Tuple[int, ...]
    short: bool = False

    @property
    def bounds(self) -> Tuple[int, int]:
        return self.depths[0], self.depths[-1]


def select_depth_window(
    matrix: ScaleMatrix,
    depth_window: Optional[Tuple[Optional[int], Optional[int]]] = None,
    discard: int = DEFAULT_DISCARD,
) -> DepthWindow:
    """
    Depths with at least two leaves. Without an explicit window the first
    `discard` depths are dropped; when that leaves fewer than three depths
    every usable depth is kept and the window is flagged as short.
    """
    usable = [n for n, count in enumerate(matrix.leaf_count) if count >= MIN_LEAVES]
    if depth_window is not None:
        low, high = depth_window
        low = 0 if low is None else low
        high = matrix.depths - 1 if high is None else high
        chosen = [n for n in usable if low <= n <= high]
        if len(chosen) < MIN_DEPTHS:
            raise InsufficientDataError(
                f"{len(chosen)} usable depths in window [{low}, {high}], need {MIN_DEPTHS}"
            )
        return DepthWindow(tuple(chosen))

    chosen = [n for n in usable if n >= discard]
    if len(chosen) >= MIN_DEPTHS:
        return DepthWindow(tuple(chosen))
    if len(usable) < MIN_DEPTHS:
        raise InsufficientDataError(f"{len(usable)} usable depths, need {MIN_DEPTHS}")
    logger.warning("Only %s usable depths, keeping transient depths too", len(usable))
    return DepthWindow(tuple(usable), short=True)


def _slopes(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Line fits of every column of y (depths x q) against x: slope, r^2, slope standard error"""
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise InsufficientDataError("regressor does not vary across the depth window")
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (np.outer(x, slope) + intercept)
    ss_res = (residual**2).sum(axis=0)
    ss_tot = ((y - y.mean(axis=0)) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0.0, 1.0 - ss_res / ss_tot, 1.0)
    dof = max(len(x) - 2, 1)
    stderr = np.sqrt(ss_res / dof / sxx)
    return slope, r2, stderr


@dataclass(frozen=True)
class ConvexityReport:
    """Second differences of tau and the curvature -d2 tau (tau is concave)"""

    second_differences: np.ndarray
    curvature: np.ndarray
    verdict: str

    @property
    def min_curvature(self) -> float:
        return float(self.curvature.min()) if self.curvature.size else float("nan")

    @property
    def max_abs_second_difference(self) -> float:
        return float(np.abs(self.second_differences).max()) if self.second_differences.size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "second_differences": self.second_differences,
            "min_curvature": self.min_curvature,
            "max_curvature": float(self.curvature.max()) if self.curvature.size else None,
            "max_abs_second_difference": self.max_abs_second_difference,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class ConcavityReport:
    concave: bool
    max_violation: float
    width: float

    def to_dict(self) -> Dict[str, Any]:
        return {"concave": self.concave, "max_violation": self.max_violation, "alpha_width": self.width}


@dataclass
class SpectrumEstimate:
    q: np.ndarray
    depths: Tuple[int, ...]
    log_z: np.ndarray
    log_eps: np.ndarray
    tau: np.ndarray
    fit_r2: np.ndarray
    tau_stderr: np.ndarray
    kappa_hat: np.ndarray
    lambda_hat: float
    mesh_mode: MeshMode
    source: Source
    short_window: bool = False
    alpha: np.ndarray = field(default_factory=lambda: np.empty(0))
    f: np.ndarray = field(default_factory=lambda: np.empty(0))
    tau_kappa: Optional[np.ndarray] = None
    convexity: Optional[ConvexityReport] = None
    concavity: Optional[ConcavityReport] = None
    hull_smoothed: bool = False

    @property
    def depth_window(self) -> Tuple[int, int]:
        return self.depths[0], self.depths[-1]

    def at(self, q: float) -> int:
        return int(np.flatnonzero(np.isclose(self.q, q, rtol=0.0, atol=1e-12))[0])

    def information_dimension_gap(self) -> Optional[float]:
        """f(alpha(1)) - alpha(1), zero when tau(1) = 0"""
        if not self.alpha.size or not np.isclose(self.q, 1.0).any():
            return None
        index = self.at(1.0)
        return float(self.f[index] - self.alpha[index])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q": self.q,
            "tau": self.tau,
            "alpha": self.alpha,
            "f": self.f,
            "fit_r2": self.fit_r2,
            "tau_stderr": self.tau_stderr,
            "kappa_hat": self.kappa_hat,
            "tau_via_kappa": self.tau_kappa,
            "lambda_hat": self.lambda_hat,
            "depth_window": list(self.depth_window),
            "depths": list(self.depths),
            "log_z": self.log_z,
            "log_eps": self.log_eps,
            "mesh_mode": self.mesh_mode.value,
            "source": self.source.value,
            "short_window": self.short_window,
            "hull_smoothed": self.hull_smoothed,
            "convexity": None if self.convexity is None else self.convexity.to_dict(),
            "concavity": None if self.concavity is None else self.concavity.to_dict(),
            "information_dimension_gap": self.information_dimension_gap(),
        }


def tau_fit(
    matrix: ScaleMatrix,
    qgrid: QGrid,
    mesh_mode: MeshMode = MeshMode.GEO_MEAN,
    source: Source = Source.MASS,
    depth_window: Optional[Tuple[Optional[int], Optional[int]]] = None,
) -> SpectrumEstimate:
    """Partition-sum regression over the selected depth window"""
    window = select_depth_window(matrix, depth_window)
    q = qgrid.array
    depths = np.asarray(window.depths, dtype=np.float64)
    log_eps = np.array([np.log(mesh_scale(matrix.row(n), mesh_mode)) for n in window.depths])
    log_z = np.vstack([log_partition_function(matrix.row(n, source), q) for n in window.depths])

    tau, r2, stderr = _slopes(log_eps, log_z)
    kappa_hat, _, _ = _slopes(depths, log_z)
    lambda_hat = float(linregress(depths, log_eps).slope)
    logger.debug(
        "Fitted tau over depths %s..%s (lambda_hat=%.6f)", *window.bounds, lambda_hat
    )
    return SpectrumEstimate(
        q=q,
        depths=window.depths,
        log_z=log_z,
        log_eps=log_eps,
        tau=tau,
        fit_r2=r2,
        tau_stderr=stderr,
        kappa_hat=kappa_hat,
        lambda_hat=lambda_hat,
        mesh_mode=mesh_mode,
        source=source,
        short_window=window.short,
    )


def tau_via_kappa(
    matrix: ScaleMatrix,
    qgrid: QGrid,
    source: Source = Source.MASS,
    depth_window: Optional[Tuple[Optional[int], Optional[int]]] = None,
    mesh_mode: MeshMode = MeshMode.GEO_MEAN,
) -> np.ndarray:
    """tau(q) = kappa_hat(q) / lambda_hat"""
    estimate = tau_fit(matrix, qgrid, mesh_mode, source, depth_window)
    if estimate.lambda_hat >= 0.0:
        raise InsufficientDataError(f"mesh scale does not decay (lambda_hat={estimate.lambda_hat})")
    return estimate.kappa_hat / estimate.lambda_hat


def legendre(q: Sequence[float], tau: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """alpha = d tau / dq by finite differences, f = q alpha - tau"""
    q_values = np.asarray(q, dtype=np.float64)
    tau_values = np.asarray(tau, dtype=np.float64)
    if q_values.size < 3:
        raise InsufficientDataError("the Legendre transform needs at least 3 grid points")
    alpha = np.gradient(tau_values, q_values)
    return alpha, q_values * alpha - tau_values


def convexity_report(
    q: Sequence[float], tau: Sequence[float], q_range: Optional[Tuple[float, float]] = None
) -> ConvexityReport:
    """
    Strictness verdict on tau: "affine" when every second difference is
    within 1e-6 of zero, "strict" when the curvature is positive at every
    central point of q_range, "not_strict" otherwise.
    """
    q_values = np.asarray(q, dtype=np.float64)
    tau_values = np.asarray(tau, dtype=np.float64)
    if q_values.size < 3:
        raise InsufficientDataError("convexity needs at least 3 grid points")
    second = tau_values[2:] - 2.0 * tau_values[1:-1] + tau_values[:-2]
    if q_range is not None:
        central = q_values[1:-1]
        second = second[(central >= q_range[0] - 1e-12) & (central <= q_range[1] + 1e-12)]
    curvature = -second
    if np.abs(second).max(initial=0.0) <= AFFINE_TOLERANCE:
        verdict = "affine"
    elif curvature.min() > 0.0:
        verdict = "strict"
    else:
        verdict = "not_strict"
    return ConvexityReport(second_differences=second, curvature=curvature, verdict=verdict)


def concave_majorant(q: Sequence[float], tau: Sequence[float]) -> np.ndarray:
    """Smallest concave function above tau, evaluated on the grid"""
    q_values = np.asarray(q, dtype=np.float64)
    tau_values = np.asarray(tau, dtype=np.float64)
    hull: List[int] = []
    for index in range(q_values.size):
        while len(hull) >= 2:
            first, middle = hull[-2], hull[-1]
            cross = (q_values[middle] - q_values[first]) * (tau_values[index] - tau_values[first]) - (
                tau_values[middle] - tau_values[first]
            ) * (q_values[index] - q_values[first])
            if cross < 0.0:
                break
            hull.pop()
        hull.append(index)
    return np.interp(q_values, q_values[hull], tau_values[hull])


def spectrum_concavity(alpha: Sequence[float], f: Sequence[float]) -> ConcavityReport:
    """The (alpha, f) curve is concave when its slopes do not increase along alpha"""
    alpha_values = np.asarray(alpha, dtype=np.float64)
    f_values = np.asarray(f, dtype=np.float64)
    order = np.argsort(alpha_values, kind="stable")
    alpha_sorted = alpha_values[order]
    f_sorted = f_values[order]
    width = float(alpha_sorted[-1] - alpha_sorted[0]) if alpha_sorted.size else 0.0
    steps = np.diff(alpha_sorted)
    keep = steps > 1e-12
    if keep.sum() < 2:
        return ConcavityReport(concave=True, max_violation=0.0, width=width)
    slopes = np.diff(f_sorted)[keep] / steps[keep]
    violation = float(np.diff(slopes).max(initial=0.0))
    return ConcavityReport(
        concave=violation <= CONCAVITY_TOLERANCE, max_violation=max(violation, 0.0), width=width
    )


def estimate_spectrum(
    matrix: ScaleMatrix,
    qgrid: QGrid,
    mesh_mode: MeshMode = MeshMode.GEO_MEAN,
    source: Source = Source.MASS,
    depth_window: Optional[Tuple[Optional[int], Optional[int]]] = None,
    smooth: bool = True,
) -> SpectrumEstimate:
    """
    tau fit, kappa cross-check and, on grids of three or more points,
    the convexity verdict and Legendre transform. A tau that fails the
    strictness check is replaced by its concave majorant before the
    transform, and the estimate says so.
    """
    estimate = tau_fit(matrix, qgrid, mesh_mode, source, depth_window)
    if estimate.lambda_hat < 0.0:
        estimate.tau_kappa = estimate.kappa_hat / estimate.lambda_hat
    if len(qgrid) < 3:
        return estimate

    estimate.convexity = convexity_report(estimate.q, estimate.tau)
    tau = estimate.tau
    if smooth and estimate.convexity.verdict == "not_strict":
        tau = concave_majorant(estimate.q, estimate.tau)
        estimate.hull_smoothed = True
        logger.warning(
            "tau is not strictly concave (min curvature %.3g), smoothing with its concave majorant",
            estimate.convexity.min_curvature,
        )
    estimate.alpha, estimate.f = legendre(estimate.q, tau)
    estimate.concavity = spectrum_concavity(estimate.alpha, estimate.f)
    return estimate

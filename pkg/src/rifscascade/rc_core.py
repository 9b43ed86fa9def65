#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Branching-process random iterated function system.

Every depth-(k-1) leaf is replaced by a Galton-Watson subtree whose
nodes carry independent contraction ratios and are embedded inside
the parent interval. Intervals are stored as (left, diameter) and
diameters are only ever computed multiplicatively.
"""

# Built-in modules
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import accumulate
from math import fsum, isclose, nextafter
from typing import (
    Any,
    Callable,
    ClassVar,
    Dict,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

# pip modules
import numpy as np

# local modules
from rifscascade.rc_errors import (
    ConfigError,
    ExtinctDepthError,
    PlacementInfeasibleError,
)
from rifscascade.rc_logging import logger
from rifscascade.rc_parallel import map_ordered
from rifscascade.rc_random import (
    MASK64,
    OFFSPRING,
    PLACEMENT,
    RATIO,
    CounterStream,
    derive_node_seed,
)
from rifscascade.rc_utils import parse_integer, parse_number

# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals
# pylint: disable=too-many-instance-attributes

PROBABILITY_TOLERANCE = 1e-12
MAX_PLACEMENT_ATTEMPTS = 64


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OffspringLaw:
    """P(N = n) = probs[n] for n = 0..N_max"""

    probs: Tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise ConfigError("offspring.probs", "must list at least one probability")
        if any(p < 0.0 or p != p for p in probs):
            raise ConfigError("offspring.probs", "probabilities must be non-negative")
        total = fsum(probs)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ConfigError("offspring.probs", f"probabilities sum to {total!r}, not 1")

    @classmethod
    def fixed(cls, count: int) -> "OffspringLaw":
        """Deterministic offspring count, e.g. N = 2 for binary splitting"""
        return cls(tuple(1.0 if n == count else 0.0 for n in range(count + 1)))

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(n for n, p in enumerate(self.probs) if p > 0.0)

    @property
    def mean(self) -> float:
        return fsum(n * p for n, p in enumerate(self.probs))

    def is_degenerate(self) -> bool:
        """Concentrated on {0, 1}: no branching at all"""
        return self.probs[0] + (self.probs[1] if self.n_max >= 1 else 0.0) >= 1.0 - PROBABILITY_TOLERANCE

    def generating_function(self, s: float) -> float:
        return fsum(p * s**n for n, p in enumerate(self.probs))

    def extinction_probability(
        self, generations: Optional[int] = None, tolerance: float = 1e-15
    ) -> float:
        """
        Probability that a lineage dies out, by iterating the generating
        function from 0. With generations given, the probability of
        extinction within that many generations.
        """
        value = 0.0
        steps = 0
        while generations is None or steps < generations:
            updated = self.generating_function(value)
            steps += 1
            if generations is None and abs(updated - value) <= tolerance:
                return updated
            if generations is None and steps > 1_000_000:
                return updated
            value = updated
        return value

    def sample(self, stream: CounterStream) -> int:
        """Inverse-CDF draw"""
        u = stream.random()
        for count, bound in enumerate(accumulate(self.probs)):
            if u < bound:
                return count
        return self.support[-1]

    def to_flat(self) -> Dict[str, Any]:
        return {"offspring.probs": list(self.probs)}


def _check_ratio(name: str, value: float, allow_zero: bool = False, allow_one: bool = False) -> float:
    low_ok = value >= 0.0 if allow_zero else value > 0.0
    high_ok = value <= 1.0 if allow_one else value < 1.0
    if not (low_ok and high_ok):
        raise ConfigError(name, f"{value!r} is outside (0, 1)")
    return float(value)


@dataclass(frozen=True)
class ContractionLaw:
    """Law of the ratio r = R / s(v) of a child diameter to its parent's"""

    kind: ClassVar[str] = ""

    def sample_ratio(self, stream: CounterStream, rank: int = 0) -> float:
        raise NotImplementedError

    def rank_support(self, rank: int = 0) -> Optional[List[Tuple[float, float]]]:
        """(value, probability) pairs for finite laws, None for continuous ones"""
        raise NotImplementedError

    def is_degenerate(self) -> bool:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def to_flat(self) -> Dict[str, Any]:
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return self.rank_support(0) is not None


@dataclass(frozen=True)
class Constant(ContractionLaw):
    r: float
    kind: ClassVar[str] = "constant"

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", _check_ratio("contraction.r", self.r))

    def sample_ratio(self, stream: CounterStream, rank: int = 0) -> float:
        return self.r

    def rank_support(self, rank: int = 0) -> Optional[List[Tuple[float, float]]]:
        return [(self.r, 1.0)]

    def is_degenerate(self) -> bool:
        return True

    def mean(self) -> float:
        return self.r

    def to_flat(self) -> Dict[str, Any]:
        return {"contraction.kind": self.kind, "contraction.r": self.r}


@dataclass(frozen=True)
class TwoPoint(ContractionLaw):
    """r1 with probability p, r2 otherwise"""

    r1: float
    r2: float
    p: float = 0.5
    kind: ClassVar[str] = "two_point"

    def __post_init__(self) -> None:
        object.__setattr__(self, "r1", _check_ratio("contraction.r1", self.r1))
        object.__setattr__(self, "r2", _check_ratio("contraction.r2", self.r2))
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("contraction.p", f"{self.p!r} is not a probability")
        object.__setattr__(self, "p", float(self.p))

    def sample_ratio(self, stream: CounterStream, rank: int = 0) -> float:
        return self.r1 if stream.random() < self.p else self.r2

    def rank_support(self, rank: int = 0) -> Optional[List[Tuple[float, float]]]:
        if self.is_degenerate():
            return [(self.r1 if self.p > 0.0 else self.r2, 1.0)]
        return [(self.r1, self.p), (self.r2, 1.0 - self.p)]

    def is_degenerate(self) -> bool:
        return self.r1 == self.r2 or self.p in (0.0, 1.0)

    def mean(self) -> float:
        return self.p * self.r1 + (1.0 - self.p) * self.r2

    def to_flat(self) -> Dict[str, Any]:
        return {
            "contraction.kind": self.kind,
            "contraction.r1": self.r1,
            "contraction.r2": self.r2,
            "contraction.p": self.p,
        }


@dataclass(frozen=True)
class Uniform(ContractionLaw):
    """Uniform on the open interval (lo, hi); lo = 0 and hi = 1 are allowed"""

    lo: float = 0.0
    hi: float = 1.0
    kind: ClassVar[str] = "uniform"

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", _check_ratio("contraction.lo", self.lo, allow_zero=True))
        object.__setattr__(self, "hi", _check_ratio("contraction.hi", self.hi, allow_one=True))
        if not self.lo < self.hi:
            raise ConfigError("contraction.hi", f"must exceed contraction.lo ({self.lo!r})")

    def sample_ratio(self, stream: CounterStream, rank: int = 0) -> float:
        return min(stream.uniform(self.lo, self.hi), nextafter(self.hi, 0.0))

    def rank_support(self, rank: int = 0) -> Optional[List[Tuple[float, float]]]:
        return None

    def is_degenerate(self) -> bool:
        return False

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_flat(self) -> Dict[str, Any]:
        return {"contraction.kind": self.kind, "contraction.lo": self.lo, "contraction.hi": self.hi}


@dataclass(frozen=True)
class DeterministicRatios(ContractionLaw):
    """Sibling rank i always gets ratios[i mod m]"""

    ratios: Tuple[float, ...]
    kind: ClassVar[str] = "ratios"

    def __post_init__(self) -> None:
        if not self.ratios:
            raise ConfigError("contraction.ratios", "must list at least one ratio")
        object.__setattr__(
            self, "ratios", tuple(_check_ratio("contraction.ratios", r) for r in self.ratios)
        )

    def ratio(self, rank: int) -> float:
        return self.ratios[rank % len(self.ratios)]

    def sample_ratio(self, stream: CounterStream, rank: int = 0) -> float:
        return self.ratio(rank)

    def rank_support(self, rank: int = 0) -> Optional[List[Tuple[float, float]]]:
        return [(self.ratio(rank), 1.0)]

    def is_degenerate(self) -> bool:
        return len(set(self.ratios)) < 2

    def mean(self) -> float:
        return fsum(self.ratios) / len(self.ratios)

    def to_flat(self) -> Dict[str, Any]:
        return {"contraction.kind": self.kind, "contraction.ratios": list(self.ratios)}


CONTRACTION_KINDS = {law.kind: law for law in (Constant, TwoPoint, Uniform, DeterministicRatios)}


# ---------------------------------------------------------------------------
# Weighting modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Canonical:
    """W_i = R_i^beta / sum_j R_j^beta over siblings"""

    beta: float = 1.0
    mode: ClassVar[str] = "canonical"

    def __post_init__(self) -> None:
        if not self.beta > 0.0:
            raise ConfigError("weighting.beta", f"must be positive, got {self.beta!r}")
        object.__setattr__(self, "beta", float(self.beta))

    def to_flat(self) -> Dict[str, Any]:
        return {"weighting.mode": self.mode, "weighting.beta": self.beta}


@dataclass(frozen=True)
class RawProduct:
    """Mass proportional to the product of ratios along the path, normalized per depth"""

    mode: ClassVar[str] = "raw_product"

    def to_flat(self) -> Dict[str, Any]:
        return {"weighting.mode": self.mode}


@dataclass(frozen=True)
class Explicit:
    """Fixed weight per sibling rank (classical cascade)"""

    weights: Tuple[float, ...]
    mode: ClassVar[str] = "explicit"

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if not weights or any(not w > 0.0 for w in weights):
            raise ConfigError("weighting.weights", "weights must be positive")
        if abs(fsum(weights) - 1.0) > PROBABILITY_TOLERANCE:
            raise ConfigError("weighting.weights", f"weights sum to {fsum(weights)!r}, not 1")

    def to_flat(self) -> Dict[str, Any]:
        return {"weighting.mode": self.mode, "weighting.weights": list(self.weights)}


WeightingMode = Union[Canonical, RawProduct, Explicit]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class Variant(Enum):
    NON_ANCHORED = "non_anchored"
    ANCHORED = "anchored"


class Placement(Enum):
    FREE = "free"
    DISJOINT_PACK = "disjoint_pack"


FLAT_DEFAULTS: Dict[str, Any] = {
    "offspring.probs": [0.0, 0.0, 1.0],
    "contraction.kind": "two_point",
    "contraction.r": 0.5,
    "contraction.r1": "1/3",
    "contraction.r2": "2/3",
    "contraction.p": 0.5,
    "contraction.lo": 0.0,
    "contraction.hi": 1.0,
    "contraction.ratios": [0.5, 0.5],
    "variant": "non_anchored",
    "placement": "free",
    "weighting.mode": "canonical",
    "weighting.beta": 1.0,
    "weighting.weights": [0.5, 0.5],
    "subtree_height": 1,
    "max_depth": 10,
    "master_seed": 0,
    "strict": False,
}

FLAT_DESCRIPTIONS: Dict[str, str] = {
    "offspring.probs": "P(N = n) for n = 0..N_max, must sum to 1",
    "contraction.kind": "constant | two_point | uniform | ratios",
    "contraction.r": "ratio of the constant law",
    "contraction.r1": "first value of the two-point law",
    "contraction.r2": "second value of the two-point law",
    "contraction.p": "probability of r1 in the two-point law",
    "contraction.lo": "lower end of the uniform law (0 allowed)",
    "contraction.hi": "upper end of the uniform law (1 allowed)",
    "contraction.ratios": "deterministic ratio per sibling rank (cycled)",
    "variant": "non_anchored (free translation) | anchored (left endpoint fixed)",
    "placement": "free (independent uniform offsets) | disjoint_pack (no sibling overlap)",
    "weighting.mode": "canonical | raw_product | explicit",
    "weighting.beta": "exponent of the canonical weights R^beta",
    "weighting.weights": "explicit weight per sibling rank, must sum to 1",
    "subtree_height": "generations per embedded Galton-Watson subtree",
    "max_depth": "number of refinement steps",
    "master_seed": "64-bit master seed",
    "strict": "reject configurations that violate the non-degeneracy assumptions",
}


@dataclass(frozen=True)
class CascadeConfig:
    """Everything that determines one run"""

    offspring: OffspringLaw = field(default_factory=lambda: OffspringLaw.fixed(2))
    contraction: ContractionLaw = field(default_factory=lambda: TwoPoint(1.0 / 3.0, 2.0 / 3.0, 0.5))
    variant: Variant = Variant.NON_ANCHORED
    placement: Placement = Placement.FREE
    weighting: WeightingMode = field(default_factory=Canonical)
    subtree_height: int = 1
    max_depth: int = 10
    master_seed: int = 0
    strict: bool = False

    def __post_init__(self) -> None:
        if parse_integer("subtree_height", self.subtree_height) < 1:
            raise ConfigError("subtree_height", "must be at least 1")
        if parse_integer("max_depth", self.max_depth) < 1:
            raise ConfigError("max_depth", "must be at least 1")
        if not 0 <= parse_integer("master_seed", self.master_seed) <= MASK64:
            raise ConfigError("master_seed", "must fit in 64 unsigned bits")

    def validate(self) -> List[str]:
        """
        Checks the non-degeneracy assumptions. Violations are returned as
        warnings, or raised in strict mode.
        """
        problems = []
        if self.offspring.is_degenerate():
            problems.append(("offspring.probs", "offspring law is concentrated on {0, 1}"))
        if self.contraction.is_degenerate():
            problems.append(
                ("contraction.kind", "contraction law is degenerate, tau will be affine")
            )
        if isinstance(self.weighting, Explicit) and self.offspring.n_max > len(self.weighting.weights):
            raise ConfigError(
                "weighting.weights",
                f"{len(self.weighting.weights)} weights for up to {self.offspring.n_max} children",
            )
        if self.strict and problems:
            raise ConfigError(*problems[0])
        for name, message in problems:
            logger.warning("%s: %s", name, message)
        return [f"{name}: {message}" for name, message in problems]

    def with_changes(self, **changes: Any) -> "CascadeConfig":
        return replace(self, **changes)

    def to_flat(self) -> Dict[str, Any]:
        flat: Dict[str, Any] = {}
        flat.update(self.offspring.to_flat())
        flat.update(self.contraction.to_flat())
        flat["variant"] = self.variant.value
        flat["placement"] = self.placement.value
        flat.update(self.weighting.to_flat())
        flat["subtree_height"] = self.subtree_height
        flat["max_depth"] = self.max_depth
        flat["master_seed"] = self.master_seed
        flat["strict"] = self.strict
        return flat

    @classmethod
    def from_flat(cls, data: Mapping[str, Any]) -> "CascadeConfig":
        """Builds a config from flat dotted keys, falling back to FLAT_DEFAULTS"""
        unknown = sorted(set(data) - set(FLAT_DEFAULTS))
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration key")
        values = {**FLAT_DEFAULTS, **data}

        probs = values["offspring.probs"]
        if not isinstance(probs, list):
            raise ConfigError("offspring.probs", "must be a list of probabilities")
        offspring = OffspringLaw(tuple(parse_number("offspring.probs", p) for p in probs))

        kind = values["contraction.kind"]
        if kind == Constant.kind:
            contraction: ContractionLaw = Constant(parse_number("contraction.r", values["contraction.r"]))
        elif kind == TwoPoint.kind:
            contraction = TwoPoint(
                parse_number("contraction.r1", values["contraction.r1"]),
                parse_number("contraction.r2", values["contraction.r2"]),
                parse_number("contraction.p", values["contraction.p"]),
            )
        elif kind == Uniform.kind:
            contraction = Uniform(
                parse_number("contraction.lo", values["contraction.lo"]),
                parse_number("contraction.hi", values["contraction.hi"]),
            )
        elif kind == DeterministicRatios.kind:
            ratios = values["contraction.ratios"]
            if not isinstance(ratios, list):
                raise ConfigError("contraction.ratios", "must be a list of ratios")
            contraction = DeterministicRatios(
                tuple(parse_number("contraction.ratios", r) for r in ratios)
            )
        else:
            raise ConfigError("contraction.kind", f"unknown kind {kind!r}")

        mode = values["weighting.mode"]
        if mode == Canonical.mode:
            weighting: WeightingMode = Canonical(parse_number("weighting.beta", values["weighting.beta"]))
        elif mode == RawProduct.mode:
            weighting = RawProduct()
        elif mode == Explicit.mode:
            weights = values["weighting.weights"]
            if not isinstance(weights, list):
                raise ConfigError("weighting.weights", "must be a list of weights")
            weighting = Explicit(tuple(parse_number("weighting.weights", w) for w in weights))
        else:
            raise ConfigError("weighting.mode", f"unknown mode {mode!r}")

        try:
            variant = Variant(values["variant"])
        except ValueError as exc:
            raise ConfigError("variant", f"unknown variant {values['variant']!r}") from exc
        try:
            placement = Placement(values["placement"])
        except ValueError as exc:
            raise ConfigError("placement", f"unknown placement {values['placement']!r}") from exc
        if not isinstance(values["strict"], bool):
            raise ConfigError("strict", "must be true or false")

        return cls(
            offspring=offspring,
            contraction=contraction,
            variant=variant,
            placement=placement,
            weighting=weighting,
            subtree_height=values["subtree_height"],
            max_depth=values["max_depth"],
            master_seed=values["master_seed"],
            strict=values["strict"],
        )


def worked_example_config(**changes: Any) -> CascadeConfig:
    """N = 2, R in {1/3, 2/3} with probability 1/2 each, canonical weights with beta = 1"""
    config = CascadeConfig(
        offspring=OffspringLaw.fixed(2),
        contraction=TwoPoint(1.0 / 3.0, 2.0 / 3.0, 0.5),
        weighting=Canonical(1.0),
    )
    return config.with_changes(**changes)


def dyadic_config(**changes: Any) -> CascadeConfig:
    """N = 2, R = 1/2, disjoint packing: the uniform dyadic cascade"""
    config = CascadeConfig(
        offspring=OffspringLaw.fixed(2),
        contraction=Constant(0.5),
        placement=Placement.DISJOINT_PACK,
        weighting=Canonical(1.0),
    )
    return config.with_changes(**changes)


def figure1_config(**changes: Any) -> CascadeConfig:
    """One or two children, uniform ratios and free uniform translations, depth 20"""
    config = CascadeConfig(
        offspring=OffspringLaw((0.0, 0.5, 0.5)),
        contraction=Uniform(0.0, 1.0),
        placement=Placement.FREE,
        weighting=Canonical(1.0),
        max_depth=20,
    )
    return config.with_changes(**changes)


# ---------------------------------------------------------------------------
# Tree
# ---------------------------------------------------------------------------


class Interval(NamedTuple):
    left: float
    diameter: float

    @property
    def right(self) -> float:
        return self.left + self.diameter

    @classmethod
    def from_bounds(cls, left: float, right: float) -> "Interval":
        return cls(left, right - left)


@dataclass(frozen=True, slots=True)
class Node:
    """
    One node of the realization. depth is the refinement step k, level the
    generation inside the embedded subtree (subtree_height for depth leaves).
    """

    id: int
    parent: Optional[int]
    depth: int
    level: int
    left: float
    diameter: float
    contraction: float
    sibling_rank: int
    offspring: int
    seed: int
    is_leaf: bool

    @property
    def right(self) -> float:
        return self.left + self.diameter

    @property
    def interval(self) -> Interval:
        return Interval(self.left, self.diameter)


class NodeArrays(NamedTuple):
    parent: np.ndarray
    tier: np.ndarray
    depth: np.ndarray
    rank: np.ndarray
    ratio: np.ndarray
    left: np.ndarray
    diameter: np.ndarray


@dataclass
class Realization:
    """A grown tree: node store, child lists and per-depth leaf lists"""

    config: CascadeConfig
    nodes: List[Node] = field(default_factory=list)
    children: List[List[int]] = field(default_factory=list)
    leaves_by_depth: List[List[int]] = field(default_factory=list)
    extinct: bool = False

    @property
    def depth(self) -> int:
        """Deepest refinement step grown so far"""
        return len(self.leaves_by_depth) - 1

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def leaves(self, depth: int) -> List[Node]:
        return [self.nodes[i] for i in self.leaves_by_depth[depth]]

    def leaf_count(self, depth: int) -> int:
        return len(self.leaves_by_depth[depth])

    def first_empty_depth(self) -> Optional[int]:
        for depth, leaves in enumerate(self.leaves_by_depth):
            if not leaves:
                return depth
        return None

    def path(self, node_id: int) -> List[int]:
        """Root-to-node sibling ranks"""
        ranks = []
        node = self.nodes[node_id]
        while node.parent is not None:
            ranks.append(node.sibling_rank)
            node = self.nodes[node.parent]
        return ranks[::-1]

    def descendants_at(self, node_id: int, depth: int) -> List[int]:
        """Depth leaves below node_id, in leaf order"""
        found = []
        stack = [node_id]
        while stack:
            current = self.nodes[stack.pop()]
            if current.depth == depth and current.is_leaf:
                found.append(current.id)
                continue
            if current.depth > depth:
                continue
            stack.extend(self.children[current.id])
        return sorted(found)

    def arrays(self) -> NodeArrays:
        """Column view of the node store, indexed by node id"""
        count = len(self.nodes)
        parent = np.full(count, -1, dtype=np.int64)
        tier = np.zeros(count, dtype=np.int64)
        for node in self.nodes[1:]:
            parent[node.id] = node.parent
            tier[node.id] = tier[node.parent] + 1
        return NodeArrays(
            parent=parent,
            tier=tier,
            depth=np.fromiter((n.depth for n in self.nodes), dtype=np.int64, count=count),
            rank=np.fromiter((n.sibling_rank for n in self.nodes), dtype=np.int64, count=count),
            ratio=np.fromiter((n.contraction for n in self.nodes), dtype=np.float64, count=count),
            left=np.fromiter((n.left for n in self.nodes), dtype=np.float64, count=count),
            diameter=np.fromiter((n.diameter for n in self.nodes), dtype=np.float64, count=count),
        )


# ---------------------------------------------------------------------------
# Sampling and placement
# ---------------------------------------------------------------------------


def sample_offspring(law: OffspringLaw, stream: CounterStream) -> int:
    """Offspring count drawn from law"""
    return law.sample(stream)


def sample_contraction(
    law: ContractionLaw, parent_scale: float, stream: CounterStream, rank: int = 0
) -> float:
    """R = r * s(v) with r drawn from law, so 0 < R < s(v)"""
    return law.sample_ratio(stream, rank) * parent_scale


def place_children(
    parent: Interval,
    child_diameters: Sequence[float],
    variant: Variant,
    policy: Placement,
    stream: CounterStream,
    redraw: Optional[Callable[[int], Sequence[float]]] = None,
    node_id: Optional[int] = None,
    max_attempts: int = MAX_PLACEMENT_ATTEMPTS,
) -> List[Interval]:
    """
    Embeds children of the given diameters inside parent.

    Anchored children share the parent's left endpoint. Free children are
    translated independently and uniformly. Disjoint packing lays children
    out left to right in sibling order with Dirichlet-distributed gaps; when
    they do not fit, redraw(attempt) supplies new diameters.
    """
    diameters = list(child_diameters)
    for diameter in diameters:
        if not 0.0 < diameter < parent.diameter:
            raise ValueError(f"child diameter {diameter!r} not inside (0, {parent.diameter!r})")

    if variant is Variant.ANCHORED:
        return [Interval(parent.left, d) for d in diameters]

    if policy is Placement.FREE:
        return [Interval(parent.left + stream.random() * (parent.diameter - d), d) for d in diameters]

    attempt = 0
    while fsum(diameters) > parent.diameter * (1.0 + PROBABILITY_TOLERANCE):
        attempt += 1
        if redraw is None or attempt >= max_attempts:
            raise PlacementInfeasibleError(-1 if node_id is None else node_id, attempt)
        diameters = list(redraw(attempt))

    slack = max(parent.diameter - fsum(diameters), 0.0)
    gaps = [stream.exponential() for _ in range(len(diameters) + 1)]
    scale = slack / fsum(gaps)
    intervals = []
    cursor = parent.left + gaps[0] * scale
    for index, diameter in enumerate(diameters):
        intervals.append(Interval(cursor, diameter))
        cursor += diameter + gaps[index + 1] * scale
    return intervals


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------


class _Draft(NamedTuple):
    """A node produced by expanding one leaf, before it gets its global id"""

    parent_ref: int  # -1: the expanded leaf itself
    level: int
    left: float
    diameter: float
    contraction: float
    sibling_rank: int
    offspring: int
    seed: int
    is_leaf: bool


def _root(config: CascadeConfig) -> Node:
    seed = derive_node_seed(config.master_seed, ())
    return Node(
        id=0,
        parent=None,
        depth=0,
        level=0,
        left=0.0,
        diameter=1.0,
        contraction=1.0,
        sibling_rank=0,
        offspring=sample_offspring(config.offspring, CounterStream(seed).substream(OFFSPRING)),
        seed=seed,
        is_leaf=True,
    )


def _expand_family(
    parent: Union[Node, _Draft], config: CascadeConfig, leaf_id: int
) -> List[Tuple[Interval, float, int, int]]:
    """Draws ratios, seeds and positions of one node's children"""
    parent_stream = CounterStream(parent.seed)
    child_streams = [parent_stream.spawn(rank) for rank in range(parent.offspring)]
    ratio_streams = [stream.substream(RATIO) for stream in child_streams]
    ratios = [
        config.contraction.sample_ratio(stream, rank) for rank, stream in enumerate(ratio_streams)
    ]

    def redraw(_attempt: int) -> List[float]:
        ratios[:] = [
            config.contraction.sample_ratio(stream, rank)
            for rank, stream in enumerate(ratio_streams)
        ]
        return [ratio * parent.diameter for ratio in ratios]

    intervals = place_children(
        Interval(parent.left, parent.diameter),
        [ratio * parent.diameter for ratio in ratios],
        config.variant,
        config.placement,
        parent_stream.substream(PLACEMENT),
        redraw=redraw,
        node_id=leaf_id,
    )
    return [
        (interval, ratio, stream.seed, sample_offspring(config.offspring, stream.substream(OFFSPRING)))
        for interval, ratio, stream in zip(intervals, ratios, child_streams)
    ]


def _expand_leaf(leaf: Node, config: CascadeConfig) -> List[_Draft]:
    """Replaces one leaf by a Galton-Watson subtree of height subtree_height"""
    drafts: List[_Draft] = []
    frontier: List[Tuple[int, Union[Node, _Draft]]] = [(-1, leaf)]
    for level in range(1, config.subtree_height + 1):
        next_frontier = []
        for parent_ref, parent in frontier:
            if parent.offspring == 0:
                continue
            for rank, (interval, ratio, seed, offspring) in enumerate(
                _expand_family(parent, config, leaf.id)
            ):
                draft = _Draft(
                    parent_ref=parent_ref,
                    level=level,
                    left=interval.left,
                    diameter=interval.diameter,
                    contraction=ratio,
                    sibling_rank=rank,
                    offspring=offspring,
                    seed=seed,
                    is_leaf=level == config.subtree_height,
                )
                drafts.append(draft)
                next_frontier.append((len(drafts) - 1, draft))
        frontier = next_frontier
    return drafts


def grow_step(realization: Realization, threads: int = 1) -> Realization:
    """
    Advances the realization by one refinement depth. Leaves are expanded
    independently (optionally on several threads) and merged in leaf order.
    """
    if realization.extinct:
        raise ExtinctDepthError(realization.depth, "cannot grow an extinct realization")
    config = realization.config
    depth = realization.depth + 1
    frontier = realization.leaves(realization.depth)

    expansions = map_ordered(lambda leaf: _expand_leaf(leaf, config), frontier, threads)

    nodes = realization.nodes
    children = realization.children
    new_leaves = []
    for leaf, drafts in zip(frontier, expansions):
        local_ids: List[int] = []
        for draft in drafts:
            node_id = len(nodes)
            parent_id = leaf.id if draft.parent_ref < 0 else local_ids[draft.parent_ref]
            nodes.append(
                Node(
                    id=node_id,
                    parent=parent_id,
                    depth=depth,
                    level=draft.level,
                    left=draft.left,
                    diameter=draft.diameter,
                    contraction=draft.contraction,
                    sibling_rank=draft.sibling_rank,
                    offspring=draft.offspring,
                    seed=draft.seed,
                    is_leaf=draft.is_leaf,
                )
            )
            children.append([])
            children[parent_id].append(node_id)
            local_ids.append(node_id)
            if draft.is_leaf:
                new_leaves.append(node_id)

    realization.leaves_by_depth.append(new_leaves)
    if not new_leaves:
        realization.extinct = True
        logger.debug("Realization went extinct at depth %s", depth)
    return realization


def grow(config: CascadeConfig, threads: int = 1) -> Realization:
    """Grows a realization from the root [0, 1] to config.max_depth, or extinction"""
    config.validate()
    root = _root(config)
    realization = Realization(config=config, nodes=[root], children=[[]], leaves_by_depth=[[0]])
    for _ in range(config.max_depth):
        if realization.extinct:
            break
        grow_step(realization, threads)
    logger.debug(
        "Grew %s nodes to depth %s (%s leaves, extinct=%s)",
        len(realization.nodes),
        realization.depth,
        realization.leaf_count(realization.depth),
        realization.extinct,
    )
    return realization


def check_nestedness(realization: Realization, tolerance: float = 1e-12) -> List[str]:
    """Returns a description of every nestedness violation (empty when nested)"""
    problems = []
    for node in realization.nodes[1:]:
        parent = realization.nodes[node.parent]
        slack = tolerance * parent.diameter
        if node.left < parent.left - slack or node.right > parent.right + slack:
            problems.append(f"node {node.id} leaves the interval of node {parent.id}")
        if not node.diameter < parent.diameter:
            problems.append(f"node {node.id} is not smaller than node {parent.id}")
        if not isclose(node.diameter, node.contraction * parent.diameter, rel_tol=tolerance):
            problems.append(f"node {node.id} diameter is not ratio times parent diameter")
        if realization.config.variant is Variant.ANCHORED and node.left != parent.left:
            problems.append(f"node {node.id} is not anchored at its parent's left endpoint")
    return problems

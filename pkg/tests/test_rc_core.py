#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# Built-in modules
from math import prod, sqrt

# pip modules
import numpy as np
import pytest

# local modules
from rifscascade.rc_core import (
    FLAT_DEFAULTS,
    FLAT_DESCRIPTIONS,
    Canonical,
    CascadeConfig,
    Constant,
    DeterministicRatios,
    Explicit,
    Interval,
    OffspringLaw,
    Placement,
    RawProduct,
    TwoPoint,
    Uniform,
    Variant,
    check_nestedness,
    dyadic_config,
    grow,
    grow_step,
    place_children,
    sample_contraction,
    sample_offspring,
    worked_example_config,
)
from rifscascade.rc_errors import ConfigError, ExtinctDepthError, PlacementInfeasibleError
from rifscascade.rc_measure import node_masses, scale_matrix
from rifscascade.rc_random import CounterStream, ensemble_seeds, stream_for


# Laws


def test_offspring_probabilities_must_sum_to_one():
    with pytest.raises(ConfigError) as error:
        OffspringLaw((0.2, 0.3, 0.4))
    assert error.value.field == "offspring.probs"


def test_offspring_probabilities_must_be_non_negative():
    with pytest.raises(ConfigError):
        OffspringLaw((-0.1, 0.6, 0.5))


def test_offspring_summaries():
    law = OffspringLaw((0.25, 0.25, 0.5))
    assert law.n_max == 2
    assert law.support == (0, 1, 2)
    assert law.mean == pytest.approx(1.25)
    assert law.generating_function(0.5) == pytest.approx(0.25 + 0.125 + 0.125)
    assert OffspringLaw.fixed(3).probs == (0.0, 0.0, 0.0, 1.0)


def test_extinction_probability_is_smallest_fixed_point():
    law = OffspringLaw((0.25, 0.25, 0.5))
    assert law.extinction_probability() == pytest.approx(0.5, abs=1e-9)
    assert OffspringLaw.fixed(2).extinction_probability() == 0.0
    assert law.extinction_probability(generations=1) == pytest.approx(0.25)
    assert law.extinction_probability(generations=2) == pytest.approx(
        law.generating_function(0.25)
    )


def test_degenerate_offspring():
    assert OffspringLaw((0.3, 0.7)).is_degenerate()
    assert OffspringLaw((1.0,)).is_degenerate()
    assert not OffspringLaw((0.0, 0.5, 0.5)).is_degenerate()


def test_offspring_sampling_frequencies():
    law = OffspringLaw((0.2, 0.3, 0.5))
    stream = stream_for(4)
    draws = np.array([sample_offspring(law, stream) for _ in range(4_000)])
    for count, probability in enumerate(law.probs):
        frequency = (draws == count).mean()
        assert abs(frequency - probability) < 5 * sqrt(probability * (1 - probability) / 4_000)


@pytest.mark.parametrize(
    "build, field",
    [
        (lambda: Constant(1.0), "contraction.r"),
        (lambda: Constant(0.0), "contraction.r"),
        (lambda: TwoPoint(0.5, 0.5, 1.5), "contraction.p"),
        (lambda: Uniform(0.5, 0.5), "contraction.hi"),
        (lambda: Uniform(-0.1, 0.5), "contraction.lo"),
        (lambda: DeterministicRatios(()), "contraction.ratios"),
        (lambda: Canonical(0.0), "weighting.beta"),
        (lambda: Explicit((0.5, 0.6)), "weighting.weights"),
    ],
)
def test_invalid_laws_name_their_field(build, field):
    with pytest.raises(ConfigError) as error:
        build()
    assert error.value.field == field


def test_contraction_samples():
    stream = stream_for(6)
    assert Constant(0.4).sample_ratio(stream) == 0.4
    assert {TwoPoint(0.25, 0.5).sample_ratio(stream) for _ in range(200)} == {0.25, 0.5}
    uniform = [Uniform(0.0, 1.0).sample_ratio(stream) for _ in range(2_000)]
    assert 0.0 < min(uniform) and max(uniform) < 1.0
    ratios = DeterministicRatios((0.2, 0.3))
    assert [ratios.sample_ratio(stream, rank) for rank in range(5)] == [0.2, 0.3, 0.2, 0.3, 0.2]


def test_contraction_degeneracy_and_support():
    assert Constant(0.5).is_degenerate()
    assert TwoPoint(0.5, 0.5).is_degenerate()
    assert TwoPoint(0.2, 0.6, 1.0).is_degenerate()
    assert not TwoPoint(1 / 3, 2 / 3).is_degenerate()
    assert not Uniform().is_degenerate()
    assert Uniform().rank_support() is None
    assert TwoPoint(0.2, 0.6, 0.25).rank_support() == [(0.2, 0.25), (0.6, 0.75)]


def test_sample_contraction_scales_the_parent():
    assert sample_contraction(Constant(0.5), 0.4, stream_for(0)) == pytest.approx(0.2)


# Configuration


def test_flat_round_trip():
    for config in (
        worked_example_config(),
        dyadic_config(weighting=Explicit((0.25, 0.75))),
        CascadeConfig(
            offspring=OffspringLaw((0.1, 0.4, 0.5)),
            contraction=Uniform(0.1, 0.9),
            variant=Variant.ANCHORED,
            weighting=RawProduct(),
            subtree_height=2,
            max_depth=4,
            master_seed=99,
        ),
        CascadeConfig(contraction=DeterministicRatios((0.3, 0.6)), weighting=Canonical(2.0)),
    ):
        assert CascadeConfig.from_flat(config.to_flat()) == config


def test_from_flat_accepts_fractions():
    config = CascadeConfig.from_flat({"contraction.r1": "1/3", "contraction.r2": "2/3"})
    assert config.contraction == TwoPoint(1 / 3, 2 / 3, 0.5)


def test_from_flat_rejects_unknown_keys():
    with pytest.raises(ConfigError) as error:
        CascadeConfig.from_flat({"max_deph": 3})
    assert error.value.field == "max_deph"


@pytest.mark.parametrize(
    "flat, field",
    [
        ({"contraction.kind": "gamma"}, "contraction.kind"),
        ({"weighting.mode": "sqrt"}, "weighting.mode"),
        ({"variant": "sideways"}, "variant"),
        ({"placement": "stacked"}, "placement"),
        ({"max_depth": 0}, "max_depth"),
        ({"max_depth": 2.5}, "max_depth"),
        ({"subtree_height": 0}, "subtree_height"),
        ({"master_seed": -1}, "master_seed"),
        ({"offspring.probs": [0.5, 0.4]}, "offspring.probs"),
        ({"strict": "yes"}, "strict"),
    ],
)
def test_from_flat_errors(flat, field):
    with pytest.raises(ConfigError) as error:
        CascadeConfig.from_flat(flat)
    assert error.value.field == field


def test_every_default_is_described():
    assert set(FLAT_DEFAULTS) == set(FLAT_DESCRIPTIONS)
    CascadeConfig.from_flat(FLAT_DEFAULTS)


def test_validation_warns_or_raises_on_degenerate_laws():
    config = dyadic_config()
    assert any("contraction" in warning for warning in config.validate())
    with pytest.raises(ConfigError):
        config.with_changes(strict=True).validate()
    assert worked_example_config(strict=True).validate() == []


def test_explicit_weights_must_cover_every_family():
    config = CascadeConfig(offspring=OffspringLaw.fixed(3), weighting=Explicit((0.5, 0.5)))
    with pytest.raises(ConfigError) as error:
        config.validate()
    assert error.value.field == "weighting.weights"


# Placement


def test_anchored_children_share_the_left_endpoint():
    parent = Interval(0.2, 0.4)
    children = place_children(parent, [0.1, 0.3], Variant.ANCHORED, Placement.FREE, stream_for(1))
    assert [child.left for child in children] == [0.2, 0.2]
    assert [child.diameter for child in children] == [0.1, 0.3]


def test_free_children_stay_inside_the_parent():
    parent = Interval.from_bounds(0.2, 0.6)
    stream = stream_for(2)
    for _ in range(200):
        for child in place_children(parent, [0.1, 0.35], Variant.NON_ANCHORED, Placement.FREE, stream):
            assert parent.left <= child.left
            assert child.right <= parent.right + 1e-15


def test_packed_children_are_disjoint_and_ordered():
    parent = Interval(0.0, 1.0)
    stream = stream_for(3)
    for _ in range(200):
        children = place_children(
            parent, [0.2, 0.3, 0.1], Variant.NON_ANCHORED, Placement.DISJOINT_PACK, stream
        )
        assert [child.diameter for child in children] == [0.2, 0.3, 0.1]
        assert children[0].left >= 0.0
        for first, second in zip(children, children[1:]):
            assert first.right <= second.left + 1e-15
        assert children[-1].right <= 1.0 + 1e-15


def test_exact_fit_leaves_no_gaps():
    children = place_children(
        Interval(0.0, 1.0), [0.5, 0.5], Variant.NON_ANCHORED, Placement.DISJOINT_PACK, stream_for(0)
    )
    assert children == [Interval(0.0, 0.5), Interval(0.5, 0.5)]


def test_infeasible_packing_redraws_then_gives_up():
    parent = Interval(0.0, 1.0)
    with pytest.raises(PlacementInfeasibleError) as error:
        place_children(
            parent, [0.6, 0.6], Variant.NON_ANCHORED, Placement.DISJOINT_PACK, stream_for(0), node_id=7
        )
    assert error.value.node_id == 7

    calls = []

    def redraw(attempt):
        calls.append(attempt)
        return [0.6, 0.6] if attempt < 3 else [0.3, 0.3]

    children = place_children(
        parent, [0.6, 0.6], Variant.NON_ANCHORED, Placement.DISJOINT_PACK, stream_for(0), redraw
    )
    assert calls == [1, 2, 3]
    assert [child.diameter for child in children] == [0.3, 0.3]

    with pytest.raises(PlacementInfeasibleError):
        place_children(
            parent,
            [0.6, 0.6],
            Variant.NON_ANCHORED,
            Placement.DISJOINT_PACK,
            stream_for(0),
            lambda attempt: [0.6, 0.6],
            max_attempts=5,
        )


# Growth


def test_dyadic_growth_is_exact():
    realization = grow(dyadic_config(max_depth=3))
    leaves = realization.leaves(3)
    assert len(leaves) == 8
    assert [leaf.diameter for leaf in leaves] == [0.125] * 8
    assert sorted(leaf.left for leaf in leaves) == [k / 8 for k in range(8)]


def test_worked_example_leaf_counts(small_worked_realization):
    for depth in range(small_worked_realization.depth + 1):
        assert small_worked_realization.leaf_count(depth) == 2**depth


def test_growth_is_deterministic_and_thread_independent():
    config = worked_example_config(max_depth=7, master_seed=21)
    assert grow(config).nodes == grow(config).nodes
    assert grow(config, threads=4).nodes == grow(config).nodes


def test_deeper_growth_extends_shallower_growth():
    config = CascadeConfig(
        offspring=OffspringLaw((0.1, 0.3, 0.6)), contraction=Uniform(0.1, 0.9), master_seed=5
    )
    shallow = grow(config.with_changes(max_depth=3))
    deep = grow(config.with_changes(max_depth=6))
    assert deep.nodes[: len(shallow.nodes)] == shallow.nodes
    assert deep.leaves_by_depth[:4] == shallow.leaves_by_depth


def test_nodes_are_stored_parent_first_with_contiguous_children(small_worked_realization):
    for node in small_worked_realization.nodes[1:]:
        assert node.parent < node.id
    for children in small_worked_realization.children:
        if children:
            assert children == list(range(children[0], children[0] + len(children)))


def test_diameters_are_products_of_ratios(small_worked_realization):
    realization = small_worked_realization
    for leaf in realization.leaves(realization.depth)[:50]:
        ratios = []
        node = leaf
        while node.parent is not None:
            ratios.append(node.contraction)
            node = realization.nodes[node.parent]
        assert leaf.diameter == pytest.approx(prod(ratios), rel=1e-12)
        assert len(realization.path(leaf.id)) == realization.depth


def test_extinction_stops_growth():
    realization = grow(CascadeConfig(offspring=OffspringLaw((1.0,)), max_depth=5))
    assert realization.extinct
    assert realization.depth == 1
    assert realization.leaf_count(1) == 0
    assert realization.first_empty_depth() == 1
    with pytest.raises(ExtinctDepthError):
        grow_step(realization)


def test_extinction_frequency_matches_generating_function():
    law = OffspringLaw((0.3, 0.2, 0.5))
    config = CascadeConfig(offspring=law, contraction=Uniform(0.2, 0.8), max_depth=12)
    seeds = ensemble_seeds(17, 400)
    extinct = np.mean([grow(config.with_changes(master_seed=seed)).extinct for seed in seeds])
    expected = law.extinction_probability(generations=12)
    assert abs(extinct - expected) < 4 * sqrt(expected * (1 - expected) / 400)


def test_leaf_count_mean_follows_offspring_mean():
    config = CascadeConfig(offspring=OffspringLaw((0.0, 0.5, 0.5)), contraction=Uniform(), max_depth=6)
    counts = np.array(
        [grow(config.with_changes(master_seed=seed)).leaf_count(6) for seed in ensemble_seeds(2, 200)]
    )
    expected = 1.5**6
    assert abs(counts.mean() - expected) < 5 * counts.std(ddof=1) / sqrt(len(counts))
    assert counts.min() >= 1
    assert counts.max() <= 2**6


def test_subtree_height_two_replaces_each_leaf_by_two_generations():
    realization = grow(dyadic_config(subtree_height=2, max_depth=2))
    assert realization.leaf_count(1) == 4
    assert realization.leaf_count(2) == 16
    intermediate = [node for node in realization.nodes if node.depth == 1 and not node.is_leaf]
    assert len(intermediate) == 2
    assert all(node.level == 1 for node in intermediate)
    assert all(node.level == 2 for node in realization.leaves(1))
    assert all(node.diameter == 0.25 for node in realization.leaves(1))


def test_descendants_at_depth(small_worked_realization):
    realization = small_worked_realization
    leaf = realization.leaves(3)[2]
    below = realization.descendants_at(leaf.id, 5)
    assert len(below) == 4
    assert all(realization.nodes[i].depth == 5 for i in below)
    assert realization.descendants_at(leaf.id, 3) == [leaf.id]


def _random_config(rng, index):
    n_max = int(rng.integers(1, 4))
    probs = rng.dirichlet(np.ones(n_max + 1))
    probs[0] *= 0.3
    probs = probs / probs.sum()
    placement = Placement.DISJOINT_PACK if rng.random() < 0.4 else Placement.FREE
    if placement is Placement.DISJOINT_PACK:
        contraction = Uniform(0.0, 1.0 / n_max) if n_max > 1 else Uniform(0.1, 0.9)
    else:
        contraction = [
            Constant(float(rng.uniform(0.2, 0.8))),
            TwoPoint(float(rng.uniform(0.1, 0.5)), float(rng.uniform(0.5, 0.9)), float(rng.random())),
            Uniform(0.0, 1.0),
            DeterministicRatios(tuple(float(r) for r in rng.uniform(0.1, 0.9, size=3))),
        ][index % 4]
    weighting = [
        Canonical(float(rng.uniform(0.5, 2.0))),
        RawProduct(),
        Explicit(tuple(float(w) for w in rng.dirichlet(np.ones(n_max)) * (1 - 1e-14) + 1e-14 / n_max)),
    ][index % 3]
    return CascadeConfig(
        offspring=OffspringLaw(tuple(float(p) for p in probs)),
        contraction=contraction,
        variant=Variant.ANCHORED if rng.random() < 0.3 else Variant.NON_ANCHORED,
        placement=placement,
        weighting=weighting,
        subtree_height=2 if n_max <= 2 and rng.random() < 0.3 else 1,
        max_depth=4,
        master_seed=int(rng.integers(0, 2**63)),
    )


def test_structural_invariants_on_random_configs():
    rng = np.random.default_rng(20240601)
    for index in range(100):
        config = _random_config(rng, index)
        realization = grow(config)
        assert check_nestedness(realization) == [], config

        matrix = scale_matrix(realization)
        for row in matrix.masses:
            assert row.sum() == pytest.approx(1.0, rel=1e-9)

        if config.variant is Variant.ANCHORED:
            for lefts in matrix.lefts:
                assert lefts.min() == 0.0

        if not isinstance(config.weighting, RawProduct):
            masses = node_masses(realization)
            for node_id, children in enumerate(realization.children):
                if children:
                    assert masses[children].sum() == pytest.approx(masses[node_id], rel=1e-12)

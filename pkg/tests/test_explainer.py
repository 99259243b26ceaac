"""Counterfactual search against a plain full-enumeration reference, plus the
guidance ladder, quality facts, and serialization formats.
"""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from clxai.explainer import (
    BUDGET_TOO_TIGHT,
    NO_FLIP_IN_SUBSPACE,
    ConstraintError,
    Counterfactual,
    DegenerateModelError,
    FeedbackConstraints,
    GuidanceSuggestion,
    Infeasible,
    apply_suggestion,
    brute_force_optimal,
    constraints_from_dict,
    constraints_to_dict,
    counterfactual_from_dict,
    counterfactual_to_dict,
    default_constraints,
    generate_counterfactual,
    goodness_of,
    guidance_from_dict,
    guidance_to_dict,
    guide_constraints,
    seeded_infeasible_instances,
    seeded_instances,
)
from clxai.predictor import oracle_model, predict, train
from clxai.world import IMPROVE, LabeledSample, WORSEN, default_world, diet_cost

from conftest import make_tiny_world


# --- independent reference: filter the whole grid, no shared search code ---


def independent_search(model, original, cons):
    """Best (distance, suggested) by scanning the full constrained subgrid."""
    world = model.world
    original = tuple(original)
    if predict(model, original).label == IMPROVE:
        return 0, original
    declared = {p: (lo, hi) for p, lo, hi in cons.ranges}
    axes = []
    for p in range(world.n_plants):
        if p in cons.mutable_plants:
            lo, hi = declared.get(p, (world.plants[p].leaf_min, world.plants[p].leaf_max))
            axes.append(range(lo, hi + 1))
        else:
            axes.append((original[p],))
    best = None
    for cand in itertools.product(*axes):
        changed = sum(1 for a, b in zip(cand, original) if a != b)
        if changed == 0 or changed > cons.max_changes:
            continue
        if sum(c * v for c, v in zip(world.costs, cand)) > cons.budget:
            continue
        if predict(model, cand).label != IMPROVE:
            continue
        dist = sum(c * abs(a - b) for c, a, b in zip(world.costs, cand, original))
        key = (dist, changed, cand)
        if best is None or key < best:
            best = key
    return None if best is None else (best[0], best[2])


def assert_matches_reference(model, original, cons, stats=None):
    expected = independent_search(model, original, cons)
    staged = generate_counterfactual(model, original, cons, stats)
    brute = brute_force_optimal(model, original, cons, stats)
    if expected is None:
        assert isinstance(staged, Infeasible)
        assert isinstance(brute, Infeasible)
    else:
        dist, suggested = expected
        for result in (staged, brute):
            assert isinstance(result, Counterfactual)
            assert result.distance == dist
            assert result.suggested == suggested


def test_worked_example(oracle, oracle_stats):
    cons = FeedbackConstraints(
        mutable_plants=(1, 3), ranges=((1, 0, 4), (3, 0, 3)), budget=20, max_changes=3
    )
    cf = generate_counterfactual(oracle, (1, 1, 0, 0, 2), cons, oracle_stats)
    assert isinstance(cf, Counterfactual)
    assert cf.suggested == (1, 4, 0, 0, 2)
    assert cf.distance == 6
    assert cf.changed_plants == ((1, 1, 4),)
    assert cf.predicted.label == IMPROVE
    assert_matches_reference(oracle, (1, 1, 0, 0, 2), cons, oracle_stats)


def test_worked_example_hint_text(oracle, oracle_stats):
    cons = FeedbackConstraints(
        mutable_plants=(1, 3), ranges=((1, 0, 4), (3, 0, 3)), budget=20, max_changes=3
    )
    cf = generate_counterfactual(oracle, (1, 1, 0, 0, 2), cons, oracle_stats)
    assert [h.plant for h in cf.hints] == [1]
    assert cf.hints[0].text == (
        "For plant P2, healthy diets in our data typically use between 3 and 5 leaves."
    )
    assert (cf.hints[0].q25, cf.hints[0].q75) == (3, 5)


def test_hints_cover_only_changed_plants(oracle, oracle_stats):
    cf = generate_counterfactual(oracle, (0, 0, 0, 0, 0), None, oracle_stats)
    assert isinstance(cf, Counterfactual)
    assert {h.plant for h in cf.hints} == {p for p, _, _ in cf.changed_plants}


def test_no_stats_means_no_hints(oracle):
    cf = generate_counterfactual(oracle, (0, 0, 0, 0, 0))
    assert isinstance(cf, Counterfactual)
    assert cf.hints == ()


def test_identity_when_already_improving(oracle, oracle_stats):
    cf = generate_counterfactual(oracle, (0, 4, 0, 3, 0), None, oracle_stats)
    assert isinstance(cf, Counterfactual)
    assert cf.suggested == cf.original == (0, 4, 0, 3, 0)
    assert cf.distance == 0
    assert cf.changed_plants == ()
    assert cf.hints == ()


def test_forced_change_when_range_excludes_current(oracle, oracle_stats):
    cons = FeedbackConstraints(mutable_plants=(1, 3), ranges=((1, 2, 4),), budget=20)
    original = (1, 1, 0, 0, 0)
    result = generate_counterfactual(oracle, original, cons, oracle_stats)
    assert isinstance(result, Counterfactual)
    assert 2 <= result.suggested[1] <= 4
    assert 1 in {p for p, _, _ in result.changed_plants}
    assert_matches_reference(oracle, original, cons, oracle_stats)


def test_respects_max_changes_and_budget(oracle, oracle_stats):
    cons = FeedbackConstraints(mutable_plants=(0, 1, 2, 3, 4), budget=14, max_changes=1)
    result = generate_counterfactual(oracle, (0, 0, 0, 0, 0), cons, oracle_stats)
    assert isinstance(result, Counterfactual)
    assert len(result.changed_plants) <= 1
    assert diet_cost(result.suggested, oracle.world) <= 14
    assert_matches_reference(oracle, (0, 0, 0, 0, 0), cons, oracle_stats)


def test_tie_breaks_prefer_lexicographically_smaller_diet():
    world = make_tiny_world(threshold=3.0)
    model = oracle_model(world)
    cons = FeedbackConstraints(mutable_plants=(0, 1), budget=12, max_changes=2)
    cf = generate_counterfactual(model, (0, 0), cons)
    # (1, 0) and (0, 1) both cost distance 1; the smaller diet wins
    assert cf.suggested == (0, 1)


def test_tie_breaks_prefer_fewer_changes_before_lexicographic():
    world = make_tiny_world(threshold=6.0)
    model = oracle_model(world)
    cons = FeedbackConstraints(
        mutable_plants=(0, 1), ranges=((1, 0, 1),), budget=12, max_changes=2
    )
    cf = generate_counterfactual(model, (0, 0), cons)
    # distance ties at 2 between (2, 0) with one change and (1, 1) with two;
    # sparsity outranks the lexicographic order
    assert cf.suggested == (2, 0)


def test_candidate_order_is_total(oracle, oracle_stats):
    # package pick equals the minimum of the explicitly sorted candidate list
    cons = FeedbackConstraints(mutable_plants=(0, 1, 3), budget=18, max_changes=2)
    original = (2, 0, 0, 0, 0)
    world = oracle.world
    candidates = []
    for cand in itertools.product(range(7), range(7), range(7)):
        diet = (cand[0], cand[1], 0, cand[2], 0)
        changed = sum(1 for a, b in zip(diet, original) if a != b)
        if not (1 <= changed <= 2):
            continue
        if diet_cost(diet, world) > 18:
            continue
        if predict(oracle, diet).label != IMPROVE:
            continue
        dist = sum(world.costs[i] * abs(diet[i] - original[i]) for i in range(5))
        candidates.append((dist, changed, diet))
    expected = min(candidates)
    cf = generate_counterfactual(oracle, original, cons, oracle_stats)
    assert (cf.distance, len(cf.changed_plants), cf.suggested) == expected


@pytest.mark.parametrize("n,seed", [(120, 1), (60, 2)])
def test_matches_reference_on_seeded_instances_oracle(oracle, oracle_stats, n, seed):
    for original, cons in seeded_instances(oracle.world, n, seed):
        assert_matches_reference(oracle, original, cons, oracle_stats)


def test_matches_reference_on_seeded_instances_tree(tree_model, tree_stats):
    for original, cons in seeded_instances(tree_model.world, 60, 3):
        assert_matches_reference(tree_model, original, cons, tree_stats)


_RAND_MODEL = oracle_model(default_world())


@settings(max_examples=50, deadline=None)
@given(
    st.tuples(*[st.integers(0, 6)] * 5),
    st.sets(st.integers(0, 4), min_size=1, max_size=3),
    st.integers(0, 24),
    st.integers(1, 3),
    st.data(),
)
def test_matches_reference_on_random_instances(original, mutable, budget, max_changes, data):
    model = _RAND_MODEL
    ranges = []
    for p in sorted(mutable):
        if data.draw(st.booleans(), label=f"subrange_{p}"):
            lo = data.draw(st.integers(0, 6), label=f"lo_{p}")
            hi = data.draw(st.integers(lo, 6), label=f"hi_{p}")
            ranges.append((p, lo, hi))
    cons = FeedbackConstraints(
        mutable_plants=tuple(sorted(mutable)),
        ranges=tuple(ranges),
        budget=budget,
        max_changes=max_changes,
    )
    assert_matches_reference(model, original, cons)


def test_budget_guidance_anchor(oracle, oracle_stats):
    result = generate_counterfactual(
        oracle, (0, 0, 0, 0, 0), FeedbackConstraints(mutable_plants=(1,), budget=5), oracle_stats
    )
    assert isinstance(result, Infeasible)
    g = result.guidance
    assert g.reason == BUDGET_TOO_TIGHT
    assert g.suggested_budget == 6
    assert g.suggested_additions == ()


def test_widen_guidance_anchor(oracle, oracle_stats):
    cons = FeedbackConstraints(mutable_plants=(1,), ranges=((1, 0, 2),), budget=20)
    result = generate_counterfactual(oracle, (0, 0, 0, 0, 0), cons, oracle_stats)
    assert isinstance(result, Infeasible)
    g = result.guidance
    assert g.reason == NO_FLIP_IN_SUBSPACE
    assert g.suggested_additions == ()
    assert g.suggested_budget is None


def test_additions_guidance_anchor(oracle, oracle_stats):
    result = generate_counterfactual(
        oracle, (6, 0, 0, 0, 6), FeedbackConstraints(mutable_plants=(2,), budget=20), oracle_stats
    )
    assert isinstance(result, Infeasible)
    g = result.guidance
    assert g.reason == NO_FLIP_IN_SUBSPACE
    assert g.suggested_additions == (0, 1, 3, 4)
    assert g.suggested_budget is None


def test_additions_plus_budget_guidance_anchor(oracle, oracle_stats):
    result = generate_counterfactual(
        oracle, (0, 0, 0, 0, 0), FeedbackConstraints(mutable_plants=(2,), budget=3), oracle_stats
    )
    assert isinstance(result, Infeasible)
    g = result.guidance
    assert g.reason == BUDGET_TOO_TIGHT
    assert g.suggested_additions == (0, 1)
    assert g.suggested_budget == 6
    assert "P1" in g.message and "P2" in g.message


def test_every_guidance_is_verified_at_construction(oracle, oracle_stats):
    for original, cons, guidance in seeded_infeasible_instances(oracle, 25, 5):
        adjusted = apply_suggestion(cons, guidance, oracle.world)
        result = generate_counterfactual(oracle, original, adjusted, oracle_stats)
        assert isinstance(result, Counterfactual)
        assert result.predicted.label == IMPROVE


def test_apply_suggestion_semantics(oracle):
    cons = FeedbackConstraints(mutable_plants=(2,), ranges=((2, 0, 1),), budget=3, max_changes=2)
    g = GuidanceSuggestion(reason=BUDGET_TOO_TIGHT, suggested_additions=(0, 1), suggested_budget=6)
    adjusted = apply_suggestion(cons, g, oracle.world)
    assert adjusted.mutable_plants == (0, 1, 2)
    assert adjusted.ranges == ()  # widened to the full world ranges
    assert adjusted.budget == 6
    assert adjusted.max_changes == 2


def test_degenerate_model_yields_no_guidance(world, oracle_stats):
    hopeless = train(
        [LabeledSample((0, 0, 0, 0, 0), WORSEN, WORSEN)] * 10, world
    )
    result = generate_counterfactual(hopeless, (0, 0, 0, 0, 0), None, oracle_stats)
    assert isinstance(result, Infeasible)
    assert result.guidance is None
    with pytest.raises(DegenerateModelError):
        guide_constraints(hopeless, (0, 0, 0, 0, 0), default_constraints(world))


def test_goodness_of_regular_counterfactual(oracle, oracle_stats):
    cons = FeedbackConstraints(
        mutable_plants=(1, 3), ranges=((1, 0, 4), (3, 0, 3)), budget=20, max_changes=3
    )
    cf = generate_counterfactual(oracle, (1, 1, 0, 0, 2), cons, oracle_stats)
    good = goodness_of(cf, oracle, cons)
    assert good.validity is True
    assert good.proximity == 6
    assert good.sparsity == 1
    assert good.feasibility is True


def test_goodness_flags_identity_outside_budget(oracle):
    # an already-improving diet that the current budget could not afford
    cons = FeedbackConstraints(mutable_plants=(0, 1, 2, 3, 4), budget=20)
    cf = generate_counterfactual(oracle, (0, 4, 0, 4, 0), cons)
    assert cf.distance == 0
    good = goodness_of(cf, oracle, cons)
    assert good.validity is True
    assert good.feasibility is False  # costs 24, budget 20
    assert good.sparsity == 0


def test_goodness_flags_out_of_domain_changes(oracle, oracle_stats):
    wide = FeedbackConstraints(mutable_plants=(1,), budget=20)
    cf = generate_counterfactual(oracle, (0, 0, 0, 0, 0), wide, oracle_stats)
    narrow = FeedbackConstraints(mutable_plants=(1,), ranges=((1, 0, 1),), budget=20)
    assert goodness_of(cf, oracle, narrow).feasibility is False
    assert goodness_of(cf, oracle, wide).feasibility is True


def test_constraints_normalization():
    cons = FeedbackConstraints(mutable_plants=(3, 1, 3), ranges=((3, 0, 2), (1, 1, 4)))
    assert cons.mutable_plants == (1, 3)
    assert cons.ranges == ((1, 1, 4), (3, 0, 2))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mutable_plants": ()},
        {"mutable_plants": (9,)},
        {"mutable_plants": (1,), "ranges": ((2, 0, 3),)},  # range for non-mutable
        {"mutable_plants": (1,), "ranges": ((1, 3, 1),)},  # empty interval
        {"mutable_plants": (1,), "ranges": ((1, 0, 9),)},  # outside leaf bounds
        {"mutable_plants": (1,), "budget": -1},
        {"mutable_plants": (1,), "max_changes": 0},
        {"mutable_plants": (1,), "max_changes": 6},
    ],
)
def test_constraint_validation_rejects(world, kwargs):
    with pytest.raises(ConstraintError):
        FeedbackConstraints(**kwargs).validate(world)


def test_duplicate_ranges_rejected(world):
    cons = FeedbackConstraints(mutable_plants=(1,), ranges=((1, 0, 2), (1, 1, 3)))
    with pytest.raises(ConstraintError):
        cons.validate(world)


def test_default_constraints(world):
    cons = default_constraints(world)
    assert cons.mutable_plants == (0, 1, 2, 3, 4)
    assert cons.budget == 20
    assert cons.max_changes == 3
    assert cons.domain(2, world) == range(0, 7)


def test_constraints_dict_round_trip(world):
    cons = FeedbackConstraints(
        mutable_plants=(0, 2), ranges=((2, 1, 5),), budget=15, max_changes=2
    )
    assert constraints_from_dict(constraints_to_dict(cons), world) == cons


def test_constraints_from_dict_validates(world):
    doc = constraints_to_dict(FeedbackConstraints(mutable_plants=(0,)))
    doc["mutable_plants"] = []
    with pytest.raises(ConstraintError):
        constraints_from_dict(doc, world)


def test_counterfactual_dict_round_trip(oracle, oracle_stats):
    cf = generate_counterfactual(oracle, (1, 1, 0, 0, 2), None, oracle_stats)
    assert counterfactual_from_dict(counterfactual_to_dict(cf)) == cf


def test_guidance_dict_round_trip():
    g = GuidanceSuggestion(
        reason=BUDGET_TOO_TIGHT, suggested_additions=(0, 1), suggested_budget=6, message="m"
    )
    assert guidance_from_dict(guidance_to_dict(g)) == g


def test_seeded_instances_deterministic(world):
    a = seeded_instances(world, 50, 9)
    b = seeded_instances(world, 50, 9)
    assert a == b
    assert len(a) == 50
    for original, cons in a:
        world.check_diet(original)
        cons.validate(world)
        assert 6 <= cons.budget <= 24


def test_seeded_infeasible_instances_deterministic(oracle):
    a = seeded_infeasible_instances(oracle, 10, 5)
    b = seeded_infeasible_instances(oracle, 10, 5)
    assert a == b
    assert len(a) == 10
    for original, cons, guidance in a:
        assert isinstance(
            generate_counterfactual(oracle, original, cons), Infeasible
        )
        assert guidance is not None

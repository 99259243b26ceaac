"""Constraint-respecting counterfactual search with guidance on failure.

Given a diet the model rejects, find the cheapest alternative the model
accepts, restricted to the plants, ranges, budget, and change count the
learner has allowed. When that subspace holds no accepted diet, diagnose why
and return a suggestion that provably restores feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional, Sequence

from .predictor import (
    PredictionResult,
    TrainedModel,
    compile_predictor,
    predict,
)
from .world import IMPROVE, Diet, WorldConfig, diet_cost

NO_FLIP_IN_SUBSPACE = "NO_FLIP_IN_SUBSPACE"
BUDGET_TOO_TIGHT = "BUDGET_TOO_TIGHT"

HINT_TEMPLATE = (
    "For plant {name}, healthy diets in our data typically use "
    "between {q25} and {q75} leaves."
)


class ConstraintError(ValueError):
    """Feedback constraints fail validation."""


class DegenerateModelError(RuntimeError):
    """The model accepts no diet at all, so no guidance can help."""


@dataclass(frozen=True)
class FeedbackConstraints:
    """What the learner allows the explainer to touch.

    ranges holds (plant, lo, hi) triples for mutable plants; a mutable plant
    without an entry gets its full world range. A range that excludes the
    current value forces that plant to change in any suggestion.
    """

    mutable_plants: tuple[int, ...]
    ranges: tuple[tuple[int, int, int], ...] = ()
    budget: int = 20
    max_changes: int = 3

    def __post_init__(self):
        object.__setattr__(
            self, "mutable_plants", tuple(sorted(set(self.mutable_plants)))
        )
        object.__setattr__(
            self, "ranges", tuple(sorted(tuple(r) for r in self.ranges))
        )

    def validate(self, world: WorldConfig) -> None:
        if not self.mutable_plants:
            raise ConstraintError("mutable plant set is empty")
        for i in self.mutable_plants:
            if not (0 <= i < world.n_plants):
                raise ConstraintError(f"mutable plant index {i} out of range")
        seen = set()
        for plant, lo, hi in self.ranges:
            if plant in seen:
                raise ConstraintError(f"duplicate range for plant {plant}")
            seen.add(plant)
            if plant not in self.mutable_plants:
                raise ConstraintError(f"range given for non-mutable plant {plant}")
            pl = world.plants[plant]
            if lo > hi:
                raise ConstraintError(f"empty range [{lo}, {hi}] for plant {plant}")
            if lo < pl.leaf_min or hi > pl.leaf_max:
                raise ConstraintError(
                    f"range [{lo}, {hi}] outside [{pl.leaf_min}, {pl.leaf_max}]"
                    f" for plant {plant}"
                )
        if self.budget < 0:
            raise ConstraintError(f"budget must be >= 0, got {self.budget}")
        if not (1 <= self.max_changes <= world.n_plants):
            raise ConstraintError(
                f"max_changes must be in [1, {world.n_plants}], got {self.max_changes}"
            )

    def domain(self, plant: int, world: WorldConfig) -> range:
        """Allowed values for a mutable plant (declared range or full range)."""
        for p, lo, hi in self.ranges:
            if p == plant:
                return range(lo, hi + 1)
        pl = world.plants[plant]
        return range(pl.leaf_min, pl.leaf_max + 1)


def default_constraints(world: WorldConfig) -> FeedbackConstraints:
    """All plants mutable, full ranges, round budget, up to three changes."""
    return FeedbackConstraints(
        mutable_plants=tuple(range(world.n_plants)),
        ranges=(),
        budget=world.round_budget,
        max_changes=min(3, world.n_plants),
    )


@dataclass(frozen=True)
class DistributionHint:
    plant: int
    q25: int
    q75: int
    text: str


@dataclass(frozen=True)
class Counterfactual:
    original: Diet
    suggested: Diet
    distance: int
    changed_plants: tuple[tuple[int, int, int], ...]  # (plant, old, new)
    predicted: PredictionResult
    hints: tuple[DistributionHint, ...] = ()


@dataclass(frozen=True)
class GuidanceSuggestion:
    reason: str
    suggested_additions: tuple[int, ...] = ()
    suggested_budget: Optional[int] = None
    message: str = ""


@dataclass(frozen=True)
class Infeasible:
    """Search failed; guidance is None only when the model is degenerate."""

    guidance: Optional[GuidanceSuggestion]


@dataclass(frozen=True)
class Goodness:
    validity: bool
    proximity: int
    sparsity: int
    feasibility: bool


def _make_hints(
    changed: Sequence[tuple[int, int, int]],
    stats: Optional[Sequence[dict]],
    world: WorldConfig,
) -> tuple[DistributionHint, ...]:
    if not stats:
        return ()
    by_plant = {s["plant"]: s for s in stats}
    hints = []
    for plant, _, _ in changed:
        s = by_plant.get(plant)
        if s is None:
            continue
        text = HINT_TEMPLATE.format(
            name=world.plants[plant].display_name, q25=s["q25"], q75=s["q75"]
        )
        hints.append(
            DistributionHint(plant=plant, q25=s["q25"], q75=s["q75"], text=text)
        )
    return tuple(hints)


def _candidate_key(diet: Diet, original: Diet, world: WorldConfig):
    """Total order shared by both searchers: distance, sparsity, then diet."""
    changed = [i for i in range(len(diet)) if diet[i] != original[i]]
    dist = sum(world.costs[i] * abs(diet[i] - original[i]) for i in changed)
    return dist, len(changed), diet


def _build_counterfactual(
    model: TrainedModel,
    original: Diet,
    suggested: Diet,
    stats: Optional[Sequence[dict]],
) -> Counterfactual:
    world = model.world
    changed = tuple(
        (i, original[i], suggested[i])
        for i in range(len(original))
        if suggested[i] != original[i]
    )
    dist = sum(world.costs[i] * abs(new - old) for i, old, new in changed)
    return Counterfactual(
        original=original,
        suggested=suggested,
        distance=dist,
        changed_plants=changed,
        predicted=predict(model, suggested),
        hints=_make_hints(changed, stats, world),
    )


def generate_counterfactual(
    model: TrainedModel,
    original: Sequence[int],
    constraints: Optional[FeedbackConstraints] = None,
    stats: Optional[Sequence[dict]] = None,
) -> Counterfactual | Infeasible:
    """Distance-minimal accepted diet within the constraints, or guidance.

    Search is staged by change count: all single-plant edits, then pairs, then
    triples up to max_changes. A later stage is entered only when the sum of
    the cheapest per-plant edits could still beat the incumbent, so the result
    equals exhaustive enumeration under the shared tie-break.
    """
    world = model.world
    orig = world.check_diet(original)
    cons = constraints if constraints is not None else default_constraints(world)
    cons.validate(world)

    first = predict(model, orig)
    if first.label == IMPROVE:
        return Counterfactual(
            original=orig,
            suggested=orig,
            distance=0,
            changed_plants=(),
            predicted=first,
            hints=(),
        )

    label_of = compile_predictor(model)
    costs = world.costs
    base_cost = diet_cost(orig, world)

    # per-plant edit options: (new value, weighted distance), cheapest first
    options: dict[int, list[tuple[int, int]]] = {}
    forced: list[int] = []
    for i in cons.mutable_plants:
        dom = cons.domain(i, world)
        if orig[i] not in dom:
            forced.append(i)
        opts = [(v, costs[i] * abs(v - orig[i])) for v in dom if v != orig[i]]
        if opts:
            options[i] = opts
    free = [i for i in options if i not in forced]
    forced_dist = sum(min(d for _, d in options[i]) for i in forced)
    free_min = sorted(min(d for _, d in options[i]) for i in free)

    best: Optional[tuple[int, int, Diet]] = None
    if len(forced) <= cons.max_changes:
        for k in range(max(1, len(forced)), cons.max_changes + 1):
            extra = k - len(forced)
            if extra > len(free):
                break
            bound = forced_dist + sum(free_min[:extra])
            if best is not None and bound >= best[0]:
                break
            for chosen_free in combinations(free, extra):
                subset = sorted(forced + list(chosen_free))
                for assignment in product(*(options[i] for i in subset)):
                    dist = sum(d for _, d in assignment)
                    if best is not None and dist > best[0]:
                        continue
                    diet = list(orig)
                    cost = base_cost
                    for i, (v, _) in zip(subset, assignment):
                        cost += costs[i] * (v - orig[i])
                        diet[i] = v
                    if cost > cons.budget:
                        continue
                    diet_t = tuple(diet)
                    key = (dist, k, diet_t)
                    if best is not None and key >= best:
                        continue
                    if label_of(diet_t) == IMPROVE:
                        best = key

    if best is None:
        try:
            guidance = guide_constraints(model, orig, cons)
        except DegenerateModelError:
            return Infeasible(guidance=None)
        return Infeasible(guidance=guidance)
    return _build_counterfactual(model, orig, best[2], stats)


def brute_force_optimal(
    model: TrainedModel,
    original: Sequence[int],
    constraints: Optional[FeedbackConstraints] = None,
    stats: Optional[Sequence[dict]] = None,
) -> Counterfactual | Infeasible:
    """Exhaustive reference search over the whole constrained subgrid."""
    world = model.world
    orig = world.check_diet(original)
    cons = constraints if constraints is not None else default_constraints(world)
    cons.validate(world)

    size = 1
    for i in cons.mutable_plants:
        size *= len(cons.domain(i, world))
    if size > 10**6:
        raise ConstraintError(f"constrained subspace too large to enumerate ({size})")

    first = predict(model, orig)
    if first.label == IMPROVE:
        return Counterfactual(
            original=orig,
            suggested=orig,
            distance=0,
            changed_plants=(),
            predicted=first,
            hints=(),
        )

    label_of = compile_predictor(model)
    mutable = list(cons.mutable_plants)
    best: Optional[tuple[int, int, Diet]] = None
    for combo in product(*(cons.domain(i, world) for i in mutable)):
        diet = list(orig)
        for i, v in zip(mutable, combo):
            diet[i] = v
        diet_t = tuple(diet)
        key = _candidate_key(diet_t, orig, world)
        if key[1] == 0 or key[1] > cons.max_changes:
            continue
        if best is not None and key >= best:
            continue
        if diet_cost(diet_t, world) > cons.budget:
            continue
        if label_of(diet_t) == IMPROVE:
            best = key

    if best is None:
        try:
            guidance = guide_constraints(model, orig, cons)
        except DegenerateModelError:
            return Infeasible(guidance=None)
        return Infeasible(guidance=guidance)
    return _build_counterfactual(model, orig, best[2], stats)


def _min_flip_budget(
    model: TrainedModel,
    original: Diet,
    mutable: Sequence[int],
    max_changes: int,
) -> Optional[int]:
    """Cheapest accepted diet (full ranges over mutable, <= max_changes edits).

    Returns the diet's total time cost, the minimal budget that admits a flip,
    or None when the subspace holds no accepted diet at all.
    """
    world = model.world
    label_of = compile_predictor(model)
    mutable = sorted(mutable)
    best: Optional[int] = None
    domains = [
        range(world.plants[i].leaf_min, world.plants[i].leaf_max + 1) for i in mutable
    ]
    for combo in product(*domains):
        changed = sum(1 for i, v in zip(mutable, combo) if v != original[i])
        if changed == 0 or changed > max_changes:
            continue
        diet = list(original)
        for i, v in zip(mutable, combo):
            diet[i] = v
        diet_t = tuple(diet)
        if label_of(diet_t) != IMPROVE:
            continue
        cost = diet_cost(diet_t, world)
        if best is None or cost < best:
            best = cost
    return best


def apply_suggestion(
    constraints: FeedbackConstraints,
    suggestion: GuidanceSuggestion,
    world: WorldConfig,
) -> FeedbackConstraints:
    """Constraints after the learner accepts the guidance.

    The mutable set grows by the suggested additions, declared ranges widen to
    full, and the budget rises when one was suggested; max_changes is kept.
    """
    return FeedbackConstraints(
        mutable_plants=tuple(
            sorted(set(constraints.mutable_plants) | set(suggestion.suggested_additions))
        ),
        ranges=(),
        budget=(
            suggestion.suggested_budget
            if suggestion.suggested_budget is not None
            else constraints.budget
        ),
        max_changes=constraints.max_changes,
    )


def _names(world: WorldConfig, plants: Sequence[int]) -> str:
    return ", ".join(world.plants[i].display_name for i in plants)


def guide_constraints(
    model: TrainedModel,
    original: Sequence[int],
    constraints: FeedbackConstraints,
) -> GuidanceSuggestion:
    """Diagnose an infeasible search and suggest a fix, cheapest intent first.

    Tries widening the declared ranges, then raising the budget, then growing
    the mutable set plant by plant in index order. The returned suggestion is
    re-checked by running the search on the adjusted constraints.
    """
    world = model.world
    orig = world.check_diet(original)
    constraints.validate(world)
    mutable = list(constraints.mutable_plants)

    def verified(s: GuidanceSuggestion) -> GuidanceSuggestion:
        adjusted = apply_suggestion(constraints, s, world)
        result = generate_counterfactual(model, orig, adjusted)
        if not isinstance(result, Counterfactual):
            raise DegenerateModelError(
                "guidance verification failed; no flip in adjusted constraints"
            )
        return s

    min_cost = _min_flip_budget(model, orig, mutable, constraints.max_changes)
    if min_cost is not None:
        if min_cost <= constraints.budget:
            return verified(
                GuidanceSuggestion(
                    reason=NO_FLIP_IN_SUBSPACE,
                    message=(
                        "No better diet fits the ranges you allowed for "
                        f"{_names(world, mutable)}. Allowing their full leaf "
                        "ranges is enough to find one."
                    ),
                )
            )
        return verified(
            GuidanceSuggestion(
                reason=BUDGET_TOO_TIGHT,
                suggested_budget=min_cost,
                message=(
                    "A better diet exists for the plants you allowed, but it "
                    f"needs {min_cost} time units; your budget is "
                    f"{constraints.budget}."
                ),
            )
        )

    others = [i for i in range(world.n_plants) if i not in constraints.mutable_plants]
    for j in range(1, len(others) + 1):
        adds = others[:j]
        min_cost = _min_flip_budget(
            model, orig, mutable + adds, constraints.max_changes
        )
        if min_cost is not None and min_cost <= constraints.budget:
            return verified(
                GuidanceSuggestion(
                    reason=NO_FLIP_IN_SUBSPACE,
                    suggested_additions=tuple(adds),
                    message=(
                        "No better diet exists while changing only "
                        f"{_names(world, mutable)}. Also allowing "
                        f"{_names(world, adds)} makes one reachable."
                    ),
                )
            )
    for j in range(1, len(others) + 1):
        adds = others[:j]
        min_cost = _min_flip_budget(
            model, orig, mutable + adds, constraints.max_changes
        )
        if min_cost is not None:
            return verified(
                GuidanceSuggestion(
                    reason=BUDGET_TOO_TIGHT,
                    suggested_additions=tuple(adds),
                    suggested_budget=min_cost,
                    message=(
                        "Reaching a better diet needs both more plants "
                        f"({_names(world, adds)}) and a budget of "
                        f"{min_cost} time units."
                    ),
                )
            )
    raise DegenerateModelError(
        "model never labels IMPROVE within the change cap; no guidance possible"
    )


def goodness_of(
    cf: Counterfactual,
    model: TrainedModel,
    constraints: Optional[FeedbackConstraints] = None,
) -> Goodness:
    """Recomputed quality facts for one counterfactual."""
    world = model.world
    cons = constraints if constraints is not None else default_constraints(world)
    validity = predict(model, cf.suggested).label == IMPROVE
    feasible = (
        len(cf.changed_plants) <= cons.max_changes
        and diet_cost(cf.suggested, world) <= cons.budget
    )
    if feasible:
        for plant, _, new in cf.changed_plants:
            if plant not in cons.mutable_plants or new not in cons.domain(plant, world):
                feasible = False
                break
    return Goodness(
        validity=validity,
        proximity=cf.distance,
        sparsity=len(cf.changed_plants),
        feasibility=feasible,
    )


# --- seeded instance generation (verification harness and CLI check) ---


def seeded_instances(
    world: WorldConfig,
    n: int,
    seed: int,
    mutable_sizes: Optional[Sequence[int]] = None,
    budget_lo: int = 6,
    budget_hi: int = 24,
    max_changes_choices: Sequence[int] = (1, 2, 3),
    subrange_prob: float = 0.5,
) -> list[tuple[Diet, FeedbackConstraints]]:
    """n random (diet, constraints) pairs from one seed, platform-stable."""
    from .rng import SplitMix64  # local import keeps module deps one-way

    rng = SplitMix64(seed)
    sizes = list(mutable_sizes) if mutable_sizes else list(range(1, world.n_plants + 1))
    out = []
    for _ in range(n):
        original = tuple(
            rng.randint(pl.leaf_min, pl.leaf_max) for pl in world.plants
        )
        m = rng.choice(sizes)
        # partial Fisher-Yates draw of m distinct plant indices
        pool = list(range(world.n_plants))
        for j in range(m):
            k = j + rng.below(len(pool) - j)
            pool[j], pool[k] = pool[k], pool[j]
        mutable = tuple(sorted(pool[:m]))
        ranges = []
        for i in mutable:
            if rng.random() < subrange_prob:
                pl = world.plants[i]
                lo = rng.randint(pl.leaf_min, pl.leaf_max)
                hi = rng.randint(lo, pl.leaf_max)
                ranges.append((i, lo, hi))
        cons = FeedbackConstraints(
            mutable_plants=mutable,
            ranges=tuple(ranges),
            budget=rng.randint(budget_lo, budget_hi),
            max_changes=rng.choice(list(max_changes_choices)),
        )
        out.append((original, cons))
    return out


def seeded_infeasible_instances(
    model: TrainedModel, n: int, seed: int, max_attempts: int = 100_000
) -> list[tuple[Diet, FeedbackConstraints, GuidanceSuggestion]]:
    """n instances where the search fails but guidance exists.

    Small mutable sets and tight budgets make failures common; max_changes
    stays >= 2 so a flip always exists somewhere and guidance can succeed.
    """
    from .rng import SplitMix64, derive_seed

    world = model.world
    found = []
    batch = 0
    while len(found) < n:
        if batch * 50 > max_attempts:
            raise ConstraintError(
                f"could not find {n} infeasible instances in {max_attempts} attempts"
            )
        instances = seeded_instances(
            world,
            50,
            derive_seed(seed, batch),
            mutable_sizes=(1, 2),
            budget_lo=3,
            budget_hi=12,
            max_changes_choices=(2, 3),
        )
        batch += 1
        for original, cons in instances:
            result = generate_counterfactual(model, original, cons)
            if isinstance(result, Infeasible) and result.guidance is not None:
                found.append((original, cons, result.guidance))
                if len(found) == n:
                    break
    return found


# --- JSON forms (event payloads and API bodies) ---


def constraints_to_dict(cons: FeedbackConstraints) -> dict:
    return {
        "mutable_plants": list(cons.mutable_plants),
        "ranges": [{"plant": p, "lo": lo, "hi": hi} for p, lo, hi in cons.ranges],
        "budget": cons.budget,
        "max_changes": cons.max_changes,
    }


def constraints_from_dict(doc: dict, world: WorldConfig) -> FeedbackConstraints:
    try:
        cons = FeedbackConstraints(
            mutable_plants=tuple(doc["mutable_plants"]),
            ranges=tuple(
                (r["plant"], r["lo"], r["hi"]) for r in doc.get("ranges", [])
            ),
            budget=int(doc.get("budget", world.round_budget)),
            max_changes=int(doc.get("max_changes", min(3, world.n_plants))),
        )
    except (KeyError, TypeError) as exc:
        raise ConstraintError(f"malformed constraints: {exc}") from exc
    cons.validate(world)
    return cons


def counterfactual_to_dict(cf: Counterfactual) -> dict:
    return {
        "original": list(cf.original),
        "suggested": list(cf.suggested),
        "distance": cf.distance,
        "changed_plants": [
            {"plant": p, "old": old, "new": new} for p, old, new in cf.changed_plants
        ],
        "predicted": {"label": cf.predicted.label, "score": cf.predicted.score},
        "hints": [
            {"plant": h.plant, "q25": h.q25, "q75": h.q75, "text": h.text}
            for h in cf.hints
        ],
    }


def counterfactual_from_dict(doc: dict) -> Counterfactual:
    return Counterfactual(
        original=tuple(doc["original"]),
        suggested=tuple(doc["suggested"]),
        distance=doc["distance"],
        changed_plants=tuple(
            (c["plant"], c["old"], c["new"]) for c in doc["changed_plants"]
        ),
        predicted=PredictionResult(
            label=doc["predicted"]["label"], score=doc["predicted"]["score"]
        ),
        hints=tuple(
            DistributionHint(plant=h["plant"], q25=h["q25"], q75=h["q75"], text=h["text"])
            for h in doc["hints"]
        ),
    )


def guidance_to_dict(g: GuidanceSuggestion) -> dict:
    return {
        "reason": g.reason,
        "suggested_additions": list(g.suggested_additions),
        "suggested_budget": g.suggested_budget,
        "message": g.message,
    }


def guidance_from_dict(doc: dict) -> GuidanceSuggestion:
    return GuidanceSuggestion(
        reason=doc["reason"],
        suggested_additions=tuple(doc["suggested_additions"]),
        suggested_budget=doc["suggested_budget"],
        message=doc["message"],
    )

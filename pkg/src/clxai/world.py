"""Plant world: ground-truth fitness rule, leaf costs, synthetic datasets.

A diet is a tuple of per-plant leaf counts. The hidden rule scores a diet with
a linear gain plus one pairwise interaction; a diet labels IMPROVE when the
gain reaches the world's threshold. Everything here is pure or seed-driven.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .rng import SplitMix64

IMPROVE = "IMPROVE"
WORSEN = "WORSEN"

Diet = tuple[int, ...]


class WorldError(ValueError):
    """Invalid world configuration or out-of-range diet."""


@dataclass(frozen=True)
class PlantConfig:
    plant_id: int
    display_name: str
    leaf_cost: int
    leaf_min: int = 0
    leaf_max: int = 6

    def __post_init__(self):
        if self.leaf_cost < 1:
            raise WorldError(f"leaf_cost must be >= 1, got {self.leaf_cost}")
        if self.leaf_min > self.leaf_max:
            raise WorldError(f"leaf_min {self.leaf_min} > leaf_max {self.leaf_max}")


@dataclass(frozen=True)
class WorldConfig:
    plants: tuple[PlantConfig, ...]
    gain_weights: tuple[float, ...]
    interaction: tuple[tuple[int, int], float]
    improve_threshold: float
    label_noise: float
    round_budget: int

    def __post_init__(self):
        p = len(self.plants)
        if p == 0:
            raise WorldError("world needs at least one plant")
        if tuple(pl.plant_id for pl in self.plants) != tuple(range(p)):
            raise WorldError("plant_ids must be 0..P-1 in order")
        if len(self.gain_weights) != p:
            raise WorldError("gain_weights length must match plant count")
        (a, b), _ = self.interaction
        if not (0 <= a < p and 0 <= b < p):
            raise WorldError("interaction pair out of range")
        if not (0 <= self.label_noise < 0.5):
            raise WorldError(f"label_noise must be in [0, 0.5), got {self.label_noise}")
        if self.round_budget < min(pl.leaf_cost for pl in self.plants):
            raise WorldError("round_budget affords no leaf at all")

    @property
    def n_plants(self) -> int:
        return len(self.plants)

    @property
    def costs(self) -> tuple[int, ...]:
        return tuple(pl.leaf_cost for pl in self.plants)

    def check_diet(self, diet: Sequence[int]) -> Diet:
        """Validate ranges and return the diet as a tuple."""
        if len(diet) != self.n_plants:
            raise WorldError(f"diet has {len(diet)} entries, world has {self.n_plants} plants")
        for pl, v in zip(self.plants, diet):
            if not isinstance(v, int) or isinstance(v, bool):
                raise WorldError(f"leaf count for {pl.display_name} must be an integer")
            if not (pl.leaf_min <= v <= pl.leaf_max):
                raise WorldError(
                    f"{pl.display_name}={v} outside [{pl.leaf_min}, {pl.leaf_max}]"
                )
        return tuple(diet)

    def grid_size(self) -> int:
        n = 1
        for pl in self.plants:
            n *= pl.leaf_max - pl.leaf_min + 1
        return n

    def iter_diets(self) -> Iterable[Diet]:
        """Enumerate the full diet grid in lexicographic order."""

        def rec(i: int, prefix: tuple[int, ...]):
            if i == self.n_plants:
                yield prefix
                return
            pl = self.plants[i]
            for v in range(pl.leaf_min, pl.leaf_max + 1):
                yield from rec(i + 1, prefix + (v,))

        yield from rec(0, ())


@dataclass(frozen=True)
class LabeledSample:
    diet: Diet
    label: str
    clean_label: str


def default_world() -> WorldConfig:
    """Five plants, costs 1..5, budget 20, one helpful interaction, one distractor."""
    names = ("P1", "P2", "P3", "P4", "P5")
    plants = tuple(
        PlantConfig(plant_id=i, display_name=names[i], leaf_cost=i + 1) for i in range(5)
    )
    return WorldConfig(
        plants=plants,
        gain_weights=(-2.0, 3.0, 0.0, 2.0, -1.0),
        interaction=((1, 3), 0.5),
        improve_threshold=8.0,
        label_noise=0.05,
        round_budget=20,
    )


def ground_truth_gain(diet: Sequence[int], world: WorldConfig) -> float:
    d = world.check_diet(diet)
    (a, b), kappa = world.interaction
    g = sum(w * x for w, x in zip(world.gain_weights, d))
    return g + kappa * d[a] * d[b]


def ground_truth_label(diet: Sequence[int], world: WorldConfig) -> str:
    return IMPROVE if ground_truth_gain(diet, world) >= world.improve_threshold else WORSEN


def diet_cost(diet: Sequence[int], world: WorldConfig) -> int:
    d = world.check_diet(diet)
    return sum(c * x for c, x in zip(world.costs, d))


def generate_dataset(world: WorldConfig, n: int, seed: int) -> list[LabeledSample]:
    """n uniform grid samples with labels noised at world.label_noise.

    Each sample consumes a fixed block of draws (P leaves + 1 noise uniform),
    so a shorter run is always a prefix of a longer one with the same seed.
    """
    if n < 1:
        raise WorldError(f"n must be >= 1, got {n}")
    rng = SplitMix64(seed)
    out: list[LabeledSample] = []
    for _ in range(n):
        diet = tuple(rng.randint(pl.leaf_min, pl.leaf_max) for pl in world.plants)
        clean = ground_truth_label(diet, world)
        flip = rng.random() < world.label_noise
        label = (WORSEN if clean == IMPROVE else IMPROVE) if flip else clean
        out.append(LabeledSample(diet=diet, label=label, clean_label=clean))
    return out


def sample_initial_diet(
    world: WorldConfig, predict_label: Callable[[Diet], str], seed: int
) -> Diet:
    """Uniform in-range diet redrawn until predicted WORSEN and affordable."""
    rng = SplitMix64(seed)
    for _ in range(10_000):
        diet = tuple(rng.randint(pl.leaf_min, pl.leaf_max) for pl in world.plants)
        if predict_label(diet) == WORSEN and diet_cost(diet, world) <= world.round_budget:
            return diet
    raise WorldError("no affordable WORSEN diet found in 10000 draws; world degenerate")


def world_to_dict(world: WorldConfig) -> dict:
    return {
        "plants": [
            {
                "plant_id": pl.plant_id,
                "display_name": pl.display_name,
                "leaf_cost": pl.leaf_cost,
                "leaf_min": pl.leaf_min,
                "leaf_max": pl.leaf_max,
            }
            for pl in world.plants
        ],
        "gain_weights": list(world.gain_weights),
        "interaction": {"pair": list(world.interaction[0]), "coefficient": world.interaction[1]},
        "improve_threshold": world.improve_threshold,
        "label_noise": world.label_noise,
        "round_budget": world.round_budget,
    }


def world_from_dict(doc: dict) -> WorldConfig:
    try:
        plants = tuple(
            PlantConfig(
                plant_id=p["plant_id"],
                display_name=p["display_name"],
                leaf_cost=p["leaf_cost"],
                leaf_min=p.get("leaf_min", 0),
                leaf_max=p.get("leaf_max", 6),
            )
            for p in doc["plants"]
        )
        inter = doc["interaction"]
        return WorldConfig(
            plants=plants,
            gain_weights=tuple(float(w) for w in doc["gain_weights"]),
            interaction=((inter["pair"][0], inter["pair"][1]), float(inter["coefficient"])),
            improve_threshold=float(doc["improve_threshold"]),
            label_noise=float(doc["label_noise"]),
            round_budget=int(doc["round_budget"]),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise WorldError(f"malformed world document: {exc}") from exc


def save_world(world: WorldConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(world_to_dict(world), fh, indent=2)
        fh.write("\n")


def load_world(path: str) -> WorldConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return world_from_dict(json.load(fh))


def dataset_to_csv(samples: Sequence[LabeledSample], path: str) -> None:
    if not samples:
        raise WorldError("cannot export an empty dataset")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"p{i + 1}" for i in range(len(samples[0].diet))] + ["label", "clean_label"]
        )
        for s in samples:
            writer.writerow(list(s.diet) + [s.label, s.clean_label])

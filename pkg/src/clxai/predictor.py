"""Fitness classifier: a greedy Gini decision tree, plus an exact oracle kind.

The tree splits on half-integer thresholds so integer leaf counts never sit on
a boundary. Impurity comparisons use exact rationals; float rounding must not
influence structure, or retraining would not be byte-reproducible.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .world import (
    IMPROVE,
    WORSEN,
    Diet,
    LabeledSample,
    WorldConfig,
    generate_dataset,
    ground_truth_label,
    world_from_dict,
    world_to_dict,
)

DECISION_TREE = "DECISION_TREE"
ORACLE = "ORACLE"


class PredictorError(ValueError):
    """Bad training input or malformed model document."""


@dataclass(frozen=True)
class PredictionResult:
    label: str
    score: float


@dataclass(frozen=True)
class TreeNode:
    """Internal split (plant, threshold, children) or leaf (label, score)."""

    plant: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    label: Optional[str] = None
    score: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    world: WorldConfig
    tree: Optional[TreeNode] = None
    train_meta: Optional[dict] = None

    def predict(self, diet: Sequence[int]) -> PredictionResult:
        return predict(self, diet)

    def predict_label(self, diet: Sequence[int]) -> str:
        return predict(self, diet).label


def oracle_model(world: WorldConfig) -> TrainedModel:
    return TrainedModel(kind=ORACLE, world=world)


def _leaf(n_improve: int, n_total: int) -> TreeNode:
    # integer rule keeps the label/score relation exact: IMPROVE iff 2i >= n
    label = IMPROVE if 2 * n_improve >= n_total else WORSEN
    return TreeNode(label=label, score=n_improve / n_total)


def _gini_split_cost(counts: tuple[int, int, int, int]) -> Fraction:
    """Weighted Gini of a binary split, scaled by total; exact rational.

    counts = (left_improve, left_total, right_improve, right_total).
    Lower is better; the constant scale factor cancels in comparisons.
    """
    li, ln, ri, rn = counts
    cost = Fraction(0)
    if ln:
        cost += Fraction(2 * li * (ln - li), ln)
    if rn:
        cost += Fraction(2 * ri * (rn - ri), rn)
    return cost


def _grow(
    samples: list[LabeledSample],
    world: WorldConfig,
    depth: int,
    depth_limit: int,
    min_leaf: int,
) -> TreeNode:
    n = len(samples)
    n_improve = sum(1 for s in samples if s.label == IMPROVE)
    if n_improve == 0 or n_improve == n or depth >= depth_limit:
        return _leaf(n_improve, n)

    best = None  # (cost, plant, cut); first strict minimum wins ties
    for plant in range(world.n_plants):
        totals = Counter(s.diet[plant] for s in samples)
        improves = Counter(s.diet[plant] for s in samples if s.label == IMPROVE)
        vmin, vmax = min(totals), max(totals)
        if vmin == vmax:
            continue
        # candidate thresholds: every half-integer strictly inside [vmin, vmax]
        ln = li = 0
        for cut in range(vmin, vmax):
            ln += totals.get(cut, 0)
            li += improves.get(cut, 0)
            if ln < min_leaf or n - ln < min_leaf:
                continue
            cost = _gini_split_cost((li, ln, n_improve - li, n - ln))
            if best is None or cost < best[0]:
                best = (cost, plant, cut)

    if best is None:
        return _leaf(n_improve, n)
    _, plant, cut = best
    left = [s for s in samples if s.diet[plant] <= cut]
    right = [s for s in samples if s.diet[plant] > cut]
    return TreeNode(
        plant=plant,
        threshold=cut + 0.5,
        left=_grow(left, world, depth + 1, depth_limit, min_leaf),
        right=_grow(right, world, depth + 1, depth_limit, min_leaf),
    )


def train(
    samples: Sequence[LabeledSample],
    world: WorldConfig,
    depth_limit: int = 8,
    min_leaf: int = 5,
    seed: int = 0,
) -> TrainedModel:
    """Grow a Gini tree; deterministic, ties to lowest plant then lowest threshold."""
    if not samples:
        raise PredictorError("cannot train on an empty sample list")
    if depth_limit < 1:
        raise PredictorError(f"depth_limit must be >= 1, got {depth_limit}")
    tree = _grow(list(samples), world, 0, depth_limit, min_leaf)
    model = TrainedModel(kind=DECISION_TREE, world=world, tree=tree)
    correct = sum(
        1 for s in samples if predict(model, s.diet).label == s.label
    )
    meta = {
        "seed": seed,
        "n_samples": len(samples),
        "depth_limit": depth_limit,
        "min_leaf": min_leaf,
        "train_accuracy": correct / len(samples),
    }
    return TrainedModel(kind=DECISION_TREE, world=world, tree=tree, train_meta=meta)


def predict(model: TrainedModel, diet: Sequence[int]) -> PredictionResult:
    d = model.world.check_diet(diet)
    if model.kind == ORACLE:
        label = ground_truth_label(d, model.world)
        return PredictionResult(label=label, score=1.0 if label == IMPROVE else 0.0)
    node = model.tree
    while not node.is_leaf:
        node = node.left if d[node.plant] <= node.threshold else node.right
    return PredictionResult(label=node.label, score=node.score)


def compile_predictor(model: TrainedModel):
    """Return a fast diet -> label closure for hot loops (no range checks)."""
    if model.kind == ORACLE:
        world = model.world
        (a, b), kappa = world.interaction
        weights = world.gain_weights
        threshold = world.improve_threshold

        def oracle_label(diet: Sequence[int]) -> str:
            g = sum(w * x for w, x in zip(weights, diet)) + kappa * diet[a] * diet[b]
            return IMPROVE if g >= threshold else WORSEN

        return oracle_label

    root = model.tree

    def tree_label(diet: Sequence[int]) -> str:
        node = root
        while node.label is None:
            node = node.left if diet[node.plant] <= node.threshold else node.right
        return node.label

    return tree_label


def evaluate(model: TrainedModel, samples: Sequence[LabeledSample]) -> dict:
    """Accuracy against noisy and clean labels, plus confusion counts vs label."""
    if not samples:
        raise PredictorError("cannot evaluate on an empty sample list")
    confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    correct = 0
    correct_clean = 0
    for s in samples:
        pred = predict(model, s.diet).label
        if pred == s.label:
            correct += 1
        if pred == s.clean_label:
            correct_clean += 1
        if pred == IMPROVE:
            confusion["tp" if s.label == IMPROVE else "fp"] += 1
        else:
            confusion["fn" if s.label == IMPROVE else "tn"] += 1
    n = len(samples)
    return {
        "accuracy": correct / n,
        "accuracy_vs_clean": correct_clean / n,
        "confusion": confusion,
        "n": n,
    }


def _nearest_rank(sorted_values: Sequence[int], p: float) -> int:
    """Nearest-rank quantile: value at 1-based index ceil(p * N)."""
    n = len(sorted_values)
    idx = max(1, min(n, math.ceil(p * n)))
    return sorted_values[idx - 1]


def class_distribution_stats(samples: Sequence[LabeledSample]) -> list[dict]:
    """Per-plant (q25, median, q75) of leaf counts over IMPROVE-labeled rows."""
    improve = [s for s in samples if s.label == IMPROVE]
    if not improve:
        raise PredictorError("no IMPROVE samples; cannot compute distribution hints")
    n_plants = len(improve[0].diet)
    stats = []
    for i in range(n_plants):
        values = sorted(s.diet[i] for s in improve)
        stats.append(
            {
                "plant": i,
                "q25": _nearest_rank(values, 0.25),
                "median": _nearest_rank(values, 0.50),
                "q75": _nearest_rank(values, 0.75),
            }
        )
    return stats


def stats_for_model(
    model: TrainedModel, default_n: int = 10_000, default_seed: int = 42
) -> list[dict]:
    """Distribution hints for a model, rebuilt from its recorded training run.

    Dataset generation consumes a fixed draw block per sample, so regenerating
    the first train_meta.n_samples samples with train_meta.seed reproduces the
    training set exactly; ORACLE models fall back to a default synthetic set.
    """
    meta = model.train_meta or {}
    n = meta.get("n_samples", default_n)
    seed = meta.get("seed", default_seed)
    samples = generate_dataset(model.world, n, seed)
    return class_distribution_stats(samples)


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"leaf": {"label": node.label, "score": node.score}}
    return {
        "plant": node.plant,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc: dict) -> TreeNode:
    if "leaf" in doc:
        return TreeNode(label=doc["leaf"]["label"], score=doc["leaf"]["score"])
    return TreeNode(
        plant=doc["plant"],
        threshold=doc["threshold"],
        left=_node_from_dict(doc["left"]),
        right=_node_from_dict(doc["right"]),
    )


def model_to_dict(model: TrainedModel) -> dict:
    doc = {"kind": model.kind, "world": world_to_dict(model.world)}
    if model.kind == DECISION_TREE:
        doc["tree"] = _node_to_dict(model.tree)
        doc["train_meta"] = model.train_meta
    return doc


def model_from_dict(doc: dict) -> TrainedModel:
    try:
        kind = doc["kind"]
        world = world_from_dict(doc["world"])
        if kind == ORACLE:
            return TrainedModel(kind=ORACLE, world=world)
        if kind == DECISION_TREE:
            return TrainedModel(
                kind=DECISION_TREE,
                world=world,
                tree=_node_from_dict(doc["tree"]),
                train_meta=doc.get("train_meta"),
            )
        raise PredictorError(f"unknown model kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise PredictorError(f"malformed model document: {exc}") from exc


def save_model(model: TrainedModel, path: str) -> None:
    """Write the model as canonical JSON (sorted keys, fixed separators)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))

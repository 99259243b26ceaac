"""Synthetic learners that play full sessions headlessly.

Policies range from ignoring explanations entirely to following every
suggestion, which is what makes the explanation effect measurable without
human subjects. Paired seeding gives compared policies identical worlds,
initial diets, probe sets, and decision-time streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .engine import (
    QUESTIONNAIRE,
    AWAITING_DIET,
    PROBES,
    SHOWING_EXPLANATION,
    SHOWING_OUTCOME,
    GameEvent,
    Session,
    SessionConfig,
    model_hash,
)
from .metrics import ols_slope
from .predictor import TrainedModel
from .rng import SplitMix64, derive_seed
from .world import IMPROVE, WORSEN, Diet, WorldConfig, diet_cost

RANDOM = "RANDOM"
GREEDY_COST = "GREEDY_COST"
CE_FOLLOWER = "CE_FOLLOWER"
NOISY_CE_FOLLOWER = "NOISY_CE_FOLLOWER"

DECISION_MS_MEDIAN = 5000.0
DECISION_MS_SIGMA = 0.5

# derive_seed labels for the per-session streams
_SEED_POLICY = 10
_SEED_TIMING = 11
_SEED_SURVEY = 12


class SimulatorError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerPolicy:
    kind: str
    noise: float = 0.0  # probability of ignoring a suggestion (noisy variant)

    def __post_init__(self):
        if self.kind not in (RANDOM, GREEDY_COST, CE_FOLLOWER, NOISY_CE_FOLLOWER):
            raise SimulatorError(f"unknown policy kind {self.kind!r}")
        if not (0.0 <= self.noise <= 1.0):
            raise SimulatorError(f"noise must be in [0, 1], got {self.noise}")


def parse_policy(text: str) -> LearnerPolicy:
    """CLI spelling: random | greedy | ce-follower | noisy:P."""
    if text == "random":
        return LearnerPolicy(RANDOM)
    if text == "greedy":
        return LearnerPolicy(GREEDY_COST)
    if text == "ce-follower":
        return LearnerPolicy(CE_FOLLOWER)
    if text.startswith("noisy:"):
        try:
            p = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise SimulatorError(f"bad noise level in {text!r}") from exc
        return LearnerPolicy(NOISY_CE_FOLLOWER, noise=p)
    raise SimulatorError(f"unknown policy {text!r}")


def _random_affordable_diet(world: WorldConfig, rng: SplitMix64) -> Diet:
    for _ in range(10_000):
        diet = tuple(rng.randint(pl.leaf_min, pl.leaf_max) for pl in world.plants)
        if diet_cost(diet, world) <= world.round_budget:
            return diet
    raise SimulatorError("no affordable diet found in 10000 draws")


def _greedy_diet(world: WorldConfig) -> Diet:
    """Most leaves the budget affords, filling cheapest plants first."""
    order = sorted(range(world.n_plants), key=lambda i: world.plants[i].leaf_cost)
    leaves = [0] * world.n_plants
    remaining = world.round_budget
    for i in order:
        pl = world.plants[i]
        take = min(pl.leaf_max - pl.leaf_min, remaining // pl.leaf_cost)
        leaves[i] = pl.leaf_min + take
        remaining -= take * pl.leaf_cost
    return tuple(leaves)


def _pick_diet(
    policy: LearnerPolicy, session: Session, rng: SplitMix64
) -> Diet:
    world = session.config.world
    if policy.kind == RANDOM:
        return _random_affordable_diet(world, rng)
    if policy.kind == GREEDY_COST:
        return _greedy_diet(world)
    pending = session.state.pending_explanations
    suggestion = pending[-1].suggested if pending else None
    if policy.kind == NOISY_CE_FOLLOWER:
        # one uniform per round decides follow vs wander
        wander = rng.random() < policy.noise
        if suggestion is not None and not wander:
            return suggestion
        return _random_affordable_diet(world, rng)
    # CE_FOLLOWER
    if suggestion is not None:
        return suggestion
    return _random_affordable_diet(world, rng)


def make_counter_clock(start: int = 1_000_000_000_000, step: int = 1000) -> Callable[[], int]:
    """Deterministic stand-in for wall time so logs are reproducible."""
    state = {"t": start - step}

    def clock() -> int:
        state["t"] += step
        return state["t"]

    return clock


def play_session(
    policy: LearnerPolicy,
    model: TrainedModel,
    session_seed: int,
    session_id: str,
    stats: Optional[list] = None,
    config_overrides: Optional[dict] = None,
    sink: Optional[Callable[[list[GameEvent]], None]] = None,
) -> Session:
    """One full session from creation to COMPLETED."""
    overrides = dict(config_overrides or {})
    config = SessionConfig(
        session_id=session_id,
        world=model.world,
        model_ref=model_hash(model),
        seed=session_seed,
        **overrides,
    )
    session = Session(
        config, model, stats=stats, clock=make_counter_clock(), sink=sink
    )
    policy_rng = SplitMix64(derive_seed(session_seed, _SEED_POLICY))
    timing_rng = SplitMix64(derive_seed(session_seed, _SEED_TIMING))
    survey_rng = SplitMix64(derive_seed(session_seed, _SEED_SURVEY))

    while session.state.phase == AWAITING_DIET:
        diet = _pick_diet(policy, session, policy_rng)
        decision_ms = timing_rng.lognormal_ms(DECISION_MS_MEDIAN, DECISION_MS_SIGMA)
        session.submit_round(diet, decision_ms)
        if session.state.phase in (SHOWING_OUTCOME, SHOWING_EXPLANATION):
            session.acknowledge()

    if session.state.phase == QUESTIONNAIRE:
        items = [survey_rng.randint(1, 5) for _ in range(8)]
        session.submit_questionnaire(items, free_text="")
    if session.state.phase == PROBES:
        answers = [
            survey_rng.choice((IMPROVE, WORSEN)) for _ in session.probe_diets()
        ]
        session.submit_probes(answers)
    return session


def run_policy(
    policy: LearnerPolicy,
    model: TrainedModel,
    n_sessions: int,
    seed: int,
    stats: Optional[list] = None,
    config_overrides: Optional[dict] = None,
    session_id_prefix: Optional[str] = None,
    sink_factory: Optional[Callable[[str], Callable[[list[GameEvent]], None]]] = None,
) -> list[Session]:
    """Play n sessions; session i uses derive_seed(seed, i) so runs pair up."""
    if n_sessions < 1:
        raise SimulatorError("n_sessions must be >= 1")
    prefix = session_id_prefix or policy.kind.lower().replace("_", "-")
    sessions = []
    for i in range(n_sessions):
        session_id = f"{prefix}-{seed:x}-{i:04d}"
        sink = sink_factory(session_id) if sink_factory else None
        sessions.append(
            play_session(
                policy,
                model,
                derive_seed(seed, i),
                session_id,
                stats=stats,
                config_overrides=config_overrides,
                sink=sink,
            )
        )
    return sessions


def _policy_summary(sessions: Sequence[Session]) -> dict:
    slopes = []
    finals = []
    for s in sessions:
        trajectory = [r.fitness_after for r in s.state.history]
        slopes.append(ols_slope(trajectory))
        finals.append(s.state.fitness)
    n = len(sessions)
    mean_slope = sum(slopes) / n
    mean_final = sum(finals) / n
    var_slope = sum((v - mean_slope) ** 2 for v in slopes) / n
    var_final = sum((v - mean_final) ** 2 for v in finals) / n
    return {
        "mean_slope": mean_slope,
        "std_slope": var_slope ** 0.5,
        "mean_final_fitness": mean_final,
        "std_final_fitness": var_final ** 0.5,
        "slopes": slopes,
        "final_fitness": finals,
    }


def compare_policies(
    policy_a: LearnerPolicy,
    policy_b: LearnerPolicy,
    model: TrainedModel,
    n: int,
    seed: int,
    stats: Optional[list] = None,
    config_overrides: Optional[dict] = None,
) -> dict:
    """Paired-seed comparison; session i of both arms shares its seed."""
    if n < 10:
        raise SimulatorError("comparison needs n >= 10")
    a = run_policy(
        policy_a, model, n, seed, stats=stats,
        config_overrides=config_overrides, session_id_prefix="a",
    )
    b = run_policy(
        policy_b, model, n, seed, stats=stats,
        config_overrides=config_overrides, session_id_prefix="b",
    )
    return {
        "n": n,
        "seed": seed,
        "policy_a": {"kind": policy_a.kind, "noise": policy_a.noise, **_policy_summary(a)},
        "policy_b": {"kind": policy_b.kind, "noise": policy_b.noise, **_policy_summary(b)},
    }

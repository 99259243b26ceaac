"""Round-based game sessions: state machine, event log, deterministic replay.

A Session wraps the live state machine and needs the model; replay() folds a
recorded event list back into the exact same SessionState without touching
the model, which is what makes logs self-contained study artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import uuid
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .explainer import (
    Counterfactual,
    FeedbackConstraints,
    GuidanceSuggestion,
    Infeasible,
    constraints_from_dict,
    constraints_to_dict,
    counterfactual_from_dict,
    counterfactual_to_dict,
    default_constraints,
    generate_counterfactual,
    goodness_of,
    guidance_from_dict,
    guidance_to_dict,
)
from .predictor import PredictionResult, TrainedModel, model_to_dict, predict
from .rng import SplitMix64, derive_seed
from .world import (
    IMPROVE,
    WORSEN,
    Diet,
    WorldConfig,
    diet_cost,
    sample_initial_diet,
    world_from_dict,
    world_to_dict,
)

# phases
AWAITING_DIET = "AWAITING_DIET"
SHOWING_OUTCOME = "SHOWING_OUTCOME"
SHOWING_EXPLANATION = "SHOWING_EXPLANATION"
QUESTIONNAIRE = "QUESTIONNAIRE"
PROBES = "PROBES"
COMPLETED = "COMPLETED"

# event types
SESSION_CREATED = "SESSION_CREATED"
ROUND_SUBMITTED = "ROUND_SUBMITTED"
PREDICTION_MADE = "PREDICTION_MADE"
EXPLANATION_ISSUED = "EXPLANATION_ISSUED"
FEEDBACK_RECEIVED = "FEEDBACK_RECEIVED"
GUIDANCE_ISSUED = "GUIDANCE_ISSUED"
ROUND_ACKNOWLEDGED = "ROUND_ACKNOWLEDGED"
QUESTIONNAIRE_SUBMITTED = "QUESTIONNAIRE_SUBMITTED"
PROBE_ANSWERED = "PROBE_ANSWERED"
SESSION_COMPLETED = "SESSION_COMPLETED"

N_QUESTIONNAIRE_ITEMS = 8
N_PROBES = 6

# stream labels for derive_seed
_SEED_INITIAL_DIET = 1
_SEED_PROBES = 2


class EngineError(Exception):
    """Base for session command failures."""


class ValidationError(EngineError):
    pass


class BudgetError(EngineError):
    pass


class PhaseError(EngineError):
    pass


class ReplayError(EngineError):
    """Event log corrupt: bad ordering, gaps, or malformed payloads."""


def model_hash(model: TrainedModel) -> str:
    """Content hash identifying the exact model a session played against."""
    blob = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SessionConfig:
    session_id: str
    world: WorldConfig
    model_ref: str
    seed: int
    total_rounds: int = 12
    explanation_interval: int = 2
    fitness_start: int = 50
    fitness_gain: int = 10
    fitness_loss: int = -5
    optimal_threshold: int = 80
    unsatisfactory_threshold: int = 20

    def validate(self) -> None:
        if not self.session_id:
            raise ValidationError("session_id must be non-empty")
        if self.total_rounds < 1:
            raise ValidationError("total_rounds must be >= 1")
        if not (1 <= self.explanation_interval <= self.total_rounds):
            raise ValidationError(
                "explanation_interval must be in [1, total_rounds]"
            )
        if not (0 <= self.unsatisfactory_threshold < self.optimal_threshold <= 100):
            raise ValidationError(
                "need 0 <= unsatisfactory_threshold < optimal_threshold <= 100"
            )
        if not (0 <= self.fitness_start <= 100):
            raise ValidationError("fitness_start must be in [0, 100]")


def config_to_dict(config: SessionConfig) -> dict:
    return {
        "session_id": config.session_id,
        "world": world_to_dict(config.world),
        "model_ref": config.model_ref,
        "seed": config.seed,
        "total_rounds": config.total_rounds,
        "explanation_interval": config.explanation_interval,
        "fitness_start": config.fitness_start,
        "fitness_gain": config.fitness_gain,
        "fitness_loss": config.fitness_loss,
        "optimal_threshold": config.optimal_threshold,
        "unsatisfactory_threshold": config.unsatisfactory_threshold,
    }


def config_from_dict(doc: dict) -> SessionConfig:
    try:
        config = SessionConfig(
            session_id=doc["session_id"],
            world=world_from_dict(doc["world"]),
            model_ref=doc["model_ref"],
            seed=int(doc["seed"]),
            total_rounds=int(doc.get("total_rounds", 12)),
            explanation_interval=int(doc.get("explanation_interval", 2)),
            fitness_start=int(doc.get("fitness_start", 50)),
            fitness_gain=int(doc.get("fitness_gain", 10)),
            fitness_loss=int(doc.get("fitness_loss", -5)),
            optimal_threshold=int(doc.get("optimal_threshold", 80)),
            unsatisfactory_threshold=int(doc.get("unsatisfactory_threshold", 20)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed session config: {exc}") from exc
    config.validate()
    return config


@dataclass(frozen=True)
class RoundRecord:
    round_number: int
    submitted_diet: Diet
    diet_cost: int
    prediction: PredictionResult
    fitness_before: int
    fitness_after: int
    decision_ms: float
    explanation_shown: Optional[Counterfactual] = None
    guidance_shown: Optional[GuidanceSuggestion] = None
    feedback_used: Optional[FeedbackConstraints] = None


@dataclass(frozen=True)
class SessionState:
    config: SessionConfig
    phase: str
    round_number: int
    fitness: int
    current_diet: Diet
    history: tuple[RoundRecord, ...] = ()
    pending_explanations: tuple[Counterfactual, ...] = ()


@dataclass(frozen=True)
class GameEvent:
    seq: int
    timestamp: int
    session_id: str
    type: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "type": self.type,
            "payload": self.payload,
        }


def event_from_dict(doc: dict) -> GameEvent:
    try:
        return GameEvent(
            seq=doc["seq"],
            timestamp=doc["timestamp"],
            session_id=doc["session_id"],
            type=doc["type"],
            payload=doc["payload"],
        )
    except (KeyError, TypeError) as exc:
        raise ReplayError(f"malformed event: {exc}") from exc


def _clamp(v: int, lo: int = 0, hi: int = 100) -> int:
    return max(lo, min(hi, v))


def _wall_clock_ms() -> int:
    return int(time.time() * 1000)


def new_session_id() -> str:
    return uuid.uuid4().hex


class Session:
    """Live session: applies commands, emits events, keeps the model handy.

    Each command computes its new state and events first, hands the events to
    the sink (the service's durable writer), and only then commits, so a sink
    failure leaves the session unchanged.
    """

    def __init__(
        self,
        config: SessionConfig,
        model: TrainedModel,
        stats: Optional[list] = None,
        clock: Callable[[], int] = _wall_clock_ms,
        sink: Optional[Callable[[list[GameEvent]], None]] = None,
    ):
        config.validate()
        if config.world != model.world:
            raise ValidationError("session world differs from the model's world")
        if config.model_ref != model_hash(model):
            raise ValidationError("config.model_ref does not match the given model")
        self.config = config
        self.model = model
        self.stats = stats
        self.clock = clock
        self.sink = sink
        self.events: list[GameEvent] = []
        self._seq = 0
        initial = sample_initial_diet(
            config.world,
            model.predict_label,
            derive_seed(config.seed, _SEED_INITIAL_DIET),
        )
        state = SessionState(
            config=config,
            phase=AWAITING_DIET,
            round_number=1,
            fitness=config.fitness_start,
            current_diet=initial,
        )
        created = self._event(
            1,
            SESSION_CREATED,
            {"config": config_to_dict(config), "initial_diet": list(initial)},
        )
        self.state = None
        self._commit(state, [created])

    @property
    def last_seq(self) -> int:
        return self._seq

    # --- internals ---

    @classmethod
    def resume(
        cls,
        state: SessionState,
        last_seq: int,
        model: TrainedModel,
        stats: Optional[list] = None,
        clock: Callable[[], int] = _wall_clock_ms,
        sink: Optional[Callable[[list[GameEvent]], None]] = None,
    ) -> "Session":
        """Rehydrate a live session from a recovered state (no new events)."""
        if state.config.model_ref != model_hash(model):
            raise ValidationError("session was recorded against a different model")
        session = object.__new__(cls)
        session.config = state.config
        session.model = model
        session.stats = stats
        session.clock = clock
        session.sink = sink
        session.events = []
        session._seq = last_seq
        session.state = state
        return session

    @classmethod
    def from_events(
        cls,
        events: Sequence[GameEvent],
        model: TrainedModel,
        stats: Optional[list] = None,
        clock: Callable[[], int] = _wall_clock_ms,
        sink: Optional[Callable[[list[GameEvent]], None]] = None,
    ) -> "Session":
        session = cls.resume(
            replay(events), events[-1].seq, model, stats=stats, clock=clock, sink=sink
        )
        session.events = list(events)
        return session

    def _event(self, seq: int, type_: str, payload: dict) -> GameEvent:
        return GameEvent(
            seq=seq,
            timestamp=self.clock(),
            session_id=self.config.session_id,
            type=type_,
            payload=payload,
        )

    def _emit(self, type_: str, payload: dict) -> GameEvent:
        return self._event(self._seq + 1, type_, payload)

    def _commit(self, state: SessionState, events: list[GameEvent]) -> None:
        if self.sink is not None:
            self.sink(events)
        self.events.extend(events)
        if events:
            self._seq = events[-1].seq
        self.state = state

    def _require_phase(self, *phases: str) -> None:
        if self.state.phase not in phases:
            raise PhaseError(
                f"operation not allowed in phase {self.state.phase}"
            )

    # --- commands ---

    def submit_round(
        self,
        diet: Sequence[int],
        decision_ms: float,
        feedback: Optional[FeedbackConstraints] = None,
    ) -> RoundRecord:
        self._require_phase(AWAITING_DIET)
        world = self.config.world
        d = world.check_diet(diet)
        if not isinstance(decision_ms, (int, float)) or decision_ms < 0:
            raise ValidationError(f"decision_ms must be >= 0, got {decision_ms!r}")
        cost = diet_cost(d, world)
        if cost > world.round_budget:
            raise BudgetError(
                f"diet costs {cost} time units, budget is {world.round_budget}"
            )
        if feedback is not None:
            feedback.validate(world)

        state = self.state
        rn = state.round_number
        pred = predict(self.model, d)
        before = state.fitness
        delta = (
            self.config.fitness_gain if pred.label == IMPROVE else self.config.fitness_loss
        )
        after = _clamp(before + delta)

        events = []
        seq = self._seq
        seq += 1
        events.append(
            self._event(
                seq,
                ROUND_SUBMITTED,
                {
                    "round_number": rn,
                    "diet": list(d),
                    "decision_ms": decision_ms,
                    "feedback": constraints_to_dict(feedback) if feedback else None,
                },
            )
        )
        seq += 1
        events.append(
            self._event(
                seq,
                PREDICTION_MADE,
                {
                    "round_number": rn,
                    "label": pred.label,
                    "score": pred.score,
                    "diet_cost": cost,
                    "fitness_before": before,
                    "fitness_after": after,
                },
            )
        )

        explanation: Optional[Counterfactual] = None
        guidance: Optional[GuidanceSuggestion] = None
        feedback_used: Optional[FeedbackConstraints] = None
        scheduled = rn % self.config.explanation_interval == 0
        if scheduled:
            feedback_used = feedback if feedback is not None else default_constraints(world)
            result = generate_counterfactual(self.model, d, feedback_used, self.stats)
            if isinstance(result, Counterfactual):
                explanation = result
                good = goodness_of(result, self.model, feedback_used)
                seq += 1
                events.append(
                    self._event(
                        seq,
                        EXPLANATION_ISSUED,
                        {
                            "round_number": rn,
                            "counterfactual": counterfactual_to_dict(result),
                            "constraints": constraints_to_dict(feedback_used),
                            "goodness": {
                                "validity": good.validity,
                                "proximity": good.proximity,
                                "sparsity": good.sparsity,
                                "feasibility": good.feasibility,
                            },
                        },
                    )
                )
            else:
                guidance = result.guidance
                seq += 1
                events.append(
                    self._event(
                        seq,
                        GUIDANCE_ISSUED,
                        {
                            "round_number": rn,
                            "guidance": (
                                guidance_to_dict(guidance) if guidance else None
                            ),
                            "constraints": constraints_to_dict(feedback_used),
                        },
                    )
                )

        record = RoundRecord(
            round_number=rn,
            submitted_diet=d,
            diet_cost=cost,
            prediction=pred,
            fitness_before=before,
            fitness_after=after,
            decision_ms=decision_ms,
            explanation_shown=explanation,
            guidance_shown=guidance,
            feedback_used=feedback_used,
        )
        pending = state.pending_explanations
        if explanation is not None:
            pending = pending + (explanation,)
        new_state = replace(
            state,
            phase=SHOWING_EXPLANATION if scheduled else SHOWING_OUTCOME,
            fitness=after,
            current_diet=d,
            history=state.history + (record,),
            pending_explanations=pending,
        )
        self._commit(new_state, events)
        return record

    def acknowledge(self) -> SessionState:
        self._require_phase(SHOWING_OUTCOME, SHOWING_EXPLANATION)
        state = self.state
        rn = state.round_number
        done = rn >= self.config.total_rounds
        new_state = replace(
            state,
            phase=QUESTIONNAIRE if done else AWAITING_DIET,
            round_number=rn if done else rn + 1,
        )
        event = self._emit(ROUND_ACKNOWLEDGED, {"round_number": rn})
        self._commit(new_state, [event])
        return new_state

    def whatif(
        self, constraints: FeedbackConstraints
    ) -> Counterfactual | Infeasible:
        """On-demand exploration against the current diet; no state change."""
        if self.state.phase == COMPLETED:
            raise PhaseError("session already completed")
        constraints.validate(self.config.world)
        result = generate_counterfactual(
            self.model, self.state.current_diet, constraints, self.stats
        )
        if isinstance(result, Counterfactual):
            payload_result = {"counterfactual": counterfactual_to_dict(result)}
        else:
            payload_result = {
                "guidance": guidance_to_dict(result.guidance)
                if result.guidance
                else None
            }
        event = self._emit(
            FEEDBACK_RECEIVED,
            {
                "round_number": self.state.round_number,
                "constraints": constraints_to_dict(constraints),
                "result": payload_result,
            },
        )
        self._commit(self.state, [event])
        return result

    def submit_questionnaire(
        self, items: Sequence[int], free_text: str = ""
    ) -> float:
        self._require_phase(QUESTIONNAIRE)
        if len(items) != N_QUESTIONNAIRE_ITEMS:
            raise ValidationError(
                f"questionnaire needs exactly {N_QUESTIONNAIRE_ITEMS} items"
            )
        for v in items:
            if not isinstance(v, int) or isinstance(v, bool) or not (1 <= v <= 5):
                raise ValidationError(f"Likert items must be integers 1..5, got {v!r}")
        satisfaction = sum(items) / len(items)
        event = self._emit(
            QUESTIONNAIRE_SUBMITTED,
            {
                "items": list(items),
                "free_text": free_text,
                "satisfaction": satisfaction,
            },
        )
        self._commit(replace(self.state, phase=PROBES), [event])
        return satisfaction

    def probe_diets(self) -> list[Diet]:
        """Six fixed prediction probes, half accepted half rejected by the model."""
        return generate_probe_diets(
            self.config.world, self.model, derive_seed(self.config.seed, _SEED_PROBES)
        )

    def submit_probes(self, answers: Sequence[str]) -> float:
        self._require_phase(PROBES)
        diets = self.probe_diets()
        if len(answers) != len(diets):
            raise ValidationError(f"expected {len(diets)} probe answers")
        for a in answers:
            if a not in (IMPROVE, WORSEN):
                raise ValidationError(f"probe answers must be IMPROVE or WORSEN, got {a!r}")
        events = []
        seq = self._seq
        correct = 0
        for idx, (diet, answer) in enumerate(zip(diets, answers)):
            model_label = predict(self.model, diet).label
            ok = answer == model_label
            correct += ok
            seq += 1
            events.append(
                self._event(
                    seq,
                    PROBE_ANSWERED,
                    {
                        "probe_index": idx,
                        "diet": list(diet),
                        "learner_prediction": answer,
                        "model_prediction": model_label,
                        "correct": ok,
                    },
                )
            )
        seq += 1
        events.append(
            self._event(
                seq,
                SESSION_COMPLETED,
                {
                    "final_fitness": self.state.fitness,
                    "rounds_played": len(self.state.history),
                },
            )
        )
        self._commit(replace(self.state, phase=COMPLETED), events)
        return correct / len(diets)


def generate_probe_diets(
    world: WorldConfig, model: TrainedModel, seed: int
) -> list[Diet]:
    """Seeded uniform draws kept in draw order, 3 per class, no budget filter."""
    rng = SplitMix64(seed)
    half = N_PROBES // 2
    picked: list[Diet] = []
    counts = {IMPROVE: 0, WORSEN: 0}
    seen = set()
    for _ in range(10_000):
        diet = tuple(rng.randint(pl.leaf_min, pl.leaf_max) for pl in world.plants)
        if diet in seen:
            continue
        label = predict(model, diet).label
        if counts[label] >= half:
            continue
        seen.add(diet)
        counts[label] += 1
        picked.append(diet)
        if len(picked) == N_PROBES:
            return picked
    raise ValidationError(
        "could not assemble a stratified probe set; model too one-sided"
    )


# --- replay ---


class ReplayFold:
    """Incremental event folder used by full replay and snapshot recovery.

    A round's record spans two events (ROUND_SUBMITTED carries the diet and
    decision time, PREDICTION_MADE the outcome); the fold buffers the first
    until its pair arrives. Commands are logged atomically, so any log tail
    that starts at a command boundary folds cleanly.
    """

    def __init__(self, state: Optional[SessionState] = None, last_seq: int = 0):
        self.state = state
        self.last_seq = last_seq
        self._submit: Optional[dict] = None

    def apply(self, event: GameEvent) -> SessionState:
        if event.seq != self.last_seq + 1:
            raise ReplayError(f"seq gap: expected {self.last_seq + 1}, got {event.seq}")
        self.last_seq = event.seq
        if self.state is None:
            if event.type != SESSION_CREATED:
                raise ReplayError(f"log must start with {SESSION_CREATED}")
            config = config_from_dict(event.payload["config"])
            self.state = SessionState(
                config=config,
                phase=AWAITING_DIET,
                round_number=1,
                fitness=config.fitness_start,
                current_diet=tuple(event.payload["initial_diet"]),
            )
            return self.state
        if event.session_id != self.state.config.session_id:
            raise ReplayError("mixed session_ids in one log")
        self.state = self._step(self.state, event)
        return self.state

    def _step(self, state: SessionState, event: GameEvent) -> SessionState:
        config = state.config
        p = event.payload
        t = event.type
        if t == SESSION_CREATED:
            raise ReplayError("duplicate SESSION_CREATED")
        if t == ROUND_SUBMITTED:
            self._submit = p
            return state
        if t == PREDICTION_MADE:
            if self._submit is None or self._submit["round_number"] != p["round_number"]:
                raise ReplayError("PREDICTION_MADE without matching ROUND_SUBMITTED")
            sub, self._submit = self._submit, None
            rn = p["round_number"]
            record = RoundRecord(
                round_number=rn,
                submitted_diet=tuple(sub["diet"]),
                diet_cost=p["diet_cost"],
                prediction=PredictionResult(label=p["label"], score=p["score"]),
                fitness_before=p["fitness_before"],
                fitness_after=p["fitness_after"],
                decision_ms=sub["decision_ms"],
            )
            scheduled = rn % config.explanation_interval == 0
            return replace(
                state,
                phase=SHOWING_EXPLANATION if scheduled else SHOWING_OUTCOME,
                fitness=p["fitness_after"],
                current_diet=tuple(sub["diet"]),
                history=state.history + (record,),
            )
        if t == EXPLANATION_ISSUED:
            cf = counterfactual_from_dict(p["counterfactual"])
            cons = constraints_from_dict(p["constraints"], config.world)
            fixed = replace(state.history[-1], explanation_shown=cf, feedback_used=cons)
            return replace(
                state,
                history=state.history[:-1] + (fixed,),
                pending_explanations=state.pending_explanations + (cf,),
            )
        if t == GUIDANCE_ISSUED:
            g = guidance_from_dict(p["guidance"]) if p["guidance"] else None
            cons = constraints_from_dict(p["constraints"], config.world)
            fixed = replace(state.history[-1], guidance_shown=g, feedback_used=cons)
            return replace(state, history=state.history[:-1] + (fixed,))
        if t == ROUND_ACKNOWLEDGED:
            rn = state.round_number
            done = rn >= config.total_rounds
            return replace(
                state,
                phase=QUESTIONNAIRE if done else AWAITING_DIET,
                round_number=rn if done else rn + 1,
            )
        if t == FEEDBACK_RECEIVED:
            return state
        if t == QUESTIONNAIRE_SUBMITTED:
            return replace(state, phase=PROBES)
        if t == PROBE_ANSWERED:
            return state
        if t == SESSION_COMPLETED:
            return replace(state, phase=COMPLETED)
        raise ReplayError(f"unknown event type {t!r}")


def replay(events: Sequence[GameEvent | dict]) -> SessionState:
    """Fold an event list into the exact final SessionState, model-free."""
    if not events:
        raise ReplayError("empty event list")
    fold = ReplayFold()
    for e in events:
        fold.apply(e if isinstance(e, GameEvent) else event_from_dict(e))
    return fold.state


# --- state snapshots ---


def record_to_dict(r: RoundRecord) -> dict:
    return {
        "round_number": r.round_number,
        "submitted_diet": list(r.submitted_diet),
        "diet_cost": r.diet_cost,
        "prediction": {"label": r.prediction.label, "score": r.prediction.score},
        "fitness_before": r.fitness_before,
        "fitness_after": r.fitness_after,
        "decision_ms": r.decision_ms,
        "explanation_shown": (
            counterfactual_to_dict(r.explanation_shown) if r.explanation_shown else None
        ),
        "guidance_shown": (
            guidance_to_dict(r.guidance_shown) if r.guidance_shown else None
        ),
        "feedback_used": (
            constraints_to_dict(r.feedback_used) if r.feedback_used else None
        ),
    }


def record_from_dict(doc: dict, world: WorldConfig) -> RoundRecord:
    return RoundRecord(
        round_number=doc["round_number"],
        submitted_diet=tuple(doc["submitted_diet"]),
        diet_cost=doc["diet_cost"],
        prediction=PredictionResult(
            label=doc["prediction"]["label"], score=doc["prediction"]["score"]
        ),
        fitness_before=doc["fitness_before"],
        fitness_after=doc["fitness_after"],
        decision_ms=doc["decision_ms"],
        explanation_shown=(
            counterfactual_from_dict(doc["explanation_shown"])
            if doc["explanation_shown"]
            else None
        ),
        guidance_shown=(
            guidance_from_dict(doc["guidance_shown"]) if doc["guidance_shown"] else None
        ),
        feedback_used=(
            constraints_from_dict(doc["feedback_used"], world)
            if doc["feedback_used"]
            else None
        ),
    )


def state_to_dict(state: SessionState) -> dict:
    return {
        "config": config_to_dict(state.config),
        "phase": state.phase,
        "round_number": state.round_number,
        "fitness": state.fitness,
        "current_diet": list(state.current_diet),
        "history": [record_to_dict(r) for r in state.history],
        "pending_explanations": [
            counterfactual_to_dict(cf) for cf in state.pending_explanations
        ],
    }


def state_from_dict(doc: dict) -> SessionState:
    try:
        config = config_from_dict(doc["config"])
        return SessionState(
            config=config,
            phase=doc["phase"],
            round_number=doc["round_number"],
            fitness=doc["fitness"],
            current_diet=tuple(doc["current_diet"]),
            history=tuple(
                record_from_dict(r, config.world) for r in doc["history"]
            ),
            pending_explanations=tuple(
                counterfactual_from_dict(c) for c in doc["pending_explanations"]
            ),
        )
    except (KeyError, TypeError) as exc:
        raise ReplayError(f"malformed state snapshot: {exc}") from exc


# --- event log files ---


def event_to_json_line(event: GameEvent) -> str:
    return json.dumps(event.to_dict(), separators=(",", ":")) + "\n"


class EventLogWriter:
    """Append-only JSONL writer; fsyncs every batch before returning."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, events: Sequence[GameEvent]) -> None:
        for e in events:
            self._fh.write(event_to_json_line(e))
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


def read_events_jsonl(path: str) -> list[GameEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(event_from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ReplayError(f"{path}:{line_no}: bad JSON: {exc}") from exc
    return events


def write_events_jsonl(path: str, events: Sequence[GameEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(event_to_json_line(e))

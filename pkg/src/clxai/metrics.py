"""The four evaluation measures, each computed purely from session logs.

Nothing here touches the model: explanation quality facts are logged at issue
time, probe outcomes at answer time, so a JSONL file is all a report needs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

from .engine import (
    EXPLANATION_ISSUED,
    PREDICTION_MADE,
    PROBE_ANSWERED,
    QUESTIONNAIRE_SUBMITTED,
    ROUND_SUBMITTED,
    SESSION_CREATED,
    GameEvent,
    event_from_dict,
)
from .world import IMPROVE, Diet

REPORT_COLUMNS = [
    "session_id",
    "validity_rate",
    "mean_proximity",
    "mean_sparsity",
    "feasibility_rate",
    "satisfaction",
    "understanding",
    "fitness_slope",
    "improve_rate_h1",
    "improve_rate_h2",
    "mean_decision_ms_h1",
    "mean_decision_ms_h2",
]


class MetricsError(ValueError):
    """Input does not support the requested measure."""


@dataclass(frozen=True)
class QuestionnaireResponse:
    session_id: str
    items: tuple[int, ...]
    free_text: str = ""


@dataclass(frozen=True)
class ProbeResult:
    diet: Diet
    learner_prediction: str
    model_prediction: str

    @property
    def correct(self) -> bool:
        return self.learner_prediction == self.model_prediction


def _as_events(events: Sequence[GameEvent | dict]) -> list[GameEvent]:
    return [e if isinstance(e, GameEvent) else event_from_dict(e) for e in events]


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def explanation_goodness(events: Sequence[GameEvent | dict]) -> dict:
    """Aggregate the quality facts of every issued explanation.

    Returns n=0 with None rates when the log holds no explanations; callers
    render those as blank report cells.
    """
    issued = [e.payload["goodness"] for e in _as_events(events) if e.type == EXPLANATION_ISSUED]
    if not issued:
        return {
            "n": 0,
            "validity_rate": None,
            "mean_proximity": None,
            "mean_sparsity": None,
            "feasibility_rate": None,
        }
    return {
        "n": len(issued),
        "validity_rate": _mean([1.0 if g["validity"] else 0.0 for g in issued]),
        "mean_proximity": _mean([g["proximity"] for g in issued]),
        "mean_sparsity": _mean([g["sparsity"] for g in issued]),
        "feasibility_rate": _mean([1.0 if g["feasibility"] else 0.0 for g in issued]),
    }


def satisfaction_score(response: QuestionnaireResponse) -> float:
    """Mean of the 8 Likert items."""
    if len(response.items) != 8:
        raise MetricsError(f"expected 8 items, got {len(response.items)}")
    for v in response.items:
        if not isinstance(v, int) or isinstance(v, bool) or not (1 <= v <= 5):
            raise MetricsError(f"items must be integers in [1, 5], got {v!r}")
    return _mean(response.items)


def understanding_score(probes: Sequence[ProbeResult]) -> float:
    """Fraction of probes where the learner matched the model."""
    if not probes:
        raise MetricsError("no probes to score")
    return _mean([1.0 if p.correct else 0.0 for p in probes])


def ols_slope(ys: Sequence[float]) -> float:
    """Least-squares slope of ys against 1..len(ys)."""
    n = len(ys)
    if n < 2:
        raise MetricsError("slope needs at least 2 points")
    xs = range(1, n + 1)
    x_mean = (n + 1) / 2
    y_mean = _mean(ys)
    sxy = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    sxx = sum((x - x_mean) ** 2 for x in xs)
    return sxy / sxx


def task_learning(events: Sequence[GameEvent | dict]) -> dict:
    """Fitness slope plus first-half/second-half improve rate and decision time."""
    evs = _as_events(events)
    rounds: list[dict] = []
    pending: Optional[dict] = None
    for e in evs:
        if e.type == ROUND_SUBMITTED:
            pending = e.payload
        elif e.type == PREDICTION_MADE and pending is not None:
            rounds.append(
                {
                    "label": e.payload["label"],
                    "fitness_after": e.payload["fitness_after"],
                    "decision_ms": pending["decision_ms"],
                }
            )
            pending = None
    if len(rounds) < 2:
        raise MetricsError(f"task learning needs >= 2 rounds, got {len(rounds)}")
    cut = len(rounds) // 2
    h1, h2 = rounds[:cut], rounds[cut:]

    def improve_rate(rs):
        return _mean([1.0 if r["label"] == IMPROVE else 0.0 for r in rs])

    return {
        "fitness_trajectory": [r["fitness_after"] for r in rounds],
        "fitness_slope": ols_slope([r["fitness_after"] for r in rounds]),
        "improve_rate_h1": improve_rate(h1),
        "improve_rate_h2": improve_rate(h2),
        "mean_decision_ms_h1": _mean([r["decision_ms"] for r in h1]),
        "mean_decision_ms_h2": _mean([r["decision_ms"] for r in h2]),
    }


def session_report(events: Sequence[GameEvent | dict]) -> dict:
    """One report row for one session log; absent measures come back None."""
    evs = _as_events(events)
    if not evs or evs[0].type != SESSION_CREATED:
        raise MetricsError("log must start with SESSION_CREATED")
    session_id = evs[0].session_id

    row = {c: None for c in REPORT_COLUMNS}
    row["session_id"] = session_id

    goodness = explanation_goodness(evs)
    if goodness["n"]:
        row["validity_rate"] = goodness["validity_rate"]
        row["mean_proximity"] = goodness["mean_proximity"]
        row["mean_sparsity"] = goodness["mean_sparsity"]
        row["feasibility_rate"] = goodness["feasibility_rate"]

    for e in evs:
        if e.type == QUESTIONNAIRE_SUBMITTED:
            row["satisfaction"] = satisfaction_score(
                QuestionnaireResponse(
                    session_id=session_id,
                    items=tuple(e.payload["items"]),
                    free_text=e.payload.get("free_text", ""),
                )
            )
            break

    probes = [
        ProbeResult(
            diet=tuple(e.payload["diet"]),
            learner_prediction=e.payload["learner_prediction"],
            model_prediction=e.payload["model_prediction"],
        )
        for e in evs
        if e.type == PROBE_ANSWERED
    ]
    if probes:
        row["understanding"] = understanding_score(probes)

    n_rounds = sum(1 for e in evs if e.type == PREDICTION_MADE)
    if n_rounds >= 2:
        tl = task_learning(evs)
        for key in (
            "fitness_slope",
            "improve_rate_h1",
            "improve_rate_h2",
            "mean_decision_ms_h1",
            "mean_decision_ms_h2",
        ):
            row[key] = tl[key]
    return row


def export_report(reports: Sequence[dict], path: str) -> None:
    """Fixed-column CSV, one row per session; None renders as an empty cell."""
    if not reports:
        raise MetricsError("nothing to export")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in reports:
            writer.writerow(
                ["" if row[c] is None else row[c] for c in REPORT_COLUMNS]
            )


def aggregate_reports(reports: Sequence[dict]) -> dict:
    """Cohort mean/std/n per numeric column, ignoring blank cells."""
    if not reports:
        raise MetricsError("no reports to aggregate")
    out = {}
    for col in REPORT_COLUMNS[1:]:
        values = [r[col] for r in reports if r.get(col) is not None]
        if not values:
            out[col] = {"mean": None, "std": None, "n": 0}
            continue
        mean = _mean(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        out[col] = {"mean": mean, "std": var ** 0.5, "n": len(values)}
    return out

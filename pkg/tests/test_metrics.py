"""Measure arithmetic on hand-built logs, with the OLS slope cross-checked
against the stdlib regression, and the CSV export format pinned down.
"""

import csv
import statistics

import pytest
from hypothesis import given, strategies as st

from clxai.engine import (
    EXPLANATION_ISSUED,
    PREDICTION_MADE,
    PROBE_ANSWERED,
    QUESTIONNAIRE_SUBMITTED,
    ROUND_SUBMITTED,
    SESSION_CREATED,
    GameEvent,
)
from clxai.metrics import (
    REPORT_COLUMNS,
    MetricsError,
    ProbeResult,
    QuestionnaireResponse,
    aggregate_reports,
    explanation_goodness,
    export_report,
    ols_slope,
    satisfaction_score,
    session_report,
    task_learning,
    understanding_score,
)
from clxai.simulator import LearnerPolicy, play_session
from clxai.world import IMPROVE, WORSEN


def ev(seq, type_, payload, session_id="m-test"):
    return GameEvent(seq=seq, timestamp=seq * 1000, session_id=session_id, type=type_, payload=payload)


def synthetic_log(rounds, goodness=(), items=None, probes=()):
    """Assemble a minimal well-formed log from per-round tuples."""
    events = [ev(1, SESSION_CREATED, {"config": {}, "initial_diet": [0, 0, 0, 0, 0]})]
    seq = 1
    for i, (label, fitness_after, decision_ms) in enumerate(rounds, start=1):
        seq += 1
        events.append(ev(seq, ROUND_SUBMITTED, {"round_number": i, "diet": [0] * 5, "decision_ms": decision_ms}))
        seq += 1
        events.append(
            ev(seq, PREDICTION_MADE, {"round_number": i, "label": label, "fitness_after": fitness_after})
        )
    for g in goodness:
        seq += 1
        events.append(ev(seq, EXPLANATION_ISSUED, {"round_number": 0, "goodness": g}))
    if items is not None:
        seq += 1
        events.append(ev(seq, QUESTIONNAIRE_SUBMITTED, {"items": list(items), "free_text": ""}))
    for i, (learner, model) in enumerate(probes):
        seq += 1
        events.append(
            ev(
                seq,
                PROBE_ANSWERED,
                {
                    "probe_index": i,
                    "diet": [0] * 5,
                    "learner_prediction": learner,
                    "model_prediction": model,
                    "correct": learner == model,
                },
            )
        )
    return events


def test_satisfaction_hand_values():
    assert satisfaction_score(QuestionnaireResponse("s", (5,) * 8, "")) == 5.0
    assert satisfaction_score(QuestionnaireResponse("s", (1, 2, 3, 4, 5, 4, 3, 2), "")) == 3.0
    assert satisfaction_score(QuestionnaireResponse("s", (1,) * 8, "")) == 1.0


def test_satisfaction_validation():
    with pytest.raises(MetricsError):
        satisfaction_score(QuestionnaireResponse("s", (3,) * 7, ""))
    with pytest.raises(MetricsError):
        satisfaction_score(QuestionnaireResponse("s", (0,) + (3,) * 7, ""))
    with pytest.raises(MetricsError):
        satisfaction_score(QuestionnaireResponse("s", (6,) + (3,) * 7, ""))


def test_understanding_hand_values():
    half = [ProbeResult((0,) * 5, IMPROVE, IMPROVE), ProbeResult((0,) * 5, IMPROVE, WORSEN)]
    assert understanding_score(half * 3) == 0.5
    assert understanding_score([ProbeResult((0,) * 5, WORSEN, WORSEN)]) == 1.0
    with pytest.raises(MetricsError):
        understanding_score([])


def test_ols_slope_hand_values():
    assert ols_slope([45, 55, 65]) == pytest.approx(10.0)
    assert ols_slope([50, 50, 50, 50]) == pytest.approx(0.0)
    assert ols_slope([10, 0]) == pytest.approx(-10.0)
    with pytest.raises(MetricsError):
        ols_slope([1])


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40))
def test_ols_slope_matches_stdlib(ys):
    xs = list(range(1, len(ys) + 1))
    expected = statistics.linear_regression(xs, ys).slope
    assert ols_slope(ys) == pytest.approx(expected, abs=1e-9)


def test_explanation_goodness_means():
    log = synthetic_log(
        rounds=[(WORSEN, 45, 1000.0), (WORSEN, 40, 1000.0)],
        goodness=[
            {"validity": True, "proximity": 6, "sparsity": 1, "feasibility": True},
            {"validity": True, "proximity": 10, "sparsity": 3, "feasibility": False},
        ],
    )
    g = explanation_goodness(log)
    assert g["n"] == 2
    assert g["validity_rate"] == 1.0
    assert g["mean_proximity"] == pytest.approx(8.0)
    assert g["mean_sparsity"] == pytest.approx(2.0)
    assert g["feasibility_rate"] == pytest.approx(0.5)


def test_explanation_goodness_empty():
    g = explanation_goodness(synthetic_log(rounds=[(WORSEN, 45, 1000.0)] * 2))
    assert g["n"] == 0
    assert g["validity_rate"] is None
    assert g["mean_proximity"] is None


def test_task_learning_hand_values():
    log = synthetic_log(
        rounds=[
            (WORSEN, 45, 1000.0),
            (IMPROVE, 55, 2000.0),
            (IMPROVE, 65, 3000.0),
            (IMPROVE, 75, 4000.0),
        ]
    )
    tl = task_learning(log)
    assert tl["fitness_trajectory"] == [45, 55, 65, 75]
    assert tl["fitness_slope"] == pytest.approx(10.0)
    assert tl["improve_rate_h1"] == pytest.approx(0.5)
    assert tl["improve_rate_h2"] == pytest.approx(1.0)
    assert tl["mean_decision_ms_h1"] == pytest.approx(1500.0)
    assert tl["mean_decision_ms_h2"] == pytest.approx(3500.0)


def test_task_learning_odd_round_count_splits_short_first():
    log = synthetic_log(rounds=[(WORSEN, 45, 100.0), (WORSEN, 40, 200.0), (IMPROVE, 50, 300.0)])
    tl = task_learning(log)
    assert tl["mean_decision_ms_h1"] == pytest.approx(100.0)  # halves split at n // 2
    assert tl["mean_decision_ms_h2"] == pytest.approx(250.0)


def test_task_learning_needs_two_rounds():
    with pytest.raises(MetricsError):
        task_learning(synthetic_log(rounds=[(WORSEN, 45, 100.0)]))


def test_session_report_full_row():
    log = synthetic_log(
        rounds=[(WORSEN, 45, 1000.0), (IMPROVE, 55, 3000.0)],
        goodness=[{"validity": True, "proximity": 4, "sparsity": 2, "feasibility": True}],
        items=(5,) * 8,
        probes=[(IMPROVE, IMPROVE)] * 3 + [(IMPROVE, WORSEN)] * 3,
    )
    row = session_report(log)
    assert list(row.keys()) == REPORT_COLUMNS
    assert row["session_id"] == "m-test"
    assert row["validity_rate"] == 1.0
    assert row["mean_proximity"] == 4.0
    assert row["satisfaction"] == 5.0
    assert row["understanding"] == 0.5
    assert row["fitness_slope"] == pytest.approx(10.0)


def test_session_report_partial_session_uses_none():
    row = session_report(synthetic_log(rounds=[(WORSEN, 45, 1000.0)] * 2))
    assert row["satisfaction"] is None
    assert row["understanding"] is None
    assert row["validity_rate"] is None
    assert row["fitness_slope"] is not None


def test_session_report_requires_creation_event():
    with pytest.raises(MetricsError):
        session_report([ev(1, PREDICTION_MADE, {"label": WORSEN, "fitness_after": 1})])


def test_session_report_on_real_session(oracle, oracle_stats):
    session = play_session(
        LearnerPolicy(kind="CE_FOLLOWER"), oracle, 77, "real-report", stats=oracle_stats
    )
    row = session_report([e.to_dict() for e in session.events])
    items = next(
        e.payload["items"] for e in session.events if e.type == QUESTIONNAIRE_SUBMITTED
    )
    assert row["satisfaction"] == pytest.approx(sum(items) / 8)
    probe_events = [e for e in session.events if e.type == PROBE_ANSWERED]
    expected_understanding = sum(e.payload["correct"] for e in probe_events) / 6
    assert row["understanding"] == pytest.approx(expected_understanding)
    assert row["validity_rate"] == 1.0


def test_export_report_format(tmp_path):
    full = session_report(
        synthetic_log(
            rounds=[(WORSEN, 45, 1000.0), (IMPROVE, 55, 3000.0)],
            goodness=[{"validity": True, "proximity": 4, "sparsity": 2, "feasibility": True}],
            items=(4,) * 8,
            probes=[(IMPROVE, IMPROVE)] * 6,
        )
    )
    partial = session_report(synthetic_log(rounds=[(WORSEN, 45, 500.0)] * 2))
    path = str(tmp_path / "report.csv")
    export_report([full, partial], path)
    lines = open(path, newline="").read().splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 3
    rows = list(csv.DictReader(open(path, newline="")))
    assert rows[1]["satisfaction"] == ""  # None renders as an empty cell
    for column in REPORT_COLUMNS[1:]:
        if full[column] is not None:
            assert abs(float(rows[0][column]) - full[column]) < 1e-9


def test_export_report_rejects_empty(tmp_path):
    with pytest.raises(MetricsError):
        export_report([], str(tmp_path / "empty.csv"))


def test_aggregate_reports():
    a = session_report(
        synthetic_log(rounds=[(WORSEN, 45, 1000.0), (IMPROVE, 55, 1000.0)], items=(5,) * 8)
    )
    b = session_report(
        synthetic_log(rounds=[(WORSEN, 45, 1000.0), (WORSEN, 40, 1000.0)], items=(3,) * 8)
    )
    agg = aggregate_reports([a, b])
    assert agg["satisfaction"]["mean"] == pytest.approx(4.0)
    assert agg["satisfaction"]["n"] == 2
    assert agg["satisfaction"]["std"] == pytest.approx(statistics.pstdev([5.0, 3.0]))
    assert agg["understanding"]["n"] == 0
    assert agg["understanding"]["mean"] is None


def test_aggregate_reports_rejects_empty():
    with pytest.raises(MetricsError):
        aggregate_reports([])

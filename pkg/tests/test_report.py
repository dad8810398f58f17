import json

import pytest

from loopsim.metrics import PI, PID, TIE, StepMetrics
from loopsim.report import ComparisonReport

PI_METRICS = StepMetrics(20.0, 4.0, 12.0, 0.1, 30.0, 200.0, 400.0, 4.0, True)
PID_METRICS = StepMetrics(10.0, 2.0, 6.0, 0.1, 15.0, 100.0, 200.0, 16.0, True)


@pytest.fixture
def report(fixtures):
    return ComparisonReport.build(fixtures["level-pi"], fixtures["level-pid"], PI_METRICS, PID_METRICS)


def test_rows_follow_metric_order(report):
    assert [r.metric for r in report.rows] == [
        "overshoot", "rise_time", "settling_time", "steady_state_error",
        "iae", "ise", "itae", "control_variance", "settled",
    ]


def test_ratio_column_divides_by_pi(report):
    assert report.row("settling_time").ratio == pytest.approx(0.5)
    assert report.row("control_variance").ratio == pytest.approx(4.0)
    assert report.row("steady_state_error").ratio == 1.0
    assert report.row("settled").ratio is None


def test_winners_and_verdict(report):
    assert report.row("settling_time").winner == PID
    assert report.row("control_variance").winner == PI
    assert report.row("settled").winner == TIE
    assert report.verdict[0] == "PID wins 6 of 9 metrics, PI wins 1, 2 tied"
    assert "PID settles faster" in report.verdict
    assert "PI moves the actuator less under noise" in report.verdict


def test_json_round_trip(report):
    again = ComparisonReport.from_dict(json.loads(report.to_json()))
    assert again == report


def test_fingerprints_and_names(report, fixtures):
    assert (report.pi_name, report.pid_name) == ("level-pi", "level-pid")
    assert report.pi_fingerprint != report.pid_fingerprint
    assert report.seed == fixtures["level-pi"].seed


def test_text_table(report):
    text = report.to_text()
    lines = text.splitlines()
    assert lines[0].startswith("PI  level-pi [")
    header = next(line for line in lines if line.startswith("metric"))
    assert header.split() == ["metric", "PI", "PID", "winner", "PID/PI"]
    settled = next(line for line in lines if line.startswith("settled"))
    assert settled.split() == ["settled", "yes", "yes", "tie", "-"]
    assert text.endswith("\n") and not text.endswith("\n\n")

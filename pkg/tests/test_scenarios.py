import pytest

from loopsim.config import DEFAULTS
from loopsim.controller import AntiWindup
from loopsim.errors import ConfigError, ScenarioSyntaxError
from loopsim.plant import EQUAL_PERCENTAGE, FlowPlantParams, TankParams
from loopsim.scenarios import load_scenario, parse_scenario, render_scenario, scenario_fingerprint

MINIMAL = """
# smallest useful scenario
[plant]
type = tank

[controller]
kp = 124.468
ti = 7.22
"""


def test_builtin_names(fixtures):
    assert list(fixtures) == ["level-pi", "level-pid", "pump-pi", "pump-pid", "valve-pi", "valve-pid"]


def test_minimal_file_gets_defaults():
    sc = parse_scenario(MINIMAL, default_name="mini")
    assert sc.name == "mini"
    assert sc.plant == TankParams()
    assert sc.controller.td == 0.0 and sc.controller.beta == 1.0 and sc.controller.ts == 0.1
    assert sc.controller.anti_windup is AntiWindup.CONDITIONAL
    assert sc.duration == DEFAULTS.duration
    assert sc.setpoint.points == ((0.0, 20.0), (1.0, 60.0))
    assert sc.disturbance.points == ((0.0, 0.0), (60.0, -10.0), (70.0, 0.0))
    assert sc.seed == 0 and sc.noise_std == 0.0 and sc.substeps_per_sample == 10


def test_negative_ti_names_the_key():
    with pytest.raises(ConfigError) as exc:
        parse_scenario(MINIMAL.replace("ti = 7.22", "ti = -1"))
    assert exc.value.key == "ti"
    assert "ti" in str(exc.value)
    assert exc.value.line == 8


def test_ti_none_disables_integral():
    sc = parse_scenario(MINIMAL.replace("ti = 7.22", "ti = none"))
    assert sc.controller.ti is None


@pytest.mark.parametrize("name", ["level-pi", "level-pid", "pump-pi", "pump-pid", "valve-pi", "valve-pid"])
def test_render_parse_round_trip(fixtures, name):
    sc = fixtures[name]
    assert parse_scenario(render_scenario(sc)) == sc


def test_round_trip_of_custom_scenario():
    text = """
[plant]
type = valve
valve_char = equal-percentage
rangeability = 50
[controller]
kp = 2.5
ti = 4
td = 0.3
a = 0.2
alpha = 0.5
anti_windup = back-calculation
[profile]
setpoint = 0:10, 2.5:70, 40:30
disturbance = 0:0, 20:5
[run]
name = custom
duration = 60
seed = 123
noise_std = 0.5
substeps = 20
"""
    sc = parse_scenario(text)
    assert isinstance(sc.plant, FlowPlantParams)
    assert sc.plant.valve_char == EQUAL_PERCENTAGE and sc.plant.actuator_tau == 0.5
    assert sc.controller.deriv_delay_coeff == 0.2
    assert sc.controller.anti_windup is AntiWindup.BACK_CALCULATION
    assert sc.setpoint.points[1] == (2.5, 70.0)
    assert (sc.name, sc.duration, sc.seed, sc.noise_std, sc.substeps_per_sample) == ("custom", 60.0, 123, 0.5, 20)
    assert parse_scenario(render_scenario(sc)) == sc


@pytest.mark.parametrize(
    "text, line",
    [
        ("[plant]\ntype tank\n", 2),
        ("type = tank\n", 1),
        ("[plant]\ntype = tank\n[bogus]\n", 3),
        ("[plant]\ntype = tank\n[controller]\nkp = 1\nti = 1\n[profile]\nsetpoint = 0-20\n", 7),
    ],
)
def test_syntax_errors_carry_the_line(text, line):
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_scenario(MINIMAL + "gain = 3\n")
    assert exc.value.key == "gain"
    assert exc.value.line == 9


def test_flow_key_rejected_on_tank():
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace("type = tank", "type = tank\nq_max = 1"))


@pytest.mark.parametrize("missing", ["type = tank\n", "kp = 124.468\n", "ti = 7.22\n"])
def test_required_keys(missing):
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace(missing, ""))


def test_numbers_use_dot_decimal():
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace("kp = 124.468", "kp = 124,468"))
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace("kp = 124.468", "kp = nan"))


def test_duplicate_key():
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL + "kp = 1\n")


def test_schedule_must_start_at_zero():
    with pytest.raises(ConfigError) as exc:
        parse_scenario(MINIMAL + "[profile]\nsetpoint = 1:20\n")
    assert exc.value.line == 10


def test_load_by_name_and_path(tmp_path, fixtures):
    assert load_scenario("pump-pid") == fixtures["pump-pid"]
    path = tmp_path / "mine.scn"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_scenario(str(path)).name == "mine"
    with pytest.raises(ConfigError):
        load_scenario(str(tmp_path / "absent.scn"))


def test_fingerprint_tracks_content(fixtures):
    a = fixtures["level-pi"]
    assert scenario_fingerprint(a) == scenario_fingerprint(parse_scenario(render_scenario(a)))
    assert scenario_fingerprint(a) != scenario_fingerprint(a.with_changes(seed=1))
    assert len(scenario_fingerprint(a)) == 16

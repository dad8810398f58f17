"""Scenario files and the built-in PI/PID fixtures.

Scenario text::

    # comment
    [plant]
    type = tank            # tank | pump | valve
    [controller]
    kp = 124.468
    ti = 7.22              # `none` disables integral action
    [profile]
    setpoint = 0:20, 1:60
    disturbance = 0:0, 60:-10, 70:0
    [run]
    duration = 120
"""
import hashlib
import re
from dataclasses import fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .config import DEFAULTS, RunDefaults
from .controller import AntiWindup, PidConfig, make_pi
from .errors import ConfigError, ScenarioSyntaxError
from .plant import PUMP, VALVE, TankParams, pump_flow_params, valve_flow_params
from .simloop import LoopScenario, Schedule

TANK = "tank"

_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_FLOAT = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_INT = re.compile(r"^\d+$")

_TANK_KEYS = tuple(f.name for f in fields(TankParams))
_FLOW_KEYS = ("q_max", "actuator_tau", "valve_char", "rangeability", "span")
# file key -> PidConfig field
_CONTROLLER_KEYS = {
    "kp": "kp",
    "ti": "ti",
    "td": "td",
    "a": "deriv_delay_coeff",
    "beta": "beta",
    "alpha": "alpha",
    "ts": "ts",
    "u_min": "u_min",
    "u_max": "u_max",
    "anti_windup": "anti_windup",
}
_PROFILE_KEYS = ("setpoint", "disturbance")
_RUN_KEYS = ("name", "duration", "seed", "noise_std", "substeps")
_SECTIONS = ("plant", "controller", "profile", "run")


# Built-in fixtures


def _default_profile(defaults: RunDefaults = DEFAULTS) -> Dict:
    return dict(
        setpoint=Schedule(defaults.setpoint_points()),
        disturbance=Schedule(defaults.disturbance_points()),
        noise_std=defaults.noise_std,
        duration=defaults.duration,
        seed=defaults.seed,
        substeps_per_sample=defaults.substeps_per_sample,
    )


def builtin_scenarios() -> Dict[str, LoopScenario]:
    """The six table fixtures on their default plants, in table order."""
    level, pump, valve = TankParams(), pump_flow_params(), valve_flow_params()
    controllers = {
        "level-pi": (level, make_pi(kp=124.468, ti=7.220, beta=0.8, ts=0.0999998)),
        "level-pid": (level, PidConfig(kp=516.209, ti=1.047, td=0.2661543, deriv_delay_coeff=0.1,
                                       beta=0.2514394, alpha=0.0, ts=0.099998)),
        "pump-pi": (pump, make_pi(kp=6.799, ti=3.174, beta=0.8, ts=0.0999998)),
        "pump-pid": (pump, PidConfig(kp=1.049, ti=3.688, td=4.871, deriv_delay_coeff=0.1,
                                     beta=1.0, alpha=0.0, ts=0.1000025)),
        "valve-pi": (valve, make_pi(kp=15.326, ti=2.489, beta=0.8, ts=0.0999978)),
        "valve-pid": (valve, PidConfig(kp=6.647, ti=7.981, td=1.869, deriv_delay_coeff=0.1,
                                       beta=0.971, alpha=0.0, ts=0.0999998)),
    }
    profile = _default_profile()
    return {
        name: LoopScenario(name=name, plant=plant, controller=ctrl, **profile)
        for name, (plant, ctrl) in controllers.items()
    }


def load_scenario(name_or_path: str) -> LoopScenario:
    fixtures = builtin_scenarios()
    if name_or_path in fixtures:
        return fixtures[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(f"unknown scenario {name_or_path!r}: not a built-in name and no such file", key="scenario")
    return parse_scenario(path.read_text(encoding="utf-8"), default_name=path.stem)


# Parsing


def _number(raw: str, key: str, line: int) -> float:
    if not _FLOAT.match(raw):
        raise ConfigError(f"{key}: expected a number, got {raw!r}", key=key, line=line)
    return float(raw)


def _integer(raw: str, key: str, line: int) -> int:
    if not _INT.match(raw):
        raise ConfigError(f"{key}: expected a non-negative integer, got {raw!r}", key=key, line=line)
    return int(raw)


def _schedule(raw: str, key: str, line: int) -> Schedule:
    points: List[Tuple[float, float]] = []
    for item in raw.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise ScenarioSyntaxError(f"{key}: expected 'time:value' pairs, got {item.strip()!r}", key=key, line=line)
        points.append((_number(parts[0].strip(), key, line), _number(parts[1].strip(), key, line)))
    try:
        return Schedule(tuple(points))
    except ConfigError as e:
        raise ConfigError(f"{key}: {e}", key=key, line=line) from e


def _tokenize(text: str) -> Dict[str, Dict[str, Tuple[str, int]]]:
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {s: {} for s in _SECTIONS}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1).lower()
            if current not in sections:
                raise ScenarioSyntaxError(f"unknown section [{current}]", key=current, line=lineno)
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ScenarioSyntaxError(f"expected 'key = value', got {line!r}", line=lineno)
        if current is None:
            raise ScenarioSyntaxError("entry outside of a section", key=m.group(1), line=lineno)
        key, value = m.group(1).lower(), m.group(2).strip()
        if not value:
            raise ScenarioSyntaxError(f"{current}.{key}: missing value", key=key, line=lineno)
        if key in sections[current]:
            raise ConfigError(f"{current}.{key} given twice", key=key, line=lineno)
        sections[current][key] = (value, lineno)
    return sections


def _reject_unknown(section: str, entries: Dict[str, Tuple[str, int]], allowed) -> None:
    for key, (_, lineno) in entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}", key=key, line=lineno)


def _with_line(entries: Dict[str, Tuple[str, int]], err: ConfigError, aliases: Optional[Dict[str, str]] = None) -> ConfigError:
    # point an invariant violation back at the line that set the key
    if err.line is not None:
        return err
    key = err.key
    if aliases:
        key = next((k for k, v in aliases.items() if v == key), key)
    line = entries.get(key, (None, None))[1]
    return ConfigError(str(err), key=err.key, line=line)


def _parse_plant(entries: Dict[str, Tuple[str, int]]):
    if "type" not in entries:
        raise ConfigError("missing required key plant.type", key="type")
    kind, lineno = entries["type"]
    kind = kind.lower()
    if kind == TANK:
        _reject_unknown("plant", entries, ("type",) + _TANK_KEYS)
        kwargs = {k: _number(v, k, ln) for k, (v, ln) in entries.items() if k != "type"}
        factory = TankParams
    elif kind in (PUMP, VALVE):
        _reject_unknown("plant", entries, ("type",) + _FLOW_KEYS)
        kwargs = {}
        for k, (v, ln) in entries.items():
            if k == "type":
                continue
            kwargs[k] = v.lower() if k == "valve_char" else _number(v, k, ln)
        base = pump_flow_params() if kind == PUMP else valve_flow_params()
        factory = lambda **kw: replace(base, **kw)
    else:
        raise ConfigError(f"plant.type must be one of tank, pump, valve; got {kind!r}", key="type", line=lineno)
    try:
        return factory(**kwargs)
    except ConfigError as e:
        raise _with_line(entries, e) from e


def _parse_controller(entries: Dict[str, Tuple[str, int]]) -> PidConfig:
    _reject_unknown("controller", entries, tuple(_CONTROLLER_KEYS))
    for required in ("kp", "ti"):
        if required not in entries:
            raise ConfigError(f"missing required key controller.{required}", key=required)
    kwargs = {}
    for key, (value, lineno) in entries.items():
        name = _CONTROLLER_KEYS[key]
        if key == "anti_windup":
            kwargs[name] = value.lower()
        elif key == "ti" and value.lower() == "none":
            kwargs[name] = None
        else:
            kwargs[name] = _number(value, key, lineno)
    try:
        return PidConfig(**kwargs)
    except ConfigError as e:
        raise _with_line(entries, e, _CONTROLLER_KEYS) from e


def parse_scenario(text: str, default_name: str = "scenario", defaults: RunDefaults = DEFAULTS) -> LoopScenario:
    """Parse scenario text; omitted profile and run keys take the run defaults."""
    sections = _tokenize(text)
    plant = _parse_plant(sections["plant"])
    controller = _parse_controller(sections["controller"])

    profile = sections["profile"]
    _reject_unknown("profile", profile, _PROFILE_KEYS)
    kwargs = _default_profile(defaults)
    for key in _PROFILE_KEYS:
        if key in profile:
            value, lineno = profile[key]
            kwargs[key] = _schedule(value, key, lineno)

    run = sections["run"]
    _reject_unknown("run", run, _RUN_KEYS)
    name = run["name"][0] if "name" in run else default_name
    if "duration" in run:
        kwargs["duration"] = _number(run["duration"][0], "duration", run["duration"][1])
    if "noise_std" in run:
        kwargs["noise_std"] = _number(run["noise_std"][0], "noise_std", run["noise_std"][1])
    if "seed" in run:
        kwargs["seed"] = _integer(run["seed"][0], "seed", run["seed"][1])
    if "substeps" in run:
        kwargs["substeps_per_sample"] = _integer(run["substeps"][0], "substeps", run["substeps"][1])
    try:
        return LoopScenario(name=name, plant=plant, controller=controller, **kwargs)
    except ConfigError as e:
        raise _with_line(run, e) from e


# Rendering


def _schedule_text(schedule: Schedule) -> str:
    return ", ".join(f"{t!r}:{v!r}" for t, v in schedule.points)


def render_scenario(scenario: LoopScenario) -> str:
    """Scenario text that parses back to an equal scenario."""
    out = ["[plant]"]
    plant = scenario.plant
    if isinstance(plant, TankParams):
        out.append(f"type = {TANK}")
        out += [f"{k} = {getattr(plant, k)!r}" for k in _TANK_KEYS]
    else:
        out.append(f"type = {plant.kind}")
        out += [f"{k} = {getattr(plant, k)}" if k == "valve_char" else f"{k} = {getattr(plant, k)!r}" for k in _FLOW_KEYS]

    c = scenario.controller
    out += ["", "[controller]"]
    for key, name in _CONTROLLER_KEYS.items():
        value = getattr(c, name)
        if key == "anti_windup":
            out.append(f"{key} = {AntiWindup(value).value}")
        elif value is None:
            out.append(f"{key} = none")
        else:
            out.append(f"{key} = {float(value)!r}")

    out += [
        "",
        "[profile]",
        f"setpoint = {_schedule_text(scenario.setpoint)}",
        f"disturbance = {_schedule_text(scenario.disturbance)}",
        "",
        "[run]",
        f"name = {scenario.name}",
        f"duration = {float(scenario.duration)!r}",
        f"seed = {scenario.seed}",
        f"noise_std = {float(scenario.noise_std)!r}",
        f"substeps = {scenario.substeps_per_sample}",
    ]
    return "\n".join(out) + "\n"


def scenario_fingerprint(scenario: LoopScenario) -> str:
    return hashlib.sha1(render_scenario(scenario).encode("utf-8")).hexdigest()[:16]

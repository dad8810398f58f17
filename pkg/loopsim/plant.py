"""Lumped-parameter models of the three controlled processes.

Plants work in SI units internally; controllers only ever see the
measurement in percent of span (see ``measure``).
"""
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, NumericDomainError, NumericFailure

PUMP = "pump"
VALVE = "valve"
LINEAR = "linear"
EQUAL_PERCENTAGE = "equal-percentage"


def _require_positive(owner: str, **fields: float) -> None:
    for name, value in fields.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
            raise ConfigError(f"{owner}.{name} must be finite and > 0, got {value!r}", key=name)


def _require_finite(what: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NumericDomainError(f"non-finite {what}: {values!r}")


def _check_drive(u: float) -> None:
    _require_finite("drive", u)
    if u < 0.0 or u > 100.0:
        raise ConfigError(f"drive must be within [0, 100] %, got {u!r}", key="u")


# Coupled tanks


@dataclass(frozen=True)
class TankParams:
    area_1: float = 0.0154
    area_2: float = 0.0154
    coeff_12: float = 1.5e-4  # m^(5/2)/s
    coeff_out: float = 1.5e-4
    h_max: float = 0.6
    pump_gain: float = 1.0e-6  # m3/s per % drive
    pump_tau: float = 0.5
    span: float = 0.5

    def __post_init__(self):
        _require_positive(
            "plant",
            area_1=self.area_1,
            area_2=self.area_2,
            coeff_12=self.coeff_12,
            coeff_out=self.coeff_out,
            h_max=self.h_max,
            pump_gain=self.pump_gain,
            pump_tau=self.pump_tau,
            span=self.span,
        )

    @property
    def kind(self) -> str:
        return "tank"

    def pv_of(self, state: "TankState") -> float:
        return 100.0 * state.h1 / self.span

    def clean_of(self, state: "TankState") -> float:
        return state.h1

    def disturbance_from_percent(self, value: float) -> float:
        # percent of actuator span -> m3/s
        return value * self.pump_gain

    def equilibrium(self, pv: float) -> "TankState":
        h1 = pv / 100.0 * self.span
        if h1 < 0.0 or h1 > self.h_max:
            raise ConfigError(f"no equilibrium at pv={pv!r} % (level outside [0, h_max])", key="pv")
        if h1 == 0.0:
            return TankState()
        q = math.sqrt(h1 / (1.0 / self.coeff_12 ** 2 + 1.0 / self.coeff_out ** 2))
        h2 = (q / self.coeff_out) ** 2
        return TankState(h1=h1, h2=h2, q_pump=q)

    def drive_for(self, pv: float) -> float:
        return self.equilibrium(pv).q_pump / self.pump_gain


@dataclass(frozen=True)
class TankState:
    h1: float = 0.0
    h2: float = 0.0
    q_pump: float = 0.0
    # cumulative volumes (m3) integrated alongside the levels
    vol_in: float = 0.0
    vol_out: float = 0.0
    clamped: bool = False

    def stored_volume(self, params: TankParams) -> float:
        return params.area_1 * self.h1 + params.area_2 * self.h2


class TankDerivatives(NamedTuple):
    dh1: float
    dh2: float
    dq_pump: float
    q12: float
    q_in: float
    q_out: float


def coupling_flow(h1: float, h2: float, coeff_12: float) -> float:
    dh = h1 - h2
    return coeff_12 * math.copysign(math.sqrt(abs(dh)), dh)


def _tank_rates(h1: float, h2: float, q_pump: float, u: float, d: float, p: TankParams) -> TankDerivatives:
    q12 = coupling_flow(h1, h2, p.coeff_12)
    q_out = p.coeff_out * math.sqrt(h2) if h2 > 0.0 else 0.0
    q_in = q_pump + d
    return TankDerivatives(
        dh1=(q_in - q12) / p.area_1,
        dh2=(q12 - q_out) / p.area_2,
        dq_pump=(p.pump_gain * u - q_pump) / p.pump_tau,
        q12=q12,
        q_in=q_in,
        q_out=q_out,
    )


def tank_derivatives(state: TankState, params: TankParams, u: float, d: float) -> TankDerivatives:
    _require_finite("tank state", state.h1, state.h2, state.q_pump)
    _require_finite("tank input", u, d)
    _check_drive(u)
    return _tank_rates(state.h1, state.h2, state.q_pump, u, d, params)


# Pump / valve driven flow


@dataclass(frozen=True)
class FlowPlantParams:
    kind: str = PUMP
    q_max: float = 1.5e-4
    actuator_tau: float = 1.0
    valve_char: str = LINEAR
    rangeability: float = 30.0
    span: float = 1.5e-4

    def __post_init__(self):
        if self.kind not in (PUMP, VALVE):
            raise ConfigError(f"plant.type must be '{PUMP}' or '{VALVE}', got {self.kind!r}", key="type")
        if self.valve_char not in (LINEAR, EQUAL_PERCENTAGE):
            raise ConfigError(f"plant.valve_char must be '{LINEAR}' or '{EQUAL_PERCENTAGE}'", key="valve_char")
        _require_positive("plant", q_max=self.q_max, actuator_tau=self.actuator_tau, span=self.span)
        if self.valve_char == EQUAL_PERCENTAGE and not self.rangeability > 1.0:
            raise ConfigError("plant.rangeability must be > 1 for an equal-percentage valve", key="rangeability")

    def characteristic(self, x: float) -> float:
        if self.valve_char == LINEAR:
            return x
        if x <= 0.0:
            return 0.0
        return self.rangeability ** (x - 1.0)

    def characteristic_slope(self, x: float) -> float:
        if self.valve_char == LINEAR:
            return 1.0
        if x <= 0.0:
            return 0.0
        return math.log(self.rangeability) * self.rangeability ** (x - 1.0)

    def position_for(self, fraction: float) -> float:
        if self.valve_char == LINEAR:
            return fraction
        if fraction <= 0.0:
            return 0.0
        return max(0.0, 1.0 + math.log(fraction) / math.log(self.rangeability))

    def delivered(self, pos: float, d: float) -> float:
        return self.q_max * self.characteristic(pos) * (1.0 + d)

    def pv_of(self, state: "FlowPlantState") -> float:
        return 100.0 * state.q / self.span

    def clean_of(self, state: "FlowPlantState") -> float:
        return state.q

    def disturbance_from_percent(self, value: float) -> float:
        return value / 100.0

    def equilibrium(self, pv: float) -> "FlowPlantState":
        q = pv / 100.0 * self.span
        if q < 0.0 or q > self.q_max:
            raise ConfigError(f"no equilibrium at pv={pv!r} % (flow outside [0, q_max])", key="pv")
        pos = self.position_for(q / self.q_max)
        return FlowPlantState(actuator_pos=pos, q=self.delivered(pos, 0.0))

    def drive_for(self, pv: float) -> float:
        return 100.0 * self.equilibrium(pv).actuator_pos


def pump_flow_params() -> FlowPlantParams:
    return FlowPlantParams(kind=PUMP, actuator_tau=1.0)


def valve_flow_params() -> FlowPlantParams:
    return FlowPlantParams(kind=VALVE, actuator_tau=0.5)


@dataclass(frozen=True)
class FlowPlantState:
    actuator_pos: float = 0.0
    q: float = 0.0
    clamped: bool = False


class FlowDerivatives(NamedTuple):
    dpos: float
    dq: float
    q_target: float


def flow_derivatives(state: FlowPlantState, params: FlowPlantParams, u: float, d: float) -> FlowDerivatives:
    _require_finite("flow state", state.actuator_pos, state.q)
    _require_finite("flow input", u, d)
    _check_drive(u)
    dpos = (u / 100.0 - state.actuator_pos) / params.actuator_tau
    # q is algebraic in the position, so it moves with the chain rule
    dq = params.q_max * params.characteristic_slope(state.actuator_pos) * (1.0 + d) * dpos
    return FlowDerivatives(dpos=dpos, dq=dq, q_target=params.delivered(state.actuator_pos, d))


PlantParams = Union[TankParams, FlowPlantParams]
PlantState = Union[TankState, FlowPlantState]


# Integration


def rk4_step(f: Callable[[Sequence[float]], Sequence[float]], y: Sequence[float], h: float) -> Tuple[float, ...]:
    """Classical fixed-step 4th-order Runge-Kutta for autonomous y' = f(y)."""
    k1 = f(y)
    k2 = f([a + 0.5 * h * b for a, b in zip(y, k1)])
    k3 = f([a + 0.5 * h * b for a, b in zip(y, k2)])
    k4 = f([a + h * b for a, b in zip(y, k3)])
    return tuple(a + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def _clip(x: float, lo: float, hi: float) -> Tuple[float, bool]:
    if x < lo:
        return lo, True
    if x > hi:
        return hi, True
    return x, False


def _step_tank(state: TankState, p: TankParams, u: float, d: float, dt: float) -> TankState:
    def f(y):
        r = _tank_rates(y[0], y[1], y[2], u, d, p)
        return (r.dh1, r.dh2, r.dq_pump, r.q_in, r.q_out)

    y = rk4_step(f, (state.h1, state.h2, state.q_pump, state.vol_in, state.vol_out), dt)
    if not all(math.isfinite(v) for v in y):
        raise NumericFailure("tank integration produced a non-finite state", state=y)
    h1, c1 = _clip(y[0], 0.0, p.h_max)
    h2, c2 = _clip(y[1], 0.0, p.h_max)
    q, c3 = _clip(y[2], 0.0, math.inf)
    return TankState(h1=h1, h2=h2, q_pump=q, vol_in=y[3], vol_out=y[4], clamped=c1 or c2 or c3)


def _step_flow(state: FlowPlantState, p: FlowPlantParams, u: float, d: float, dt: float) -> FlowPlantState:
    target = u / 100.0

    def f(y):
        return ((target - y[0]) / p.actuator_tau,)

    (pos_raw,) = rk4_step(f, (state.actuator_pos,), dt)
    if not math.isfinite(pos_raw):
        raise NumericFailure("flow integration produced a non-finite state", state=(pos_raw,))
    pos, c1 = _clip(pos_raw, 0.0, 1.0)
    q, c2 = _clip(p.delivered(pos, d), 0.0, p.q_max)
    return FlowPlantState(actuator_pos=pos, q=q, clamped=c1 or c2)


def step_plant(state: PlantState, params: PlantParams, u: float, d: float, dt: float) -> PlantState:
    """Advance one integration substep with u and d held constant."""
    if not dt > 0.0:
        raise ConfigError(f"dt must be > 0, got {dt!r}", key="dt")
    _require_finite("plant input", u, d)
    _check_drive(u)
    if isinstance(params, TankParams):
        return _step_tank(state, params, u, d, dt)
    if isinstance(params, FlowPlantParams):
        return _step_flow(state, params, u, d, dt)
    raise ConfigError(f"unknown plant parameters {type(params).__name__}", key="plant")


# Measurement


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def measure(clean_pv: float, span: float, noise_std: float, rng: np.random.Generator) -> Tuple[float, np.random.Generator]:
    """Scale to percent of span and add gaussian noise.

    One normal variate is drawn per call whatever ``noise_std`` is, so two
    runs with the same seed consume the stream in lockstep.
    """
    z = rng.standard_normal()
    pv = 100.0 * clean_pv / span + noise_std * z
    return min(100.0, max(0.0, pv)), rng

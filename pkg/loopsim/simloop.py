"""Sampled closed-loop executor.

Within one sample: measure -> control law -> hold u (and the disturbance)
over ``substeps_per_sample`` plant integration substeps.
"""
import bisect
from collections import deque
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .controller import PidConfig, PidState, bumpless_state, pid_step
from .errors import ConfigError, NumericDomainError, NumericFailure
from .plant import PlantParams, PlantState, make_rng, measure, step_plant

log = logging.getLogger(__name__)

# Control law signature: (w, pv) -> u
ControlLaw = Callable[[float, float], float]


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant schedule of (time s, value)."""

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        if not pts:
            raise ConfigError("schedule must not be empty", key="schedule")
        if pts[0][0] != 0.0:
            raise ConfigError("schedule must start at t=0", key="schedule")
        for (t0, _), (t1, _) in zip(pts, pts[1:]):
            if not t1 > t0:
                raise ConfigError("schedule times must be strictly increasing", key="schedule")
        for t, v in pts:
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ConfigError("schedule entries must be finite", key="schedule")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_times", [t for t, _ in pts])

    @staticmethod
    def constant(value: float) -> "Schedule":
        return Schedule(((0.0, value),))

    def value_at(self, t: float) -> float:
        i = bisect.bisect_right(self._times, t) - 1
        return self.points[max(i, 0)][1]

    def first_step(self) -> Optional[Tuple[float, float, float]]:
        """(time, value before, value after) of the first change, if any."""
        for (_, v0), (t1, v1) in zip(self.points, self.points[1:]):
            if v1 != v0:
                return t1, v0, v1
        return None


@dataclass(frozen=True)
class LoopScenario:
    name: str
    plant: PlantParams
    controller: PidConfig
    setpoint: Schedule
    disturbance: Schedule = field(default_factory=lambda: Schedule.constant(0.0))
    noise_std: float = 0.0
    duration: float = 120.0
    seed: int = 0
    substeps_per_sample: int = 10
    initial_state: Optional[PlantState] = None  # None: equilibrium at the initial setpoint

    def __post_init__(self):
        if not (isinstance(self.duration, (int, float)) and math.isfinite(self.duration) and self.duration > 0):
            raise ConfigError(f"run.duration must be > 0, got {self.duration!r}", key="duration")
        if not (isinstance(self.noise_std, (int, float)) and math.isfinite(self.noise_std) and self.noise_std >= 0):
            raise ConfigError(f"run.noise_std must be >= 0, got {self.noise_std!r}", key="noise_std")
        if isinstance(self.substeps_per_sample, bool) or not isinstance(self.substeps_per_sample, int) or self.substeps_per_sample < 1:
            raise ConfigError(f"run.substeps must be an integer >= 1, got {self.substeps_per_sample!r}", key="substeps")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"run.seed must be a 64-bit unsigned integer, got {self.seed!r}", key="seed")

    @property
    def ts(self) -> float:
        return self.controller.ts

    def start_state(self) -> PlantState:
        if self.initial_state is not None:
            return self.initial_state
        return self.plant.equilibrium(self.setpoint.value_at(0.0))

    def with_changes(self, **changes) -> "LoopScenario":
        return replace(self, **changes)


@dataclass
class SimTrace:
    ts: float
    t: np.ndarray
    setpoint: np.ndarray
    pv: np.ndarray
    pv_clean: np.ndarray
    u: np.ndarray
    disturbance: np.ndarray
    clamped: np.ndarray
    name: str = ""
    final_state: Optional[PlantState] = None

    COLUMNS = ("t", "setpoint", "pv", "pv_clean", "u", "disturbance")

    def __len__(self) -> int:
        return len(self.t)

    @staticmethod
    def from_columns(ts: float, t, setpoint, pv_clean, pv=None, u=None, disturbance=None, name: str = "") -> "SimTrace":
        t = np.asarray(t, dtype=float)
        n = len(t)
        pv_clean = np.asarray(pv_clean, dtype=float)
        return SimTrace(
            ts=ts,
            t=t,
            setpoint=np.asarray(setpoint, dtype=float) * np.ones(n),
            pv=pv_clean.copy() if pv is None else np.asarray(pv, dtype=float),
            pv_clean=pv_clean,
            u=np.zeros(n) if u is None else np.asarray(u, dtype=float),
            disturbance=np.zeros(n) if disturbance is None else np.asarray(disturbance, dtype=float),
            clamped=np.zeros(n, dtype=bool),
            name=name,
        )

    def window_mask(self, window: Tuple[float, float]) -> np.ndarray:
        t0, t1 = window
        eps = 1e-9 * max(1.0, self.ts)
        return (self.t >= t0 - eps) & (self.t <= t1 + eps)


def sample_count(duration: float, ts: float) -> int:
    return max(1, int(math.ceil(duration / ts - 1e-9)))


def simulate(
    plant: PlantParams,
    start: PlantState,
    ts: float,
    duration: float,
    setpoint: Schedule,
    disturbance: Schedule,
    law: ControlLaw,
    noise_std: float = 0.0,
    seed: int = 0,
    substeps: int = 10,
    name: str = "",
) -> SimTrace:
    """Run a sampled loop with an arbitrary control law."""
    n = sample_count(duration, ts)
    dt = ts / substeps
    rng = make_rng(seed)
    state = start

    t_col = np.empty(n)
    w_col = np.empty(n)
    pv_col = np.empty(n)
    clean_col = np.empty(n)
    u_col = np.empty(n)
    d_col = np.empty(n)
    clamp_col = np.zeros(n, dtype=bool)

    for k in range(n):
        t = k * ts
        w = setpoint.value_at(t)
        dist = disturbance.value_at(t)
        clean = plant.pv_of(state)
        pv, rng = measure(plant.clean_of(state), plant.span, noise_std, rng)
        u = law(w, pv)
        drive = min(100.0, max(0.0, u))
        d = plant.disturbance_from_percent(dist)
        clamped = False
        try:
            for _ in range(substeps):
                state = step_plant(state, plant, drive, d, dt)
                clamped = clamped or state.clamped
        except (NumericFailure, NumericDomainError) as exc:
            raise NumericFailure(str(exc), state=getattr(exc, "state", state), sample_index=k) from exc

        t_col[k] = t
        w_col[k] = w
        pv_col[k] = pv
        clean_col[k] = clean
        u_col[k] = drive
        d_col[k] = dist
        clamp_col[k] = clamped

    return SimTrace(
        ts=ts, t=t_col, setpoint=w_col, pv=pv_col, pv_clean=clean_col,
        u=u_col, disturbance=d_col, clamped=clamp_col, name=name, final_state=state,
    )


class PidLaw:
    def __init__(self, config: PidConfig, state: Optional[PidState] = None):
        self.config = config
        self.state = state or PidState()

    def __call__(self, w: float, y: float) -> float:
        u, self.state = pid_step(self.config, self.state, w, y)
        return u


def run_closed_loop(scenario: LoopScenario) -> SimTrace:
    plant = scenario.plant
    start = scenario.start_state()
    w0 = scenario.setpoint.value_at(0.0)
    y0 = plant.pv_of(start)
    if scenario.initial_state is None:
        # start at rest: the loop holds the equilibrium drive until the profile moves
        state = bumpless_state(scenario.controller, w0, y0, plant.drive_for(y0))
    else:
        state = PidState()
    law = PidLaw(scenario.controller, state)
    log.debug("仿真 %s: %d 个采样点", scenario.name, sample_count(scenario.duration, scenario.ts))
    return simulate(
        plant, start, scenario.ts, scenario.duration, scenario.setpoint, scenario.disturbance, law,
        noise_std=scenario.noise_std, seed=scenario.seed, substeps=scenario.substeps_per_sample, name=scenario.name,
    )


def run_pair(scenario_a: LoopScenario, scenario_b: LoopScenario) -> Tuple[SimTrace, SimTrace]:
    return run_closed_loop(scenario_a), run_closed_loop(scenario_b)


class RelayLaw:
    """On/off relay around a bias drive, with a hysteresis band on the error.

    Starts on the high side; ``hysteresis`` is the full band width in %.
    ``delay`` holds each decision back that many calls.
    """

    def __init__(self, bias: float, amplitude: float, hysteresis: float = 1.0, delay: int = 0):
        self.bias = bias
        self.amplitude = amplitude
        self.half_band = hysteresis / 2.0
        self.high = True
        self._pending = deque([bias + amplitude] * delay)

    def __call__(self, w: float, y: float) -> float:
        e = w - y
        if self.high and e < -self.half_band:
            self.high = False
        elif not self.high and e > self.half_band:
            self.high = True
        out = self.bias + self.amplitude if self.high else self.bias - self.amplitude
        if not self._pending:
            return out
        self._pending.append(out)
        return self._pending.popleft()


class ProportionalLaw:
    def __init__(self, kp: float, bias: float):
        self.kp = kp
        self.bias = bias

    def __call__(self, w: float, y: float) -> float:
        return self.bias + self.kp * (w - y)

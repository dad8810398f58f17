"""Discrete two-degree-of-freedom PID with derivative filter and anti-windup.

Backward-difference realization:

    P   = beta*w - y
    I_k = I_{k-1} + (ts/ti)*(w - y)
    D_k = Tf/(Tf+ts)*D_{k-1} + td/(Tf+ts)*(d_in - d_in_prev),  d_in = alpha*w - y,  Tf = a*td
    u   = clamp(kp*(P + I_k + D_k), u_min, u_max)

PI is the td = 0, alpha = 0 case.
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

from .errors import ConfigError


class AntiWindup(str, Enum):
    CONDITIONAL = "conditional-integration"
    BACK_CALCULATION = "back-calculation"
    NONE = "none"


def _finite(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"controller.{name} must be a finite number, got {value!r}", key=name)
    return float(value)


@dataclass(frozen=True)
class PidConfig:
    kp: float
    ti: Optional[float]  # None disables integral action
    td: float = 0.0
    deriv_delay_coeff: float = 0.1
    beta: float = 1.0
    alpha: float = 0.0
    ts: float = 0.1
    u_min: float = 0.0
    u_max: float = 100.0
    anti_windup: AntiWindup = AntiWindup.CONDITIONAL

    def __post_init__(self):
        kp = _finite("kp", self.kp)
        ts = _finite("ts", self.ts)
        td = _finite("td", self.td)
        a = _finite("deriv_delay_coeff", self.deriv_delay_coeff)
        beta = _finite("beta", self.beta)
        alpha = _finite("alpha", self.alpha)
        u_min = _finite("u_min", self.u_min)
        u_max = _finite("u_max", self.u_max)
        if kp <= 0:
            raise ConfigError(f"controller.kp must be > 0, got {kp!r}", key="kp")
        if ts <= 0:
            raise ConfigError(f"controller.ts must be > 0, got {ts!r}", key="ts")
        if td < 0:
            raise ConfigError(f"controller.td must be >= 0, got {td!r}", key="td")
        if self.ti is not None and _finite("ti", self.ti) <= 0:
            raise ConfigError(f"controller.ti must be > 0 (or none to disable integral action), got {self.ti!r}", key="ti")
        if not 0.0 <= beta <= 1.0:
            raise ConfigError(f"controller.beta must be within [0, 1], got {beta!r}", key="beta")
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"controller.alpha must be within [0, 1], got {alpha!r}", key="alpha")
        if td > 0 and a <= 0:
            raise ConfigError("controller.deriv_delay_coeff must be > 0 when td > 0", key="deriv_delay_coeff")
        if not u_min < u_max:
            raise ConfigError(f"controller.u_min must be < u_max, got {u_min!r} >= {u_max!r}", key="u_min")
        try:
            object.__setattr__(self, "anti_windup", AntiWindup(self.anti_windup))
        except ValueError:
            raise ConfigError(f"controller.anti_windup unknown: {self.anti_windup!r}", key="anti_windup")

    @property
    def tf(self) -> float:
        return self.deriv_delay_coeff * self.td

    @property
    def is_pi(self) -> bool:
        return self.td == 0.0 and self.alpha == 0.0

    def with_changes(self, **changes) -> "PidConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class PidState:
    integral_sum: float = 0.0
    prev_deriv_input: float = 0.0
    deriv_state: float = 0.0
    last_saturated: bool = False
    last_raw: float = 0.0
    primed: bool = False


def reset(state: Optional[PidState] = None) -> PidState:
    return PidState()


def make_pi(
    kp: float,
    ti: Optional[float],
    beta: float,
    ts: float,
    limits: Tuple[float, float] = (0.0, 100.0),
    deriv_delay_coeff: float = 0.1,
    anti_windup: AntiWindup = AntiWindup.CONDITIONAL,
) -> PidConfig:
    return PidConfig(
        kp=kp,
        ti=ti,
        td=0.0,
        deriv_delay_coeff=deriv_delay_coeff,
        beta=beta,
        alpha=0.0,
        ts=ts,
        u_min=limits[0],
        u_max=limits[1],
        anti_windup=anti_windup,
    )


def bumpless_state(config: PidConfig, w: float, y: float, u0: float) -> PidState:
    """State whose next output, for unchanged w and y, is u0."""
    p = config.beta * w - y
    integral = u0 / config.kp - p if config.ti is not None else 0.0
    return PidState(
        integral_sum=integral,
        prev_deriv_input=config.alpha * w - y,
        deriv_state=0.0,
        last_saturated=False,
        last_raw=u0,
        primed=True,
    )


def pid_step(config: PidConfig, state: PidState, w: float, y: float) -> Tuple[float, PidState]:
    kp, ts = config.kp, config.ts
    e = w - y
    p = config.beta * w - y

    d_in = config.alpha * w - y
    prev_d_in = state.prev_deriv_input if state.primed else d_in
    if config.td > 0.0:
        tf = config.tf
        deriv = (tf / (tf + ts)) * state.deriv_state + (config.td / (tf + ts)) * (d_in - prev_d_in)
    else:
        deriv = 0.0

    integral = state.integral_sum
    candidate = integral
    if config.ti is not None:
        step = (ts / config.ti) * e
        if config.anti_windup == AntiWindup.CONDITIONAL:
            # freeze while the output, before this increment, already sits on the limit the error pushes toward
            held = kp * (p + integral + deriv)
            if not ((held >= config.u_max and e > 0) or (held <= config.u_min and e < 0)):
                candidate = integral + step
        else:
            candidate = integral + step

    raw = kp * (p + candidate + deriv)
    high = raw > config.u_max
    low = raw < config.u_min

    u = min(config.u_max, max(config.u_min, raw))

    if config.ti is not None and config.anti_windup == AntiWindup.BACK_CALCULATION:
        # tracking time Tt = ti
        candidate = candidate + (ts / config.ti) * (u - raw) / kp

    nxt = PidState(
        integral_sum=candidate,
        prev_deriv_input=d_in,
        deriv_state=deriv,
        last_saturated=high or low,
        last_raw=raw,
        primed=True,
    )
    return u, nxt

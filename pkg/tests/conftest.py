import math

import numpy as np
import pytest

from loopsim.plant import TankParams
from loopsim.scenarios import builtin_scenarios
from loopsim.simloop import LoopScenario, Schedule, SimTrace


@pytest.fixture(scope="session")
def fixtures():
    return builtin_scenarios()


@pytest.fixture
def level_plant():
    return TankParams()


def small_step_scenario(controller, name="small-step", duration=20.0, noise_std=0.0, seed=0, step=0.02):
    """Level loop resting at 50 % with a step small enough that ZN-scale gains stay unsaturated."""
    return LoopScenario(
        name=name,
        plant=TankParams(),
        controller=controller,
        setpoint=Schedule(((0.0, 50.0), (1.0, 50.0 + step))),
        noise_std=noise_std,
        duration=duration,
        seed=seed,
    )


def second_order_trace(zeta, wn=1.0, ts=0.01, duration=30.0, w_before=0.0, w_after=1.0):
    """Closed-form unit step response of wn^2 / (s^2 + 2 zeta wn s + wn^2)."""
    t = np.arange(int(round(duration / ts)) + 1) * ts
    if zeta < 1.0:
        wd = wn * math.sqrt(1.0 - zeta ** 2)
        phi = math.acos(zeta)
        y = 1.0 - np.exp(-zeta * wn * t) * np.sin(wd * t + phi) / math.sqrt(1.0 - zeta ** 2)
    else:
        y = 1.0 - (1.0 + wn * t) * np.exp(-wn * t)
    pv = w_before + (w_after - w_before) * y
    return SimTrace.from_columns(ts, t, w_after, pv)


# relay estimate on the default level plant at 50 %, amplitude 40, no hysteresis
LEVEL_RELAY_AMPLITUDE = 40.0

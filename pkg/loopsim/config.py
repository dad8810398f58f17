from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class RunDefaults:
    duration: float = 120.0
    step_time: float = 1.0
    setpoint_before: float = 20.0
    setpoint_after: float = 60.0

    # pulse, percent of actuator span
    disturbance_start: float = 60.0
    disturbance_end: float = 70.0
    disturbance_value: float = -10.0

    noise_std: float = 0.0
    seed: int = 0
    substeps_per_sample: int = 10

    def setpoint_points(self) -> Tuple[Tuple[float, float], ...]:
        return ((0.0, self.setpoint_before), (self.step_time, self.setpoint_after))

    def disturbance_points(self) -> Tuple[Tuple[float, float], ...]:
        return (
            (0.0, 0.0),
            (self.disturbance_start, self.disturbance_value),
            (self.disturbance_end, 0.0),
        )


DEFAULTS = RunDefaults()

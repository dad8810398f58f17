"""Step-response quality metrics computed from a SimTrace.

All time metrics are measured from the step onset (the first sample in the
window whose setpoint equals the new value); errors use the noise-free PV.
The settling band is +-2 % of the step magnitude |w_after - w_before|, centred on w_after.
"""
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .errors import MetricsError
from .simloop import SimTrace

SETTLING_BAND = 0.02
STEADY_STATE_FRACTION = 0.1

PI = "pi"
PID = "pid"
TIE = "tie"

# metric name -> True when a larger value is better
METRIC_ORDER: Tuple[Tuple[str, bool], ...] = (
    ("overshoot", False),
    ("rise_time", False),
    ("settling_time", False),
    ("steady_state_error", False),
    ("iae", False),
    ("ise", False),
    ("itae", False),
    ("control_variance", False),
    ("settled", True),
)


@dataclass(frozen=True)
class StepMetrics:
    overshoot: float
    rise_time: Optional[float]
    settling_time: Optional[float]
    steady_state_error: float
    iae: float
    ise: float
    itae: float
    control_variance: float
    settled: bool

    def to_dict(self) -> Dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: Dict) -> "StepMetrics":
        return StepMetrics(**{name: d.get(name) for name, _ in METRIC_ORDER})


def _window(trace: SimTrace, window: Tuple[float, float]) -> np.ndarray:
    t0, t1 = window
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 < t0:
        raise MetricsError(f"invalid window {window!r}")
    mask = trace.window_mask(window)
    if not mask.any():
        raise MetricsError(f"window {window!r} contains no samples")
    return mask


def _first_crossing(t: np.ndarray, r: np.ndarray, level: float) -> Optional[float]:
    """Linearly interpolated time at which r first reaches ``level``."""
    hits = np.nonzero(r >= level)[0]
    if len(hits) == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return float(t[0])
    r0, r1 = r[i - 1], r[i]
    frac = (level - r0) / (r1 - r0)
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def error_integrals(trace: SimTrace, window: Tuple[float, float]) -> Tuple[float, float, float]:
    """(IAE, ISE, ITAE) of e = setpoint - pv_clean, trapezoidal rule.

    ITAE weights by time since the window start.
    """
    mask = _window(trace, window)
    t = trace.t[mask]
    if len(t) < 2:
        return 0.0, 0.0, 0.0
    e = np.abs(trace.setpoint[mask] - trace.pv_clean[mask])
    iae = float(trapezoid(e, t))
    ise = float(trapezoid(e * e, t))
    itae = float(trapezoid((t - window[0]) * e, t))
    return iae, ise, itae


def step_metrics(trace: SimTrace, window: Tuple[float, float], step: Tuple[float, float]) -> StepMetrics:
    w_before, w_after = float(step[0]), float(step[1])
    magnitude = w_after - w_before
    if magnitude == 0.0 or not math.isfinite(magnitude):
        raise MetricsError(f"degenerate step {step!r}")
    mask = _window(trace, window)
    t_all = trace.t[mask]
    y_all = trace.pv_clean[mask]

    onset_hits = np.nonzero(np.isclose(trace.setpoint[mask], w_after, rtol=0.0, atol=1e-12))[0]
    start = int(onset_hits[0]) if len(onset_hits) else 0
    onset = float(t_all[start])
    t = t_all[start:]
    y = y_all[start:]

    # normalised response: 0 before the step, 1 at the new setpoint (mirrors downward steps)
    r = (y - w_before) / magnitude
    overshoot = max(0.0, float(r.max()) - 1.0) * 100.0

    t10 = _first_crossing(t, r, 0.1)
    t90 = _first_crossing(t, r, 0.9)
    rise_time = t90 - t10 if t10 is not None and t90 is not None else None

    outside = np.nonzero(np.abs(y - w_after) > SETTLING_BAND * abs(magnitude))[0]
    if len(outside) == 0:
        settling_time = 0.0
    elif outside[-1] == len(y) - 1:
        settling_time = None
    else:
        settling_time = float(t[outside[-1] + 1]) - onset

    n_tail = max(1, int(math.ceil(STEADY_STATE_FRACTION * len(t_all))))
    steady_state_error = float(np.mean(np.abs(trace.setpoint[mask][-n_tail:] - y_all[-n_tail:])))

    iae, ise, itae = error_integrals(trace, window)
    u = trace.u[mask]
    control_variance = float(np.var(np.diff(u))) if len(u) > 1 else 0.0

    return StepMetrics(
        overshoot=overshoot,
        rise_time=rise_time,
        settling_time=settling_time,
        steady_state_error=steady_state_error,
        iae=iae,
        ise=ise,
        itae=itae,
        control_variance=control_variance,
        settled=settling_time is not None,
    )


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    pi: object
    pid: object
    winner: str
    ratio: Optional[float]  # pi / pid


def _winner(a, b, larger_is_better: bool) -> str:
    # an undefined time counts as worse than any defined one
    if a is None and b is None:
        return TIE
    if a is None:
        return PID
    if b is None:
        return PI
    if a == b:
        return TIE
    if larger_is_better:
        return PI if a > b else PID
    return PI if a < b else PID


def ratio(a, b) -> Optional[float]:
    if a is None or b is None or isinstance(a, bool) or isinstance(b, bool):
        return None
    if a == b:
        return 1.0
    if b == 0:
        return None
    return float(a) / float(b)


@dataclass(frozen=True)
class Comparison:
    rows: Tuple[MetricComparison, ...]

    def row(self, metric: str) -> MetricComparison:
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)

    def winner(self, metric: str) -> str:
        return self.row(metric).winner

    def wins(self) -> Dict[str, int]:
        counts = {PI: 0, PID: 0, TIE: 0}
        for r in self.rows:
            counts[r.winner] += 1
        return counts


def compare(m_pi: StepMetrics, m_pid: StepMetrics) -> Comparison:
    rows: List[MetricComparison] = []
    for name, larger_is_better in METRIC_ORDER:
        a = getattr(m_pi, name)
        b = getattr(m_pid, name)
        rows.append(MetricComparison(name, a, b, _winner(a, b, larger_is_better), ratio(a, b)))
    return Comparison(tuple(rows))

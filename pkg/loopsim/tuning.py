"""Relay identification, Ziegler-Nichols rules and ITAE autotuning."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .controller import PidConfig
from .errors import ConfigError, IdentificationError, NumericDomainError, NumericFailure, TuningError
from .metrics import error_integrals
from .simloop import LoopScenario, ProportionalLaw, RelayLaw, Schedule, SimTrace, run_closed_loop, simulate

log = logging.getLogger(__name__)

PENALTY = 1e12
DIVERGENCE_LIMIT = 1000.0  # 10x span, in %

# search box; kp/ti/td are searched in log10 space
BOUNDS: Dict[str, Tuple[float, float]] = {
    "kp": (1e-2, 1e4),
    "ti": (1e-2, 1e3),
    "td": (1e-4, 1e2),
    "beta": (0.0, 1.0),
}
LOG_SCALED = ("kp", "ti", "td")


@dataclass(frozen=True)
class UltimateParams:
    ku: float
    tu: float

    def __post_init__(self):
        for name in ("ku", "tu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}", key=name)


@dataclass(frozen=True)
class TuneResult:
    config: PidConfig
    objective_initial: float
    objective_final: float
    evaluations: int
    converged: bool
    history: Tuple[float, ...] = ()  # incumbent objective after each evaluation


def _hold_scenario(scenario: LoopScenario) -> Tuple[float, float]:
    w = scenario.setpoint.value_at(0.0)
    return w, scenario.plant.drive_for(w)


def relay_trace(scenario: LoopScenario, amplitude: float, hysteresis: float = 1.0) -> SimTrace:
    """Relay experiment at the integration step.

    The sampled controller's zero-order hold is modelled as half a sample of
    dead time on the relay output, so the limit cycle sits at the phase
    crossover of the sampled loop without being quantized to whole samples.
    """
    w, bias = _hold_scenario(scenario)
    substeps = scenario.substeps_per_sample
    dt = scenario.ts / substeps
    law = RelayLaw(bias, amplitude, hysteresis, delay=max(1, substeps // 2))
    return simulate(
        scenario.plant, scenario.plant.equilibrium(w), dt, scenario.duration,
        Schedule.constant(w), scenario.disturbance, law,
        noise_std=scenario.noise_std, seed=scenario.seed,
        substeps=1, name=f"{scenario.name}-relay",
    )


def relay_identify(scenario: LoopScenario, amplitude: float, hysteresis: float = 1.0, cycles: int = 5) -> UltimateParams:
    """Estimate (Ku, Tu) from the relay limit cycle.

    The relay switches u0 +/- amplitude around the equilibrium drive of the
    scenario's initial setpoint; the controller of the scenario only lends
    its sample period. Amplitude and period are read at the integration
    step. The last ``cycles`` full periods are measured, the first cycle is
    always discarded as transient.
    """
    if not amplitude > 0:
        raise ConfigError(f"relay amplitude must be > 0, got {amplitude!r}", key="amplitude")
    if hysteresis < 0:
        raise ConfigError(f"relay hysteresis must be >= 0, got {hysteresis!r}", key="hysteresis")
    trace = relay_trace(scenario, amplitude, hysteresis)
    ups = np.nonzero(np.diff(trace.u) > 0)[0] + 1
    if len(ups) < cycles + 2:
        raise IdentificationError(
            f"no sustained oscillation: {len(ups)} upward relay switches in {scenario.duration} s, need {cycles + 2}"
        )
    first, last = int(ups[-cycles - 1]), int(ups[-1])
    tu = float(trace.t[last] - trace.t[first]) / cycles
    seg = trace.pv_clean[first:last]
    a_osc = float(seg.max() - seg.min()) / 2.0
    if not a_osc > 0:
        raise IdentificationError("relay oscillation has zero amplitude")
    ku = 4.0 * amplitude / (math.pi * a_osc)
    log.info("继电辨识: tu = %.4f s, 振幅 = %.5f %%, ku = %.3f", tu, a_osc, ku)
    return UltimateParams(ku=ku, tu=tu)


def _cycle_amplitudes(y: np.ndarray) -> np.ndarray:
    """Peak-to-peak of each full cycle, cycles cut at upward mean crossings."""
    centred = y - np.mean(y[len(y) // 2:])
    ups = np.nonzero((centred[:-1] < 0.0) & (centred[1:] >= 0.0))[0] + 1
    return np.array([np.ptp(y[a:b]) for a, b in zip(ups, ups[1:])])


def _oscillation_persists(trace: SimTrace) -> bool:
    """Mean amplitude of the last quarter of cycles against the second quarter.

    Averaging over several cycles evens out where the samples fall on each
    peak; a saturated limit cycle (flat envelope) counts as persisting.
    """
    amps = _cycle_amplitudes(trace.pv_clean)
    if len(amps) < 8:
        return False
    k = len(amps) // 4
    early = float(np.mean(amps[k:2 * k]))
    late = float(np.mean(amps[-k:]))
    # decayed into round-off wobble
    if late < 1e-3 * float(amps.max()):
        return False
    return late >= 0.98 * early


def sweep_ultimate_gain(
    scenario: LoopScenario,
    low: float = 1.0,
    high: float = 1e5,
    resolution: float = 0.005,
    coarse: float = 1.1,
) -> float:
    """Smallest pure-P gain whose oscillation does not decay.

    Scans upward from ``low`` in ``coarse`` ratios until a gain oscillates,
    then rescans the last coarse interval upward at ``resolution``. The P law
    is biased at the equilibrium drive and kicked by a setpoint offset of
    2/kp %, so every candidate sees the same 2 % drive step. The run should
    cover a few dozen periods.
    """
    if not (0.0 < low < high) or not resolution > 0.0 or not coarse > 1.0 + resolution:
        raise ConfigError("gain sweep needs 0 < low < high, resolution > 0 and coarse > 1 + resolution", key="sweep")
    w, bias = _hold_scenario(scenario)
    start = scenario.plant.equilibrium(w)

    def persists(kp: float) -> bool:
        trace = simulate(
            scenario.plant, start, scenario.ts, scenario.duration,
            Schedule.constant(w + 2.0 / kp), Schedule.constant(0.0), ProportionalLaw(kp, bias),
            substeps=scenario.substeps_per_sample,
        )
        return _oscillation_persists(trace)

    if persists(low):
        raise IdentificationError(f"gain {low} already oscillates")
    stable = low
    while True:
        nxt = stable * coarse
        if nxt > high:
            raise IdentificationError(f"no sustained oscillation up to gain {high}")
        if persists(nxt):
            break
        stable = nxt
    kp = stable
    while kp < nxt:
        kp = min(nxt, kp * (1.0 + resolution))
        if persists(kp):
            break
    log.info("增益扫描: ku = %.3f (分辨率 %.2f%%)", kp, 100.0 * resolution)
    return kp


def ziegler_nichols(up: UltimateParams, kind: str, ts: float = 0.1) -> PidConfig:
    kind = kind.lower()
    if kind == "pi":
        return PidConfig(kp=0.45 * up.ku, ti=up.tu / 1.2, td=0.0, deriv_delay_coeff=0.1, beta=1.0, alpha=0.0, ts=ts)
    if kind == "pid":
        return PidConfig(kp=0.6 * up.ku, ti=up.tu / 2.0, td=up.tu / 8.0, deriv_delay_coeff=0.1, beta=1.0, alpha=0.0, ts=ts)
    raise ConfigError(f"kind must be 'pi' or 'pid', got {kind!r}", key="kind")


# Autotuning


def itae_objective(scenario: LoopScenario) -> Callable[[PidConfig], float]:
    """ITAE of the noise-free closed-loop run over the whole scenario."""
    quiet = scenario.with_changes(noise_std=0.0)
    window = (0.0, quiet.duration)

    def objective(config: PidConfig) -> float:
        trace = run_closed_loop(quiet.with_changes(controller=config))
        if not np.all(np.isfinite(trace.pv_clean)) or np.abs(trace.pv_clean).max() > DIVERGENCE_LIMIT:
            return math.inf
        return error_integrals(trace, window)[2]

    return objective


class _BudgetExhausted(Exception):
    pass


def _encode(name: str, value: float) -> float:
    return math.log10(value) if name in LOG_SCALED else value


def _decode(name: str, x: float) -> float:
    return 10.0 ** x if name in LOG_SCALED else x


def _bounds(name: str) -> Tuple[float, float]:
    lo, hi = BOUNDS[name]
    return (_encode(name, lo), _encode(name, hi))


def _initial_simplex(x0: np.ndarray, bounds: List[Tuple[float, float]], step: float = 0.1) -> np.ndarray:
    simplex = [x0]
    for i, (lo, hi) in enumerate(bounds):
        x = x0.copy()
        x[i] = x0[i] + step if x0[i] + step <= hi else x0[i] - step
        simplex.append(x)
    return np.array(simplex)


def autotune(
    scenario: LoopScenario,
    initial: PidConfig,
    budget: int = 200,
    vary: Sequence[str] = ("kp", "ti", "td", "beta"),
    objective: Optional[Callable[[PidConfig], float]] = None,
    logger: Optional[Callable[[str], None]] = None,
) -> TuneResult:
    """Nelder-Mead descent on the objective (ITAE by default), best-seen wins.

    Unstable candidates get a finite penalty; only a failing initial
    evaluation is an error. One restart from the incumbent is made when the
    first simplex collapses with budget to spare.
    """
    if budget < 10:
        raise ConfigError(f"budget must be >= 10, got {budget!r}", key="budget")
    unknown = [v for v in vary if v not in BOUNDS]
    if unknown:
        raise ConfigError(f"cannot tune {unknown!r}; choose from {sorted(BOUNDS)}", key="vary")
    names = [v for v in vary if not (v == "td" and initial.td == 0.0) and not (v == "ti" and initial.ti is None)]
    if not names:
        raise ConfigError("nothing to tune", key="vary")
    objective = objective or itae_objective(scenario)
    emit = logger or (lambda _msg: None)

    try:
        f_init = float(objective(initial))
    except (NumericFailure, NumericDomainError) as exc:
        raise TuningError(f"initial evaluation failed: {exc}") from exc
    if not math.isfinite(f_init):
        raise TuningError("initial evaluation diverged")

    best = {"f": f_init, "config": initial}
    history: List[float] = [f_init]
    evals = 1
    emit(f"第 {evals} 次评估: {_describe(initial, names)} 目标值={f_init:.6g}")

    def candidate(x: np.ndarray) -> PidConfig:
        return initial.with_changes(**{n: _decode(n, float(v)) for n, v in zip(names, x)})

    def f(x: np.ndarray) -> float:
        nonlocal evals
        if evals >= budget:
            raise _BudgetExhausted()
        evals += 1
        try:
            cfg = candidate(x)
            value = float(objective(cfg))
        except (ConfigError, NumericFailure, NumericDomainError):
            cfg, value = None, math.inf
        if not math.isfinite(value):
            value = PENALTY
        if cfg is not None and value < best["f"]:
            best["f"], best["config"] = value, cfg
        history.append(best["f"])
        emit(f"第 {evals} 次评估: {_describe(cfg, names) if cfg else '参数无效'} 目标值={value:.6g}")
        return value

    bounds = [_bounds(n) for n in names]
    x0 = np.array([min(hi, max(lo, _encode(n, getattr(initial, n)))) for n, (lo, hi) in zip(names, bounds)])
    converged = False
    for attempt in range(2):
        try:
            res = minimize(
                f, x0, method="Nelder-Mead", bounds=bounds,
                options={"xatol": 1e-6, "fatol": 1e-12, "maxfev": budget, "initial_simplex": _initial_simplex(x0, bounds)},
            )
        except _BudgetExhausted:
            converged = False
            break
        converged = bool(res.success)
        if not converged or evals >= budget:
            break
        x0 = np.array([_encode(n, getattr(best["config"], n)) for n in names])
        log.debug("自整定: 从当前最优点第 %d 次重启", attempt + 1)

    log.info("自整定完成: 共 %d 次评估, 目标值 %.6g -> %.6g", evals, f_init, best["f"])
    return TuneResult(
        config=best["config"],
        objective_initial=f_init,
        objective_final=best["f"],
        evaluations=evals,
        converged=converged and evals < budget,
        history=tuple(history),
    )


def _describe(config: PidConfig, names: Sequence[str]) -> str:
    return " ".join(f"{n}={getattr(config, n):.6g}" for n in names)

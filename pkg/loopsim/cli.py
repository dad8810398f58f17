import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError, IdentificationError, LoopSimError, NumericDomainError, NumericFailure, TuningError
from .metrics import StepMetrics, step_metrics
from .output import emit_csv, emit_plot
from .report import ComparisonReport
from .scenarios import builtin_scenarios, load_scenario
from .simloop import LoopScenario, SimTrace, run_closed_loop, run_pair
from .tuning import autotune, relay_identify, ziegler_nichols

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loopsim", description="PI/PID closed-loop simulation of the coupled-tank process loops")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("list", help="list the built-in fixtures")

    p = sub.add_parser("run", help="simulate one scenario, write <name>.csv and <name>.svg")
    p.add_argument("--scenario", required=True, help="built-in name or scenario file path")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--noise", type=float, help="measurement noise std, %% of span")
    p.add_argument("--out", default=".")

    p = sub.add_parser("compare", help="paired PI vs PID run and comparison report")
    p.add_argument("--pi", required=True)
    p.add_argument("--pid", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--out", default=".")

    p = sub.add_parser("tune", help="relay identification, Ziegler-Nichols start, ITAE autotune")
    p.add_argument("--scenario", required=True)
    p.add_argument("--kind", required=True, choices=("pi", "pid"))
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--amplitude", type=float, default=20.0, help="relay amplitude, %% of drive")
    p.add_argument("--hysteresis", type=float, default=1.0, help="relay hysteresis band, %% of span")
    return parser


def _override(scenario: LoopScenario, args) -> LoopScenario:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "duration", None) is not None:
        changes["duration"] = args.duration
    if getattr(args, "noise", None) is not None:
        changes["noise_std"] = args.noise
    return scenario.with_changes(**changes) if changes else scenario


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    log.info("已写入 %s", path)


def _metrics(scenario: LoopScenario, trace: SimTrace) -> Optional[StepMetrics]:
    step = scenario.setpoint.first_step()
    if step is None:
        return None
    _, before, after = step
    return step_metrics(trace, (0.0, scenario.duration), (before, after))


def cmd_list(args) -> int:
    for name, sc in builtin_scenarios().items():
        c = sc.controller
        print(f"{name:<10} plant={sc.plant.kind:<6} kp={c.kp} ti={c.ti} td={c.td} beta={c.beta} ts={c.ts}")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = _override(load_scenario(args.scenario), args)
    trace = run_closed_loop(scenario)
    out = Path(args.out)
    _write(out / f"{scenario.name}.csv", emit_csv(trace))
    _write(out / f"{scenario.name}.svg", emit_plot([trace], [scenario.name], title=scenario.name))
    m = _metrics(scenario, trace)
    if m is not None:
        for key, value in m.to_dict().items():
            print(f"{key} = {value}")
    return EXIT_OK


def cmd_compare(args) -> int:
    pi = _override(load_scenario(args.pi), args)
    pid = _override(load_scenario(args.pid), args)
    trace_pi, trace_pid = run_pair(pi, pid)
    m_pi, m_pid = _metrics(pi, trace_pi), _metrics(pid, trace_pid)
    if m_pi is None or m_pid is None:
        raise ConfigError("compare needs a setpoint step in both scenarios", key="setpoint")
    report = ComparisonReport.build(pi, pid, m_pi, m_pid)
    out = Path(args.out)
    stem = f"{pi.name}-vs-{pid.name}"
    _write(out / f"{stem}.json", report.to_json())
    _write(out / f"{stem}.txt", report.to_text())
    _write(out / f"{stem}.svg", emit_plot([trace_pi, trace_pid], [pi.name, pid.name], title=stem))
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_tune(args) -> int:
    scenario = load_scenario(args.scenario)
    up = relay_identify(scenario, args.amplitude, args.hysteresis)
    print(f"# relay: ku = {up.ku!r}, tu = {up.tu!r}")
    zn = ziegler_nichols(up, args.kind)
    result = autotune(scenario, zn, budget=args.budget, logger=log.info)
    print(f"# ziegler-nichols: kp = {zn.kp!r}, ti = {zn.ti!r}, td = {zn.td!r}, beta = {zn.beta!r}")
    print(f"# itae {result.objective_initial:.6g} -> {result.objective_final:.6g} "
          f"in {result.evaluations} evaluations, converged = {result.converged}")
    c = result.config
    print("[controller]")
    for key, value in (("kp", c.kp), ("ti", c.ti), ("td", c.td), ("a", c.deriv_delay_coeff),
                       ("beta", c.beta), ("alpha", c.alpha), ("ts", c.ts)):
        print(f"{key} = {'none' if value is None else repr(float(value))}")
    return EXIT_OK


COMMANDS = {"list": cmd_list, "run": cmd_run, "compare": cmd_compare, "tune": cmd_tune}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:  # --help
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(asctime)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (NumericFailure, NumericDomainError, IdentificationError, TuningError) as e:
        print(f"数值失败: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LoopSimError, OSError) as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_CONFIG

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from .metrics import PI, PID, TIE, StepMetrics, compare, ratio
from .scenarios import scenario_fingerprint
from .simloop import LoopScenario

REPORT_VERSION = 1

VERDICTS = (
    ("settling_time", "settles faster"),
    ("rise_time", "rises faster"),
    ("overshoot", "overshoots less"),
    ("control_variance", "moves the actuator less under noise"),
)


@dataclass
class ComparisonRow:
    metric: str
    pi: Any
    pid: Any
    winner: str
    ratio: Optional[float]  # PID / PI


@dataclass
class ComparisonReport:
    version: int
    pi_name: str
    pid_name: str
    pi_fingerprint: str
    pid_fingerprint: str
    seed: int
    rows: List[ComparisonRow] = field(default_factory=list)
    verdict: List[str] = field(default_factory=list)

    @staticmethod
    def build(pi: LoopScenario, pid: LoopScenario, m_pi: StepMetrics, m_pid: StepMetrics) -> "ComparisonReport":
        cmp = compare(m_pi, m_pid)
        rows = []
        for r in cmp.rows:
            # the table divides by the PI value
            rows.append(ComparisonRow(r.metric, r.pi, r.pid, r.winner, ratio(r.pid, r.pi)))
        wins = cmp.wins()
        verdict = [f"PID wins {wins[PID]} of {len(rows)} metrics, PI wins {wins[PI]}, {wins[TIE]} tied"]
        for metric, phrase in VERDICTS:
            w = cmp.winner(metric)
            if w != TIE:
                verdict.append(f"{w.upper()} {phrase}")
        return ComparisonReport(
            version=REPORT_VERSION,
            pi_name=pi.name,
            pid_name=pid.name,
            pi_fingerprint=scenario_fingerprint(pi),
            pid_fingerprint=scenario_fingerprint(pid),
            seed=pi.seed,
            rows=rows,
            verdict=verdict,
        )

    def row(self, metric: str) -> ComparisonRow:
        return next(r for r in self.rows if r.metric == metric)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["rows"] = [asdict(r) for r in self.rows]
        return d

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "ComparisonReport":
        rows = [ComparisonRow(**r) for r in d.get("rows", [])]
        return ComparisonReport(
            version=d.get("version", REPORT_VERSION),
            pi_name=d.get("pi_name", ""),
            pid_name=d.get("pid_name", ""),
            pi_fingerprint=d.get("pi_fingerprint", ""),
            pid_fingerprint=d.get("pid_fingerprint", ""),
            seed=d.get("seed", 0),
            rows=rows,
            verdict=list(d.get("verdict", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    def to_text(self) -> str:
        def fmt(v) -> str:
            if v is None:
                return "-"
            if isinstance(v, bool):
                return "yes" if v else "no"
            return f"{v:.6g}"

        lines = [
            f"PI  {self.pi_name} [{self.pi_fingerprint}]",
            f"PID {self.pid_name} [{self.pid_fingerprint}]",
            f"seed {self.seed}",
            "",
            f"{'metric':<20}{'PI':>14}{'PID':>14}{'winner':>8}{'PID/PI':>12}",
        ]
        for r in self.rows:
            lines.append(f"{r.metric:<20}{fmt(r.pi):>14}{fmt(r.pid):>14}{r.winner:>8}{fmt(r.ratio):>12}")
        lines.append("")
        lines += self.verdict
        return "\n".join(lines) + "\n"
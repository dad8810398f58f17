from typing import Any, Optional


class LoopSimError(Exception):
    pass


class ConfigError(LoopSimError, ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line


class ScenarioSyntaxError(ConfigError):
    pass


class NumericDomainError(LoopSimError, ArithmeticError):
    pass


class NumericFailure(LoopSimError, ArithmeticError):
    def __init__(self, message: str, state: Any = None, sample_index: Optional[int] = None):
        if sample_index is not None:
            message = f"sample {sample_index}: {message}"
        super().__init__(message)
        self.state = state
        self.sample_index = sample_index


class MetricsError(LoopSimError, ValueError):
    pass


class IdentificationError(LoopSimError):
    pass


class TuningError(LoopSimError):
    pass

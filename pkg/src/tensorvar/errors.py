"""Exception types mapped to CLI exit codes."""


class TensorVarError(Exception):
    exit_code = 1


class ConfigError(TensorVarError):
    exit_code = 2


class DataError(TensorVarError):
    exit_code = 3


class NumericalError(TensorVarError):
    """Raised when a linear-algebra step fails, e.g. a non-PD precision."""

    exit_code = 4

    def __init__(self, message: str, sweep: int | None = None):
        self.sweep = sweep
        if sweep is not None:
            message = f"{message} (sweep {sweep})"
        super().__init__(message)


class ScenarioInfeasible(TensorVarError):
    exit_code = 3

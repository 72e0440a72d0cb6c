"""Exception hierarchy. Every error names the subsystem that raised it."""


class EntroflowError(Exception):
    """Base class for all engine errors."""

    module = "entroflow"

    def __init__(self, message, **context):
        self.context = context
        if context:
            extras = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({extras})"
        super().__init__(f"[{self.module}] {message}")


class ConfigError(EntroflowError):
    """Invalid configuration; carries the offending key path when known."""

    module = "config"

    def __init__(self, message, key=None, **context):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message, **context)


class ModelError(EntroflowError):
    module = "lattice-model"


class SingularityError(EntroflowError):
    module = "greens-engine"


class QuadratureError(EntroflowError):
    module = "quadrature"


class SolverError(EntroflowError):
    """Probe solver failure; best state so far is attached when available."""

    module = "probe-solver"

    def __init__(self, message, state=None, **context):
        self.state = state
        super().__init__(message, **context)


class ConvergenceError(EntroflowError):
    module = "quasistatic-drive"

"""Exception hierarchy. Each class carries a short machine-readable code used by the CLI."""


class SpinBounceError(Exception):
    code = "error"


class ConfigurationError(SpinBounceError, ValueError):
    code = "config"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NotAnImpactError(SpinBounceError, ValueError):
    code = "not-an-impact"


class NotInContactError(SpinBounceError, ValueError):
    code = "not-in-contact"


class ModelError(SpinBounceError, ValueError):
    code = "model"


class SingularAlphaError(SpinBounceError, ArithmeticError):
    code = "singular-alpha"


class IntegrationError(SpinBounceError, RuntimeError):
    code = "integration"


class MaxStepsExceeded(IntegrationError):
    code = "max-steps"


class NoSingularityError(SpinBounceError, RuntimeError):
    code = "no-singularity"


class BracketError(SpinBounceError, ValueError):
    code = "bracket"


class IngestError(SpinBounceError, ValueError):
    code = "ingest"

"""Exception types shared across the package; the CLI maps them to exit codes."""


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericsError(RuntimeError):
    """A numerical routine failed or produced non-finite values (exit code 3)."""


class ResourceLimitError(RuntimeError):
    """A dimension or memory cap was exceeded (exit code 4)."""

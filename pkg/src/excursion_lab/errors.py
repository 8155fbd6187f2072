"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment or kernel configuration.

    `diagnostics` is a list of "json.path: message" strings suitable for
    printing one per line.
    """

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class ResourceError(RuntimeError):
    """A requested grid exceeds the memory budget."""

    def __init__(self, message, estimated_bytes, budget_bytes):
        self.estimated_bytes = int(estimated_bytes)
        self.budget_bytes = int(budget_bytes)
        super().__init__(
            f"{message} (estimated {self.estimated_bytes / 1e6:.1f} MB, "
            f"budget {self.budget_bytes / 1e6:.1f} MB)"
        )


class UnsupportedEvaluationError(ValueError):
    """Kernel evaluation requested at a point where it is not defined."""

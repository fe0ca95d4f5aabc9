class SwarmCapError(Exception):
    pass


class ConfigError(SwarmCapError, ValueError):
    """Invalid configuration, architecture, scenario or override."""


class InputError(SwarmCapError, ValueError):
    """Bad runtime input: empty sets, non-finite values, nonpositive labels."""


class ShapeError(SwarmCapError, ValueError):
    """Mismatched parameter architectures or array lengths."""


class DegenerateMergeError(SwarmCapError, ValueError):
    pass


class ParseError(SwarmCapError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)

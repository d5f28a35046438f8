"""Exception types shared across the package."""


class DcdError(Exception):
    """Base class for all dcdsim errors."""


class StructureError(DcdError):
    """A workflow graph is malformed (cycle, dangling edge, bad field)."""


class ParseError(DcdError):
    """An input file could not be parsed; message carries location info."""


class ConfigError(DcdError):
    """A run configuration is invalid or inconsistent with its inputs."""

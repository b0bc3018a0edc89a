"""Exception hierarchy shared by all align-lab modules.

The CLI maps these to exit codes: validation problems (ParameterError and
subclasses) exit with 2, capacity problems with 3.
"""

from __future__ import annotations


class AlignLabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(AlignLabError, ValueError):
    """An input violates a documented precondition or domain constraint."""


class ConfigError(ParameterError):
    """An experiment config file is malformed or contains unknown keys."""


class NoRootError(ParameterError):
    """A root-finding call was made below the existence threshold."""


class CapacityError(AlignLabError):
    """The requested instance would exceed the configured memory/size budget."""

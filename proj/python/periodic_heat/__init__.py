"""Effective geometry and heat asymptotics of periodic weighted graphs."""

from ._core import *  # noqa: F401,F403
from ._core import Error, FormatError, ParameterError, PeriodicComplex, ResourceError, SolverError, ValidationError

__all__ = [name for name in dir() if not name.startswith("_")]

"""Simulation of the Brownian height fragmentation and its tagged fragment."""
from .errors import (
    DomainError,
    FragstochError,
    NumericError,
    ParameterError,
    StateError,
    UnsupportedParameterError,
)
from .paths import GridPath, KnotPath, Seed

__version__ = "0.1.0"

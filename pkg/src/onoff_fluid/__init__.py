"""Stationary distribution of a buffer fed by N on-off fluid sources.

Asymptotic approximations for many sources (ray expansion plus boundary,
corner and transition layers), an exact modal solver and an event-driven
simulator to check them against.
"""
from .errors import FluidModelError
from .model import ModelParams, derive_params

__all__ = ["FluidModelError", "ModelParams", "derive_params"]
__version__ = "0.1.0"

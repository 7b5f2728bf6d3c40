"""Error hierarchy and small argument checks shared by every module."""

from __future__ import annotations

import math

import numpy as np


class FLMError(Exception):
    """Base class; ``exit_code`` is what the command line returns for it."""

    exit_code = 1


class ConfigError(FLMError, ValueError):
    exit_code = 2


class DomainError(FLMError, ValueError):
    exit_code = 2


class DegenerateMeasureError(DomainError):
    """The Levy measure has no mass."""


class DivergenceError(FLMError, ArithmeticError):
    exit_code = 3


class SlowDecayError(FLMError, ArithmeticError):
    exit_code = 4


class RegimeError(FLMError, ValueError):
    exit_code = 5


class QuadratureError(FLMError, ArithmeticError):
    """Quadrature did not reach its tolerance; carries the partial result."""

    exit_code = 1

    def __init__(self, message, value=None, abserr=None):
        super().__init__(message)
        self.value = value
        self.abserr = abserr


def check_hurst(H, guard=1e-3) -> float:
    H = float(H)
    if not (0.0 < H < 1.0) or math.isnan(H):
        raise DomainError(f"H must lie in (0, 1), got {H}")
    if abs(H - 0.5) < guard:
        raise DomainError(f"|H - 1/2| must be at least {guard}, got H = {H}")
    return H


def check_positive(name, value) -> float:
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f"{name} must be a positive finite number, got {value}")
    return value


def as_float_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr

"""Wright learning-curve primitives.

The time to make the n-th unit is ``q1 * n**-b``; each doubling of output
multiplies the unit time by the learning rate ``alpha = 2**-b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

ALPHA_MIN = 0.01


@dataclass(frozen=True)
class LearningRate:
    """Fixed learning rate, the unit-time ratio per doubling of output."""

    alpha: float
    alpha_min: float = ALPHA_MIN

    def __post_init__(self):
        if not 0.0 < self.alpha_min <= 1.0:
            raise DomainError(f"alpha_min must lie in (0, 1], got {self.alpha_min}")
        if not self.alpha_min <= self.alpha <= 1.0:
            raise DomainError(
                f"learning rate {self.alpha} outside [{self.alpha_min}, 1]"
            )

    @property
    def coefficient(self) -> float:
        return coefficient_from_rate(self)


def coefficient_from_rate(alpha: LearningRate | float, alpha_min: float = ALPHA_MIN) -> float:
    """Return the learning exponent ``b = -log2(alpha)``."""
    if not isinstance(alpha, LearningRate):
        alpha = LearningRate(float(alpha), alpha_min)
    b = -math.log2(alpha.alpha)
    return b + 0.0  # normalise -0.0


def rate_from_coefficient(b: float) -> float:
    return 2.0 ** -b


@dataclass(frozen=True)
class LearningCurve:
    q1: float
    b: float

    def __post_init__(self):
        if not self.q1 > 0:
            raise DomainError(f"q1 must be positive, got {self.q1}")
        if not self.b >= 0:
            raise DomainError(f"learning exponent must be nonnegative, got {self.b}")

    def unit_time(self, n):
        return unit_time(self, n)

    def cumulative_time(self, x, exact=False):
        return cumulative_time(self, x, exact=exact)


def unit_time(curve: LearningCurve, n):
    """Time to produce the n-th unit (``n >= 1``)."""
    arr = np.asarray(n, dtype=float)
    if np.any(arr < 1):
        raise DomainError("production count must be >= 1")
    out = curve.q1 * arr ** -curve.b
    return float(out) if out.ndim == 0 else out


def cumulative_time(curve: LearningCurve, x, exact=False):
    """Time to produce the first ``x`` units.

    By default the integral approximation ``q1 x**(1-b) / (1-b)`` is used.
    ``exact=True`` sums the unit times instead and requires an integer ``x``.
    """
    if exact:
        if x < 1 or int(x) != x:
            raise DomainError("exact cumulative time needs an integer count >= 1")
        n = np.arange(1, int(x) + 1, dtype=float)
        return float(math.fsum(curve.q1 * n ** -curve.b))
    if not x > 0:
        raise DomainError(f"production count must be positive, got {x}")
    if curve.b >= 1.0:
        raise DomainError("integral form diverges for b >= 1")
    return curve.q1 * x ** (1.0 - curve.b) / (1.0 - curve.b)

"""Uniform discretization of the half-line."""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NonGridTranslation, OutOfDomain, ValidationError

# relative slack when deciding that t/h is an integer
_MULTIPLE_RTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Points ``x_j = j*h`` for ``j = 0..n-1``, each carrying quadrature weight ``h``."""

    h: float
    n: int

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValidationError("grid step must be positive and finite", field="h")
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError("grid needs at least two points", field="n")
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_extent(cls, h, x_max):
        """Grid covering ``[0, x_max)``; ``x_max/h`` must be integral."""
        ratio = x_max / h
        n = round(ratio)
        if n < 2 or abs(ratio - n) > _MULTIPLE_RTOL * max(1.0, ratio):
            raise ValidationError(f"x_max/h = {ratio} is not a positive integer", field="x_max")
        return cls(h, n)

    @property
    def x(self):
        return np.arange(self.n) * self.h

    @property
    def x_max(self):
        return self.n * self.h

    def steps(self, t):
        """Number of grid steps in a translation ``t``; must be a positive multiple of h."""
        ratio = t / self.h
        k = round(ratio)
        if k < 1 or abs(ratio - k) > _MULTIPLE_RTOL * max(1.0, abs(ratio)):
            raise NonGridTranslation(f"translation {t} is not a positive multiple of h={self.h}")
        return int(k)

    def index(self, x):
        """Grid index of a point that must lie exactly on the grid."""
        ratio = x / self.h
        j = round(ratio)
        if abs(ratio - j) > _MULTIPLE_RTOL * max(1.0, abs(ratio)) or not 0 <= j < self.n:
            raise OutOfDomain(f"x={x} is not a grid point of this grid")
        return int(j)

    def indicator(self, a, b):
        """Grid samples of the indicator of ``[a, b)``."""
        x = self.x
        return ((x >= a - 1e-12 * self.h) & (x < b - 1e-12 * self.h)).astype(float)

    def check(self, other):
        if other != self:
            raise GridMismatch(f"grid {other} differs from {self}")

    def as_dict(self):
        return {"h": self.h, "x_max": self.x_max, "n": self.n}

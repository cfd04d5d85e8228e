"""Dimension-tracked scalar arithmetic over rational powers of length, time, mass.

Dimensions are exact rational exponent triples; values are plain floats whose
numeric meaning is fixed by a gauge record (numeric representatives of the
base units, all 1.0 by default).  Checking happens at runtime so that fields
assembled from config data stay dimension-aware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

RationalLike = Union[int, Fraction, str]


class DimensionMismatch(ValueError):
    """Raised when adding/subtracting quantities of unequal dimension."""


class DivisionByZero(ZeroDivisionError):
    """Raised when dividing a scaled quantity by zero."""


def _frac(x: RationalLike) -> Fraction:
    f = Fraction(x)
    return f


@dataclass(frozen=True)
class Dim:
    """Rational exponents of the length, time and mass unit spaces."""

    l: Fraction = Fraction(0)
    t: Fraction = Fraction(0)
    m: Fraction = Fraction(0)

    def __post_init__(self):
        # Fraction is always reduced with positive denominator; coerce inputs.
        object.__setattr__(self, "l", _frac(self.l))
        object.__setattr__(self, "t", _frac(self.t))
        object.__setattr__(self, "m", _frac(self.m))

    def __mul__(self, other: "Dim") -> "Dim":
        return Dim(self.l + other.l, self.t + other.t, self.m + other.m)

    def __truediv__(self, other: "Dim") -> "Dim":
        return Dim(self.l - other.l, self.t - other.t, self.m - other.m)

    def __pow__(self, r: RationalLike) -> "Dim":
        r = _frac(r)
        return Dim(self.l * r, self.t * r, self.m * r)

    @property
    def is_dimensionless(self) -> bool:
        return self.l == 0 and self.t == 0 and self.m == 0

    def __str__(self) -> str:
        if self.is_dimensionless:
            return "1"
        parts = []
        for sym, e in (("L", self.l), ("T", self.t), ("M", self.m)):
            if e != 0:
                parts.append(f"{sym}^{e}" if e != 1 else sym)
        return "*".join(parts)

    def to_json(self) -> dict:
        return {"l": str(self.l), "t": str(self.t), "m": str(self.m)}

    @classmethod
    def from_json(cls, obj: dict) -> "Dim":
        return cls(Fraction(obj["l"]), Fraction(obj["t"]), Fraction(obj["m"]))


def dim_combine(a: Dim, b: Dim, mode: str = "product") -> Dim:
    if mode == "product":
        return a * b
    if mode == "quotient":
        return a / b
    raise ValueError(f"unknown mode {mode!r}")


def dim_pow(d: Dim, r: RationalLike) -> Dim:
    return d ** r


DIMLESS = Dim()
LENGTH = Dim(l=1)
TIME = Dim(t=1)
MASS = Dim(m=1)

# Dimensions of the coupling constants and fields the theory uses.  Chart
# coordinates are dimensionless reals, which forces connection coefficients
# and the rescaled potential A to be dimensionless as well.
HBAR_DIM = MASS * LENGTH ** 2 / TIME                     # M L^2 T^-1
CHARGE_DIM = (MASS * LENGTH ** 3) ** Fraction(1, 2) / TIME  # consistent with q F u0 / m dimensionless
MOMENT_DIM = LENGTH ** Fraction(3, 2) / (TIME * MASS ** Fraction(1, 2))
EM_FIELD_DIM = (MASS * LENGTH) ** Fraction(1, 2)
METRIC_DIM = LENGTH ** 2
BFIELD_FRAME_DIM = MASS ** Fraction(1, 2) / LENGTH ** Fraction(3, 2)


def _check_finite(value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value!r} rejected")
    return value


@dataclass(frozen=True)
class ScaledReal:
    """A finite real tagged with a dimension."""

    value: float
    dim: Dim = DIMLESS

    def __post_init__(self):
        object.__setattr__(self, "value", _check_finite(self.value))

    def __add__(self, other: "ScaledReal") -> "ScaledReal":
        if self.dim != other.dim:
            raise DimensionMismatch(f"cannot add {self.dim} and {other.dim}")
        return ScaledReal(self.value + other.value, self.dim)

    def __sub__(self, other: "ScaledReal") -> "ScaledReal":
        if self.dim != other.dim:
            raise DimensionMismatch(f"cannot subtract {other.dim} from {self.dim}")
        return ScaledReal(self.value - other.value, self.dim)

    def __mul__(self, other: "ScaledReal") -> "ScaledReal":
        return ScaledReal(self.value * other.value, self.dim * other.dim)

    def __truediv__(self, other: "ScaledReal") -> "ScaledReal":
        if other.value == 0.0:
            raise DivisionByZero("division by zero-valued quantity")
        return ScaledReal(self.value / other.value, self.dim / other.dim)

    def __neg__(self) -> "ScaledReal":
        return ScaledReal(-self.value, self.dim)

    def __pow__(self, r: RationalLike) -> "ScaledReal":
        r = _frac(r)
        return ScaledReal(self.value ** float(r), self.dim ** r)


def scaled_arith(x: ScaledReal, y: ScaledReal, op: str) -> ScaledReal:
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown op {op!r}")


@dataclass(frozen=True)
class Gauge:
    """Numeric representatives of the base units; all downstream numerics are
    plain floats understood relative to this record."""

    length: float = 1.0
    time: float = 1.0
    mass: float = 1.0

    def representative(self, d: Dim) -> float:
        return self.length ** float(d.l) * self.time ** float(d.t) * self.mass ** float(d.m)

"""Forward-mode truncated Taylor (jet) arithmetic in 4 chart variables.

A ``Jet`` of order n stores the Taylor coefficients c_alpha = (d^alpha f)/alpha!
of a real scalar field at a base point, for all multi-indices |alpha| <= n <= 3.
Arithmetic is closed at fixed order (higher terms are truncated); binary
operations between jets of different orders truncate to the lower order.
Jets do not store their base point; mixing jets from different points is the
caller's responsibility.

Coefficient layout
------------------
Coefficients are stored densely in a fixed global order: multi-indices
(a0, a1, a2, a3) sorted by total degree, ties broken by descending
lexicographic comparison of the exponent tuple.  Degree blocks have sizes
1, 4, 10, 20, so orders 0..3 use array lengths 1, 5, 15, 35 and an order-k
jet's coefficients are a prefix of the order-3 layout.  This layout is fixed
so that coefficient dumps are bit-comparable across implementations.

Complex scalars are pairs of real jets (``CJet``); transcendental functions on
complex jets are limited to exp plus the polynomial operations.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence, Union

import numpy as np

N_VARS = 4
MAX_ORDER = 3


class DomainError(ArithmeticError):
    """sqrt/log of a nonpositive value slot, or division by a zero value slot."""


def _build_layout():
    indices = []
    for deg in range(MAX_ORDER + 1):
        block = [a for a in itertools.product(range(deg + 1), repeat=N_VARS) if sum(a) == deg]
        block.sort(reverse=True)
        indices.extend(block)
    return indices


MULTI_INDICES = _build_layout()
INDEX_OF = {a: i for i, a in enumerate(MULTI_INDICES)}
SIZES = (1, 5, 15, 35)


def _build_mul_tables():
    tables = []
    for order in range(MAX_ORDER + 1):
        size = SIZES[order]
        ii, jj, kk = [], [], []
        for i, a in enumerate(MULTI_INDICES[:size]):
            for j, b in enumerate(MULTI_INDICES[:size]):
                if sum(a) + sum(b) > order:
                    continue
                c = tuple(x + y for x, y in zip(a, b))
                ii.append(i)
                jj.append(j)
                kk.append(INDEX_OF[c])
        tables.append((np.asarray(ii), np.asarray(jj), np.asarray(kk)))
    return tables


_MUL_TABLES = _build_mul_tables()


def _build_deriv_tables():
    # For result position p (multi-index alpha), source is alpha + e_v with
    # factor alpha_v + 1: d/dx_v sum c_a (x-p)^a has Taylor coefficient
    # (alpha_v+1) c_{alpha+e_v} at alpha.
    src = np.zeros((N_VARS, SIZES[MAX_ORDER - 1]), dtype=np.intp)
    fac = np.zeros((N_VARS, SIZES[MAX_ORDER - 1]))
    for v in range(N_VARS):
        for p, a in enumerate(MULTI_INDICES[: SIZES[MAX_ORDER - 1]]):
            shifted = tuple(x + (1 if k == v else 0) for k, x in enumerate(a))
            src[v, p] = INDEX_OF[shifted]
            fac[v, p] = a[v] + 1
    return src, fac


_DERIV_SRC, _DERIV_FAC = _build_deriv_tables()

Scalar = Union[int, float]


class Jet:
    """Truncated multivariate Taylor expansion of a real scalar field."""

    __slots__ = ("order", "c")

    def __init__(self, order: int, coeffs: np.ndarray):
        self.order = order
        self.c = coeffs

    # -- constructors -------------------------------------------------------

    @staticmethod
    def const(value: float, order: int) -> "Jet":
        c = np.zeros(SIZES[order])
        c[0] = value
        return Jet(order, c)

    @staticmethod
    def seed(point: Sequence[float], var_index: int, order: int) -> "Jet":
        """Jet of the coordinate function x^var_index at the given point."""
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order {order} out of range 0..{MAX_ORDER}")
        if not 0 <= var_index < N_VARS:
            raise ValueError(f"var_index {var_index} out of range")
        c = np.zeros(SIZES[order])
        c[0] = float(point[var_index])
        if order >= 1:
            c[INDEX_OF[tuple(1 if k == var_index else 0 for k in range(N_VARS))]] = 1.0
        return Jet(order, c)

    # -- inspection ---------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.c[0])

    def extract(self, alpha: Sequence[int]) -> float:
        """Partial derivative d^alpha f at the base point (= alpha! c_alpha)."""
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self.order:
            raise ValueError(f"|{alpha}| exceeds jet order {self.order}")
        fact = 1.0
        for a in alpha:
            fact *= math.factorial(a)
        return fact * float(self.c[INDEX_OF[alpha]])

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise jet order by truncation")
        if order == self.order:
            return self
        return Jet(order, self.c[: SIZES[order]])

    def derive(self, var: int) -> "Jet":
        """Exact partial derivative; drops one order."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        n = self.order - 1
        size = SIZES[n]
        out = self.c[_DERIV_SRC[var, :size]] * _DERIV_FAC[var, :size]
        return Jet(n, out)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.const(float(other), self.order)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = min(self.order, o.order)
        return Jet(n, self.c[: SIZES[n]] + o.c[: SIZES[n]])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = min(self.order, o.order)
        return Jet(n, self.c[: SIZES[n]] - o.c[: SIZES[n]])

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Jet(self.order, -self.c)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.order, self.c * float(other))
        if not isinstance(other, Jet):
            return NotImplemented
        n = min(self.order, other.order)
        if n == 0:
            return Jet(0, self.c[:1] * other.c[0])
        ii, jj, kk = _MUL_TABLES[n]
        out = np.bincount(kk, weights=self.c[ii] * other.c[jj], minlength=SIZES[n])
        return Jet(n, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if float(other) == 0.0:
                raise DomainError("division by zero")
            return Jet(self.order, self.c / float(other))
        if not isinstance(other, Jet):
            return NotImplemented
        return self * other.recip()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.recip()

    def __pow__(self, k: int):
        return self.powi(k)

    # -- composition with univariate functions ------------------------------

    def _compose(self, derivs: Iterable[float]) -> "Jet":
        """g(f) for univariate g with derivatives [g(f0), g'(f0), ...] at the
        value slot; exact at the stored order since (f - f0) is nilpotent."""
        derivs = list(derivs)
        out = Jet.const(derivs[0], self.order)
        if self.order == 0:
            return out
        nil = Jet(self.order, self.c.copy())
        nil.c[0] = 0.0
        power = None
        fact = 1.0
        for k in range(1, min(self.order, len(derivs) - 1) + 1):
            power = nil if power is None else power * nil
            fact *= k
            out = out + power * (derivs[k] / fact)
        return out

    def recip(self) -> "Jet":
        v = self.value
        if v == 0.0:
            raise DomainError("division by a jet with zero value slot")
        return self._compose([1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4])

    def sqrt(self) -> "Jet":
        v = self.value
        if v <= 0.0:
            raise DomainError(f"sqrt of nonpositive value slot {v}")
        s = math.sqrt(v)
        return self._compose([s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)])

    def exp(self) -> "Jet":
        e = math.exp(self.value)
        return self._compose([e, e, e, e])

    def log(self) -> "Jet":
        v = self.value
        if v <= 0.0:
            raise DomainError(f"log of nonpositive value slot {v}")
        return self._compose([math.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3])

    def sin(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose([s, c, -s, -c])

    def cos(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose([c, -s, -c, s])

    def powi(self, k: int) -> "Jet":
        k = int(k)
        if k < 0:
            return self.recip().powi(-k)
        out = Jet.const(1.0, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.value!r})"


def jet_vars(point: Sequence[float], order: int) -> list[Jet]:
    """Seeds of the four coordinate functions at a point."""
    return [Jet.seed(point, v, order) for v in range(N_VARS)]


def jet_seed(point: Sequence[float], var_index: int, order: int) -> Jet:
    return Jet.seed(point, var_index, order)


_UNARY = {
    "neg": lambda j: -j,
    "sqrt": Jet.sqrt,
    "exp": Jet.exp,
    "log": Jet.log,
    "sin": Jet.sin,
    "cos": Jet.cos,
}

_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def jet_apply(fn: str, *args):
    """Apply a named elementary operation to one or two jets."""
    if fn in _UNARY:
        (j,) = args
        return _UNARY[fn](j)
    if fn in _BINARY:
        a, b = args
        return _BINARY[fn](a, b)
    if fn == "pow_int":
        j, k = args
        return j.powi(k)
    raise ValueError(f"unknown jet function {fn!r}")


def jet_extract(j: Jet, alpha: Sequence[int]) -> float:
    return j.extract(alpha)


class CJet:
    """Complex jet as a pair of real jets."""

    __slots__ = ("re", "im")

    def __init__(self, re: Jet, im: Jet):
        n = min(re.order, im.order)
        self.re = re.truncate(n)
        self.im = im.truncate(n)

    @staticmethod
    def const(z: complex, order: int) -> "CJet":
        return CJet(Jet.const(z.real, order), Jet.const(z.imag, order))

    @staticmethod
    def from_jet(j: Jet) -> "CJet":
        return CJet(j, Jet.const(0.0, j.order))

    @property
    def order(self) -> int:
        return self.re.order

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)

    def conj(self) -> "CJet":
        return CJet(self.re, -self.im)

    def derive(self, var: int) -> "CJet":
        return CJet(self.re.derive(var), self.im.derive(var))

    def truncate(self, order: int) -> "CJet":
        return CJet(self.re.truncate(order), self.im.truncate(order))

    def _coerce(self, other) -> "CJet | None":
        if isinstance(other, CJet):
            return other
        if isinstance(other, Jet):
            return CJet.from_jet(other)
        if isinstance(other, (int, float, complex, np.number)):
            return CJet.const(complex(other), self.order)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CJet(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CJet(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return CJet(-self.re, -self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CJet(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = (o.re * o.re + o.im * o.im).recip()
        num = self * o.conj()
        return CJet(num.re * den, num.im * den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def exp(self) -> "CJet":
        r = self.re.exp()
        return CJet(r * self.im.cos(), r * self.im.sin())

    def __repr__(self):
        return f"CJet(order={self.order}, value={self.value!r})"

"""Exact angular-momentum algebra: Clebsch-Gordan coefficients, Wigner 6j/9j
symbols, and the spin-1 rotation matrix.

Coefficients are evaluated with the Racah factorial sums in exact
integer/Fraction arithmetic and converted to float at the end, which keeps
them cancellation-free for the angular momenta that occur here (j up to ~10).
The Condon-Shortley phase convention is used throughout, with spherical unit
vectors e_{+1} = -(x + iy)/sqrt(2), e_{-1} = (x - iy)/sqrt(2), e_0 = z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering

import numpy as np

from .errors import ConfigError

__all__ = [
    "HalfInt",
    "EulerAngles",
    "clebsch_gordan",
    "wigner_6j",
    "wigner_9j",
    "wigner_d1",
]


@total_ordering
class HalfInt:
    """An exact integer or half-integer, stored as twice its value.

    Supports the arithmetic needed for angular momentum bookkeeping:
    addition/subtraction (with HalfInt or int), negation, comparison, and
    hashing. ``HalfInt(3, 2)`` and ``HalfInt.from_value(1.5)`` both give 3/2.
    """

    __slots__ = ("twice",)

    def __init__(self, numerator, denominator=1):
        if denominator == 1:
            twice = 2 * numerator
        elif denominator == 2:
            twice = numerator
        else:
            raise ConfigError(
                f"HalfInt denominator must be 1 or 2, got {denominator}"
            )
        if twice != int(twice):
            raise ConfigError(f"not a half-integer: {numerator}/{denominator}")
        object.__setattr__(self, "twice", int(twice))

    @staticmethod
    def from_value(value):
        """Coerce a HalfInt, int, float, or Fraction to HalfInt."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, Fraction):
            twice = 2 * value
            if twice.denominator != 1:
                raise ConfigError(f"not a half-integer: {value}")
            return HalfInt(int(twice), 2)
        twice = 2 * value
        if twice != round(twice):
            raise ConfigError(f"not a half-integer: {value}")
        return HalfInt(int(round(twice)), 2)

    def __setattr__(self, name, value):
        raise AttributeError("HalfInt is immutable")

    @property
    def is_integer(self):
        return self.twice % 2 == 0

    def __float__(self):
        return self.twice / 2.0

    def __int__(self):
        if self.twice % 2:
            raise ValueError(f"{self} is not an integer")
        return self.twice // 2

    def __add__(self, other):
        other = HalfInt.from_value(other)
        return HalfInt(self.twice + other.twice, 2)

    __radd__ = __add__

    def __sub__(self, other):
        other = HalfInt.from_value(other)
        return HalfInt(self.twice - other.twice, 2)

    def __rsub__(self, other):
        return HalfInt.from_value(other) - self

    def __neg__(self):
        return HalfInt(-self.twice, 2)

    def __abs__(self):
        return HalfInt(abs(self.twice), 2)

    def __eq__(self, other):
        try:
            return self.twice == HalfInt.from_value(other).twice
        except (ConfigError, TypeError):
            return NotImplemented

    def __lt__(self, other):
        return self.twice < HalfInt.from_value(other).twice

    def __hash__(self):
        return hash(self.twice / 2.0)

    def __repr__(self):
        if self.twice % 2 == 0:
            return str(self.twice // 2)
        return f"{self.twice}/2"


@dataclass(frozen=True)
class EulerAngles:
    """z-y-z Euler angles (radians) for the spin-1 rotation matrix."""

    beta1: float
    beta2: float
    beta3: float


def _twice(value):
    return HalfInt.from_value(value).twice


def _fact(n2):
    # n2 is twice an integer quantity; factorial argument must come out whole
    if n2 % 2:
        raise ValueError("factorial of a half-integer requested")
    n = n2 // 2
    if n < 0:
        raise ValueError("factorial of a negative number requested")
    return math.factorial(n)


def _triangle_ok(ta, tb, tc):
    return (
        abs(ta - tb) <= tc <= ta + tb
        and (ta + tb + tc) % 2 == 0
        and tc >= 0
    )


def _delta2(ta, tb, tc):
    """Triangle coefficient Delta(abc)^2 as an exact Fraction."""
    return Fraction(
        _fact(ta + tb - tc) * _fact(ta - tb + tc) * _fact(-ta + tb + tc),
        _fact(ta + tb + tc + 2),
    )


@lru_cache(maxsize=None)
def _cg_twice(tj1, tm1, tj2, tm2, tj3, tm3):
    if tm1 + tm2 != tm3:
        return 0.0
    if not _triangle_ok(tj1, tj2, tj3):
        return 0.0
    if abs(tm3) > tj3 or (tj3 + tm3) % 2:
        return 0.0
    pref = (
        Fraction(tj3 + 1)
        * _delta2(tj1, tj2, tj3)
        * _fact(tj1 + tm1)
        * _fact(tj1 - tm1)
        * _fact(tj2 + tm2)
        * _fact(tj2 - tm2)
        * _fact(tj3 + tm3)
        * _fact(tj3 - tm3)
    )
    # Racah sum over k; bounds keep every factorial argument non-negative.
    k_min = max(0, tj2 - tj3 - tm1, tj1 - tj3 + tm2)
    k_max = min(tj1 + tj2 - tj3, tj1 - tm1, tj2 + tm2)
    total = Fraction(0)
    for tk in range(k_min, k_max + 1, 2):
        sign = -1 if (tk // 2) % 2 else 1
        denom = (
            _fact(tk)
            * _fact(tj1 + tj2 - tj3 - tk)
            * _fact(tj1 - tm1 - tk)
            * _fact(tj2 + tm2 - tk)
            * _fact(tj3 - tj2 + tm1 + tk)
            * _fact(tj3 - tj1 - tm2 + tk)
        )
        total += Fraction(sign, denom)
    if total == 0:
        return 0.0
    return float(total) * math.sqrt(float(pref))


@lru_cache(maxsize=None)
def _6j_twice(ta, tb, tc, td, te, tf):
    triads = (
        (ta, tb, tc),
        (ta, te, tf),
        (td, tb, tf),
        (td, te, tc),
    )
    for tri in triads:
        if not _triangle_ok(*tri):
            return 0.0
    pref = Fraction(1)
    for tri in triads:
        pref *= _delta2(*tri)
    k_min = max(ta + tb + tc, ta + te + tf, td + tb + tf, td + te + tc)
    k_max = min(ta + tb + td + te, tb + tc + te + tf, ta + tc + td + tf)
    total = Fraction(0)
    for tk in range(k_min, k_max + 1, 2):
        sign = -1 if (tk // 2) % 2 else 1
        num = _fact(tk + 2)
        denom = (
            _fact(tk - ta - tb - tc)
            * _fact(tk - ta - te - tf)
            * _fact(tk - td - tb - tf)
            * _fact(tk - td - te - tc)
            * _fact(ta + tb + td + te - tk)
            * _fact(tb + tc + te + tf - tk)
            * _fact(ta + tc + td + tf - tk)
        )
        total += Fraction(sign * num, denom)
    if total == 0:
        return 0.0
    return float(total) * math.sqrt(float(pref))


@lru_cache(maxsize=None)
def _9j_twice(ta, tb, tc, td, te, tf, tg, th, ti):
    rows = ((ta, tb, tc), (td, te, tf), (tg, th, ti))
    cols = ((ta, td, tg), (tb, te, th), (tc, tf, ti))
    for tri in rows + cols:
        if not _triangle_ok(*tri):
            return 0.0
    tx_min = max(abs(ta - ti), abs(tb - tf), abs(td - th))
    tx_max = min(ta + ti, tb + tf, td + th)
    total = 0.0
    for tx in range(tx_min, tx_max + 1, 2):
        term = (
            (tx + 1)
            * _6j_twice(ta, tb, tc, tf, ti, tx)
            * _6j_twice(td, te, tf, tb, tx, th)
            * _6j_twice(tg, th, ti, tx, ta, td)
        )
        if tx % 2:
            term = -term
        total += term
    return total


def clebsch_gordan(j1, m1, j2, m2, j3, m3):
    """Clebsch-Gordan coefficient <j1,m1; j2,m2 | j3,m3>.

    Returns 0 when the triangle rule, projection addition, or |m3| <= j3
    fails. Raises ConfigError for non-half-integral arguments or for input
    states with |m1| > j1 or |m2| > j2 (those label no physical state).
    """
    tj1, tm1 = _twice(j1), _twice(m1)
    tj2, tm2 = _twice(j2), _twice(m2)
    tj3, tm3 = _twice(j3), _twice(m3)
    for tj, tm, label in ((tj1, tm1, "1"), (tj2, tm2, "2")):
        if tj < 0 or abs(tm) > tj or (tj + tm) % 2:
            raise ConfigError(
                f"invalid angular momentum state (j{label}, m{label})"
            )
    if tj3 < 0 or (tj3 + tm3) % 2:
        return 0.0
    return _cg_twice(tj1, tm1, tj2, tm2, tj3, tm3)


def wigner_6j(j1, j2, j3, j4, j5, j6):
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; 0 if any triad is invalid."""
    return _6j_twice(
        _twice(j1), _twice(j2), _twice(j3),
        _twice(j4), _twice(j5), _twice(j6),
    )


def wigner_9j(j1, j2, j3, j4, j5, j6, j7, j8, j9):
    """Wigner 9j symbol, evaluated by the sum over products of three 6j."""
    return _9j_twice(
        _twice(j1), _twice(j2), _twice(j3),
        _twice(j4), _twice(j5), _twice(j6),
        _twice(j7), _twice(j8), _twice(j9),
    )


def wigner_d1(angles):
    """Spin-1 rotation matrix D^1(beta1, beta2, beta3), z-y-z convention.

    Basis ordering is {|+1>, |0>, |-1>}:
    D^1_{m'm} = exp(-i m' beta1) d^1_{m'm}(beta2) exp(-i m beta3).
    """
    b1, b2, b3 = angles.beta1, angles.beta2, angles.beta3
    c, s = math.cos(b2), math.sin(b2)
    d = np.array(
        [
            [(1 + c) / 2, -s / math.sqrt(2), (1 - c) / 2],
            [s / math.sqrt(2), c, -s / math.sqrt(2)],
            [(1 - c) / 2, s / math.sqrt(2), (1 + c) / 2],
        ]
    )
    m = np.array([1, 0, -1])
    phase1 = np.exp(-1j * m * b1)
    phase3 = np.exp(-1j * m * b3)
    return phase1[:, None] * d * phase3[None, :]

"""Exact rational substrate.

All endpoints, slopes and masses are ``gmpy2.mpq`` values, which are
arbitrary precision and always stored in lowest terms.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational as _RationalABC

from gmpy2 import mpq

Rational = type(mpq())

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)


def Q(value) -> Rational:
    """Coerce ``value`` to an exact rational.

    Accepts ints, ``Fraction``, ``mpq`` and strings ``"p/q"`` or ``"p"``.
    Floats are rejected because they would silently import rounding error.
    """
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return mpq(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational {value!r}") from exc
    if isinstance(value, _RationalABC):
        return mpq(int(value.numerator), int(value.denominator))
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def fmt(q) -> str:
    """Serialise as ``"p/q"`` (denominator always present)."""
    q = Q(q)
    return f"{q.numerator}/{q.denominator}"


def to_fraction(q) -> Fraction:
    q = Q(q)
    return Fraction(int(q.numerator), int(q.denominator))


def log2q(q) -> float:
    """log2 of a positive rational, safe for huge numerators/denominators."""
    q = Q(q)
    if q <= 0:
        raise ValueError("log2 of a non-positive rational")
    return _log2_int(int(q.numerator)) - _log2_int(int(q.denominator))


def _log2_int(n: int) -> float:
    if n.bit_length() < 1000:
        return math.log2(n)
    shift = n.bit_length() - 64
    return math.log2(n >> shift) + shift

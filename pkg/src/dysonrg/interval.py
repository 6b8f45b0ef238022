"""Outward-rounded interval arithmetic on doubles.

An :class:`Interval` holds a lower and an upper endpoint, either Python floats
or numpy arrays of equal shape.  Every operation rounds its endpoints outward
with ``nextafter`` so that the exact real result of the operation applied to
any points of the operands lies inside the returned interval.

Basic operations (+, -, *, /) are correctly rounded in IEEE double, so one ulp
of widening suffices.  ``exp``, ``log`` and ``pow`` come from libm/numpy which
are accurate to within a couple of ulps but not correctly rounded; those are
widened by ``TRANSCENDENTAL_ULPS``.
"""
from __future__ import annotations

import math
from typing import Union

import numpy as np

TRANSCENDENTAL_ULPS = 4

Number = Union[float, int]


def _down(x, k: int = 1):
    for _ in range(k):
        x = np.nextafter(x, -np.inf)
    return x


def _up(x, k: int = 1):
    for _ in range(k):
        x = np.nextafter(x, np.inf)
    return x


def _scalarize(x):
    if isinstance(x, np.ndarray) and x.ndim == 0:
        return float(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


class Interval:
    """Closed interval ``[lo, hi]`` with outward rounding."""

    __slots__ = ("lo", "hi")
    __array_priority__ = 100

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = _scalarize(np.asarray(lo, dtype=float)) if not isinstance(lo, float) else lo
        hi = _scalarize(np.asarray(hi, dtype=float)) if not isinstance(hi, float) else hi
        if np.any(np.asarray(lo) > np.asarray(hi)):
            raise ValueError(f"empty interval: lo={lo!r} > hi={hi!r}")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo, hi) -> "Interval":
        obj = cls.__new__(cls)
        obj.lo = _scalarize(lo)
        obj.hi = _scalarize(hi)
        return obj

    @staticmethod
    def coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        return Interval(x, x)

    # -- inspection --------------------------------------------------------
    @property
    def mid(self):
        return _scalarize(0.5 * (np.asarray(self.lo) + np.asarray(self.hi)))

    @property
    def width(self):
        return _scalarize(np.asarray(self.hi) - np.asarray(self.lo))

    @property
    def mag(self):
        """Largest absolute value in the interval."""
        return _scalarize(np.maximum(np.abs(self.lo), np.abs(self.hi)))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return bool(np.all(np.asarray(self.lo) <= x.lo) and np.all(np.asarray(x.hi) <= self.hi))
        return bool(np.all(np.asarray(self.lo) <= x) and np.all(np.asarray(x) <= self.hi))

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx) -> "Interval":
        return Interval._raw(np.asarray(self.lo)[idx], np.asarray(self.hi)[idx])

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return bool(np.all(self.lo == other.lo) and np.all(self.hi == other.hi))

    __hash__ = None

    # -- arithmetic --------------------------------------------------------
    def __neg__(self) -> "Interval":
        return Interval._raw(-np.asarray(self.hi), -np.asarray(self.lo))

    def __pos__(self) -> "Interval":
        return self

    def __add__(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval._raw(_down(np.add(self.lo, o.lo)), _up(np.add(self.hi, o.hi)))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval._raw(_down(np.subtract(self.lo, o.hi)), _up(np.subtract(self.hi, o.lo)))

    def __rsub__(self, other) -> "Interval":
        return Interval.coerce(other) - self

    def __mul__(self, other) -> "Interval":
        o = Interval.coerce(other)
        a, b = np.asarray(self.lo), np.asarray(self.hi)
        c, d = np.asarray(o.lo), np.asarray(o.hi)
        prods = np.stack(np.broadcast_arrays(a * c, a * d, b * c, b * d))
        return Interval._raw(_down(prods.min(axis=0)), _up(prods.max(axis=0)))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = Interval.coerce(other)
        c, d = np.asarray(o.lo), np.asarray(o.hi)
        if np.any((c <= 0) & (d >= 0)):
            raise ZeroDivisionError("interval divisor contains zero")
        a, b = np.asarray(self.lo), np.asarray(self.hi)
        quots = np.stack(np.broadcast_arrays(a / c, a / d, b / c, b / d))
        return Interval._raw(_down(quots.min(axis=0)), _up(quots.max(axis=0)))

    def __rtruediv__(self, other) -> "Interval":
        return Interval.coerce(other) / self

    def __abs__(self) -> "Interval":
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        straddle = (lo <= 0) & (hi >= 0)
        mig = np.where(straddle, 0.0, np.minimum(np.abs(lo), np.abs(hi)))
        mag = np.maximum(np.abs(lo), np.abs(hi))
        return Interval._raw(mig, mag)

    # -- comparisons that are certain --------------------------------------
    def certainly_lt(self, x) -> bool:
        o = Interval.coerce(x)
        return bool(np.all(np.asarray(self.hi) < o.lo))

    def certainly_gt(self, x) -> bool:
        o = Interval.coerce(x)
        return bool(np.all(np.asarray(self.lo) > o.hi))


def iexp(x: Interval) -> Interval:
    x = Interval.coerce(x)
    lo = np.maximum(_down(np.exp(x.lo), TRANSCENDENTAL_ULPS), 0.0)
    return Interval._raw(lo, _up(np.exp(x.hi), TRANSCENDENTAL_ULPS))


def ilog(x: Interval) -> Interval:
    x = Interval.coerce(x)
    if np.any(np.asarray(x.lo) <= 0):
        raise ValueError("log of an interval reaching zero or below")
    return Interval._raw(_down(np.log(x.lo), TRANSCENDENTAL_ULPS), _up(np.log(x.hi), TRANSCENDENTAL_ULPS))


def ipow_pos(x: Interval, p: float) -> Interval:
    """``x**p`` for ``x > 0``; ``p`` is a point exponent."""
    x = Interval.coerce(x)
    if np.any(np.asarray(x.lo) <= 0):
        raise ValueError("ipow_pos needs a positive base")
    a = np.power(x.lo, p)
    b = np.power(x.hi, p)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return Interval._raw(_down(lo, TRANSCENDENTAL_ULPS), _up(hi, TRANSCENDENTAL_ULPS))


def isum(x: Interval) -> Interval:
    """Enclosure of the sum of an interval array.

    ``math.fsum`` is correctly rounded, so one ulp outward is enough.
    """
    lo = np.ravel(np.asarray(x.lo, dtype=float))
    hi = np.ravel(np.asarray(x.hi, dtype=float))
    return Interval._raw(_down(math.fsum(lo)), _up(math.fsum(hi)))


def hull(*items) -> Interval:
    los = [np.min(Interval.coerce(v).lo) for v in items]
    his = [np.max(Interval.coerce(v).hi) for v in items]
    return Interval(float(min(los)), float(max(his)))


def lower(x) -> float:
    return x.lo if isinstance(x, Interval) else x


def upper(x) -> float:
    return x.hi if isinstance(x, Interval) else x


def midpoint(x) -> float:
    return x.mid if isinstance(x, Interval) else x

"""Exact intervals and finite unions of intervals inside [0, 1]."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .rational import ONE, ZERO, Q, Rational, fmt


@dataclass(frozen=True)
class Interval:
    """Interval with rational endpoints and explicit closedness flags."""

    lo: Rational
    hi: Rational
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", Q(self.lo))
        object.__setattr__(self, "hi", Q(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"interval with lo > hi: {self.lo} > {self.hi}")

    @classmethod
    def closed(cls, lo, hi) -> "Interval":
        return cls(lo, hi, True, True)

    @classmethod
    def open(cls, lo, hi) -> "Interval":
        return cls(lo, hi, False, False)

    @classmethod
    def point(cls, x) -> "Interval":
        return cls(x, x, True, True)

    @property
    def is_empty(self) -> bool:
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    @property
    def length(self) -> Rational:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = Q(x)
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    __contains__ = contains

    def intersect(self, other: "Interval") -> "Interval | None":
        if self.lo > other.lo:
            lo, lo_c = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_c = other.lo, other.lo_closed
        else:
            lo, lo_c = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_c = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_c = other.hi, other.hi_closed
        else:
            hi, hi_c = self.hi, self.hi_closed and other.hi_closed
        if lo > hi:
            return None
        iv = Interval(lo, hi, lo_c, hi_c)
        return None if iv.is_empty else iv

    def to_json(self) -> dict:
        return {"lo": fmt(self.lo), "hi": fmt(self.hi),
                "lo_closed": self.lo_closed, "hi_closed": self.hi_closed}

    @classmethod
    def from_json(cls, d: dict) -> "Interval":
        return cls(Q(d["lo"]), Q(d["hi"]), bool(d["lo_closed"]), bool(d["hi_closed"]))

    def __repr__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


def _touch(a: Interval, b: Interval) -> bool:
    """True if a (left) and b can be merged into one interval."""
    if b.lo < a.hi:
        return True
    if b.lo == a.hi:
        return a.hi_closed or b.lo_closed
    return False


class IntervalSet:
    """Sorted, pairwise disjoint, maximally merged union of intervals."""

    __slots__ = ("components",)

    def __init__(self, intervals: Iterable[Interval] = ()):
        ivs = sorted((iv for iv in intervals if not iv.is_empty),
                     key=lambda iv: (iv.lo, not iv.lo_closed))
        merged: list[Interval] = []
        for iv in ivs:
            if merged and _touch(merged[-1], iv):
                last = merged[-1]
                if iv.hi > last.hi:
                    hi, hi_c = iv.hi, iv.hi_closed
                elif iv.hi < last.hi:
                    hi, hi_c = last.hi, last.hi_closed
                else:
                    hi, hi_c = last.hi, last.hi_closed or iv.hi_closed
                merged[-1] = Interval(last.lo, hi, last.lo_closed, hi_c)
            else:
                merged.append(iv)
        self.components: tuple[Interval, ...] = tuple(merged)

    @classmethod
    def unit(cls) -> "IntervalSet":
        return cls([Interval.closed(ZERO, ONE)])

    @classmethod
    def half_open(cls, lo, hi) -> "IntervalSet":
        """``[lo, hi)``, closed at 1 when ``hi == 1`` (the piece convention)."""
        hi = Q(hi)
        return cls([Interval(lo, hi, True, hi == ONE)])

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __bool__(self):
        return bool(self.components)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "IntervalSet(" + " u ".join(map(repr, self.components)) + ")"

    @property
    def measure(self) -> Rational:
        """Exact Lebesgue measure."""
        return sum((iv.length for iv in self.components), ZERO)

    def contains(self, x) -> bool:
        return any(iv.contains(x) for iv in self.components)

    __contains__ = contains

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.components + other.components)

    __or__ = union

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.components, other.components
        while i < len(a) and j < len(b):
            iv = a[i].intersect(b[j])
            if iv is not None:
                out.append(iv)
            if (a[i].hi, a[i].hi_closed) < (b[j].hi, b[j].hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    __and__ = intersection

    def complement(self) -> "IntervalSet":
        """Complement inside [0, 1]."""
        out = []
        lo, lo_c = ZERO, True
        for iv in self.components:
            if lo <= iv.lo:
                out.append(Interval(lo, iv.lo, lo_c, not iv.lo_closed))
            lo, lo_c = iv.hi, not iv.hi_closed
        if lo <= ONE:
            out.append(Interval(lo, ONE, lo_c, True))
        return IntervalSet(out)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other.complement())

    __sub__ = difference

    def endpoints(self) -> list[Rational]:
        pts = []
        for iv in self.components:
            pts.extend((iv.lo, iv.hi))
        return pts

    def to_json(self) -> list:
        return [iv.to_json() for iv in self.components]

    @classmethod
    def from_json(cls, data: list) -> "IntervalSet":
        return cls(Interval.from_json(d) for d in data)

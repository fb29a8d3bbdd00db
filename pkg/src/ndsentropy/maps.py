"""Exact piecewise-affine functions and self-maps of [0, 1].

Piece ``j`` governs ``[b_j, b_{j+1})``; the last piece is closed at 1.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import Iterator, Sequence

from .errors import BudgetExceeded, DomainError, UsageError
from .intervals import Interval, IntervalSet
from .rational import ONE, ZERO, Q, Rational, fmt


def split_affine(lo, hi, slope, icpt, breaks: Sequence[Rational]):
    """Split ``[lo, hi)`` where ``x -> slope*x + icpt`` crosses ``breaks``.

    Returns ``(x_lo, x_hi, k)`` triples in increasing ``x``; ``k`` indexes the
    cell ``[breaks[k], breaks[k+1])`` that receives the open image of the
    sub-interval.
    """
    last = len(breaks) - 2
    if slope == 0:
        k = min(bisect_right(breaks, icpt) - 1, last)
        return [(lo, hi, k)]
    y0 = slope * lo + icpt
    y1 = slope * hi + icpt
    out = []
    if slope > 0:
        a = bisect_right(breaks, y0)
        b = bisect_left(breaks, y1)
        k = a - 1
        x = lo
        for idx in range(a, b):
            xn = (breaks[idx] - icpt) / slope
            out.append((x, xn, k))
            x = xn
            k += 1
        out.append((x, hi, min(k, last)))
    else:
        a = bisect_right(breaks, y1)
        b = bisect_left(breaks, y0)
        k = b - 1
        x = lo
        for idx in range(b - 1, a - 1, -1):
            xn = (breaks[idx] - icpt) / slope
            out.append((x, xn, k))
            x = xn
            k -= 1
        out.append((x, hi, max(k, 0)))
    return out


class PiecewiseAffine:
    """Function on [0, 1] that is affine on each half-open piece."""

    __slots__ = ("breaks", "slopes", "intercepts")

    def __init__(self, breaks, slopes, intercepts, *, merge: bool = True):
        b = tuple(Q(v) for v in breaks)
        s = tuple(Q(v) for v in slopes)
        t = tuple(Q(v) for v in intercepts)
        if len(b) < 2 or b[0] != ZERO or b[-1] != ONE:
            raise UsageError("breakpoints must start at 0 and end at 1")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise UsageError("breakpoints must be strictly increasing")
        if len(s) != len(b) - 1 or len(t) != len(b) - 1:
            raise UsageError("need one (slope, intercept) per piece")
        if merge:
            b, s, t = _merge_collinear(b, s, t)
        self.breaks, self.slopes, self.intercepts = b, s, t

    @classmethod
    def from_pieces(cls, pieces, **kw):
        """Build from ``[(lo, hi, slope, intercept), ...]`` tiling [0, 1]."""
        pieces = list(pieces)
        breaks = [pieces[0][0]] + [p[1] for p in pieces]
        for p, q in zip(pieces, pieces[1:]):
            if Q(p[1]) != Q(q[0]):
                raise UsageError("pieces must be contiguous")
        return cls(breaks, [p[2] for p in pieces], [p[3] for p in pieces], **kw)

    @classmethod
    def constant(cls, value, **kw):
        return cls([0, 1], [0], [value], **kw)

    @property
    def n_pieces(self) -> int:
        return len(self.slopes)

    def pieces(self) -> Iterator[tuple[Rational, Rational, Rational, Rational]]:
        b = self.breaks
        for j in range(self.n_pieces):
            yield b[j], b[j + 1], self.slopes[j], self.intercepts[j]

    def piece_index(self, x) -> int:
        return min(bisect_right(self.breaks, x) - 1, self.n_pieces - 1)

    def __call__(self, x) -> Rational:
        x = Q(x)
        if x < ZERO or x > ONE:
            raise DomainError(f"{x} is outside [0, 1]")
        j = self.piece_index(x)
        return self.slopes[j] * x + self.intercepts[j]

    def apply_all(self, xs: Sequence[Rational]) -> list[Rational]:
        """Image of each exact point of ``xs`` (assumed to lie in [0, 1] already)."""
        inner, sl, ic = self.breaks[1:-1], self.slopes, self.intercepts
        out = []
        for x in xs:
            j = bisect_right(inner, x)
            out.append(sl[j] * x + ic[j])
        return out

    @property
    def lipschitz(self) -> Rational:
        """Largest absolute slope (the Lipschitz constant of a continuous map)."""
        return max(abs(s) for s in self.slopes)

    def is_continuous(self) -> bool:
        for j in range(1, self.n_pieces):
            b = self.breaks[j]
            if self.slopes[j - 1] * b + self.intercepts[j - 1] != self.slopes[j] * b + self.intercepts[j]:
                return False
        return True

    def piece_image(self, j: int) -> tuple[Rational, Rational]:
        """Closure of the image of piece ``j`` as ``(min, max)``."""
        lo, hi, s, t = self.breaks[j], self.breaks[j + 1], self.slopes[j], self.intercepts[j]
        y0, y1 = s * lo + t, s * hi + t
        return (y0, y1) if y0 <= y1 else (y1, y0)

    def __eq__(self, other):
        return (isinstance(other, PiecewiseAffine) and self.breaks == other.breaks
                and self.slopes == other.slopes and self.intercepts == other.intercepts)

    def __hash__(self):
        return hash((self.breaks, self.slopes, self.intercepts))

    def __repr__(self):
        parts = [f"[{lo},{hi}): {s}x{'+' if t >= 0 else ''}{t}" for lo, hi, s, t in self.pieces()]
        return f"{type(self).__name__}(" + "; ".join(parts) + ")"

    def to_json(self) -> dict:
        return {"breakpoints": [fmt(v) for v in self.breaks],
                "slopes": [fmt(v) for v in self.slopes],
                "intercepts": [fmt(v) for v in self.intercepts]}

    @classmethod
    def from_json(cls, d: dict):
        return cls(d["breakpoints"], d["slopes"], d["intercepts"])


class PwAffineMap(PiecewiseAffine):
    """Piecewise-affine self-map of [0, 1] (closure of every piece image in [0, 1])."""

    __slots__ = ()

    def __init__(self, breaks, slopes, intercepts, *, merge: bool = True):
        super().__init__(breaks, slopes, intercepts, merge=merge)
        for j in range(self.n_pieces):
            lo, hi = self.piece_image(j)
            if lo < ZERO or hi > ONE:
                raise UsageError(f"piece {j} maps outside [0, 1]: [{lo}, {hi}]")

    @classmethod
    def identity(cls) -> "PwAffineMap":
        return cls([0, 1], [1], [0])

    @classmethod
    def linear_mod1(cls, slope: int, shift=0) -> "PwAffineMap":
        """``x -> slope*x + shift (mod 1)`` for a positive integer slope."""
        slope = int(slope)
        shift = Q(shift) % 1
        if slope < 1:
            raise UsageError("slope must be a positive integer")
        cuts = [(Q(k) - shift) / slope for k in range(1, slope + 1)]
        breaks = [ZERO] + [c for c in cuts if ZERO < c < ONE] + [ONE]
        slopes, icpts = [], []
        for lo in breaks[:-1]:
            k = int((slope * lo + shift) // 1)
            slopes.append(Q(slope))
            icpts.append(shift - k)
        return cls(breaks, slopes, icpts)


def _merge_collinear(b, s, t):
    nb, ns, nt = [b[0]], [s[0]], [t[0]]
    for j in range(1, len(s)):
        if s[j] == ns[-1] and t[j] == nt[-1]:
            continue
        nb.append(b[j])
        ns.append(s[j])
        nt.append(t[j])
    nb.append(b[-1])
    return tuple(nb), tuple(ns), tuple(nt)


def compose(outer: PiecewiseAffine, inner: PiecewiseAffine, budget: int | None = None):
    """Exact ``outer o inner``.

    Agrees with pointwise composition except possibly at finitely many points
    where a decreasing piece of ``inner`` hits a discontinuity of ``outer``.
    """
    pieces = []
    ob = outer.breaks
    for lo, hi, s, t in inner.pieces():
        for x0, x1, k in split_affine(lo, hi, s, t, ob):
            so, to = outer.slopes[k], outer.intercepts[k]
            pieces.append((x0, x1, so * s, so * t + to))
        if budget is not None and len(pieces) > budget:
            raise BudgetExceeded("composite pieces", len(pieces), budget)
    cls = PwAffineMap if isinstance(outer, PwAffineMap) and isinstance(inner, PwAffineMap) else PiecewiseAffine
    return cls.from_pieces(pieces)


def preimage(fmap: PiecewiseAffine, target: IntervalSet) -> IntervalSet:
    """Exact full preimage of ``target`` (closedness flags respected)."""
    out = []
    for j, (lo, hi, s, t) in enumerate(fmap.pieces()):
        dom = Interval(lo, hi, True, j == fmap.n_pieces - 1)
        for iv in target:
            if s == 0:
                if iv.contains(t):
                    out.append(dom)
                continue
            a, b = (iv.lo - t) / s, (iv.hi - t) / s
            if s > 0:
                cand = Interval(a, b, iv.lo_closed, iv.hi_closed)
            else:
                cand = Interval(b, a, iv.hi_closed, iv.lo_closed)
            x = cand.intersect(dom)
            if x is not None:
                out.append(x)
    return IntervalSet(out)

"""Piecewise-constant-density probability measures with atoms, and their pushforwards."""
from __future__ import annotations

import threading
from bisect import bisect_right
from typing import Iterable, Mapping, Sequence

from .errors import UsageError
from .intervals import IntervalSet
from .maps import PiecewiseAffine
from .rational import ONE, ZERO, Q, Rational, fmt
from .system import NDSystem


class PwConstMeasure:
    """Density ``heights[j]`` on ``[breaks[j], breaks[j+1])`` plus point masses.

    Stored canonically (equal adjacent heights merged, zero atoms dropped), so
    ``==`` is exact equality of measures.
    """

    __slots__ = ("breaks", "heights", "atoms")

    def __init__(self, breaks, heights, atoms: Mapping | Iterable = (), *, check_total: bool = True):
        b = [Q(v) for v in breaks]
        h = [Q(v) for v in heights]
        if len(b) < 2 or b[0] != ZERO or b[-1] != ONE or len(h) != len(b) - 1:
            raise UsageError("density pieces must tile [0, 1]")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise UsageError("density breakpoints must increase")
        if any(v < 0 for v in h):
            raise UsageError("negative density")
        items = atoms.items() if isinstance(atoms, Mapping) else atoms
        acc: dict[Rational, Rational] = {}
        for p, m in items:
            p, m = Q(p), Q(m)
            if p < ZERO or p > ONE:
                raise UsageError(f"atom at {p} outside [0, 1]")
            if m < 0:
                raise UsageError("negative atom mass")
            acc[p] = acc.get(p, ZERO) + m
        nb, nh = [b[0]], []
        for j, v in enumerate(h):
            if nh and nh[-1] == v:
                nb[-1] = b[j + 1]
            else:
                nh.append(v)
                nb.append(b[j + 1])
        self.breaks = tuple(nb)
        self.heights = tuple(nh)
        self.atoms = tuple(sorted((p, m) for p, m in acc.items() if m != 0))
        if check_total and self.total_mass() != ONE:
            raise UsageError(f"total mass is {self.total_mass()}, not 1")

    @classmethod
    def lebesgue(cls) -> "PwConstMeasure":
        return cls([0, 1], [1])

    @classmethod
    def dirac(cls, point) -> "PwConstMeasure":
        return cls([0, 1], [0], [(point, 1)])

    @classmethod
    def uniform_on(cls, lo, hi) -> "PwConstMeasure":
        lo, hi = Q(lo), Q(hi)
        pts = sorted({ZERO, lo, hi, ONE})
        heights = [1 / (hi - lo) if lo <= a and b <= hi else ZERO for a, b in zip(pts, pts[1:])]
        return cls(pts, heights)

    def density_pieces(self):
        b = self.breaks
        for j, h in enumerate(self.heights):
            yield b[j], b[j + 1], h

    def total_mass(self) -> Rational:
        b = self.breaks
        dens = sum((h * (b[j + 1] - b[j]) for j, h in enumerate(self.heights)), ZERO)
        return dens + sum((m for _, m in self.atoms), ZERO)

    def cdf_density(self, x) -> Rational:
        """Density mass of ``[0, x)``."""
        b = self.breaks
        j = bisect_right(b, x) - 1
        j = min(j, len(self.heights) - 1)
        acc = ZERO
        for k in range(j):
            acc += self.heights[k] * (b[k + 1] - b[k])
        return acc + self.heights[j] * (x - b[j])

    def _cum(self):
        cum = [ZERO]
        b = self.breaks
        for j, h in enumerate(self.heights):
            cum.append(cum[-1] + h * (b[j + 1] - b[j]))
        return cum

    def mass(self, s: IntervalSet) -> Rational:
        """Exact mass of an interval set (atoms respect closedness)."""
        cum = self._cum()
        total = ZERO
        for iv in s:
            total += self._dens_between(cum, iv.lo, iv.hi)
            for p, m in self.atoms:
                if iv.contains(p):
                    total += m
        return total

    def _dens_between(self, cum, lo, hi) -> Rational:
        return self._dens_upto(cum, hi) - self._dens_upto(cum, lo)

    def _dens_upto(self, cum, x) -> Rational:
        b = self.breaks
        j = min(bisect_right(b, x) - 1, len(self.heights) - 1)
        return cum[j] + self.heights[j] * (x - b[j])

    def atom_masses(self, breaks: Sequence[Rational]) -> list[Rational]:
        """Masses of the half-open atoms ``[breaks[k], breaks[k+1])`` (last closed at 1)."""
        cum = self._cum()
        vals = [self._dens_upto(cum, x) for x in breaks]
        out = [vals[k + 1] - vals[k] for k in range(len(breaks) - 1)]
        last = len(out) - 1
        for p, m in self.atoms:
            k = min(bisect_right(breaks, p) - 1, last)
            out[k] += m
        return out

    def integrate(self, phi: PiecewiseAffine) -> Rational:
        """Exact ``\\int phi d(mu)`` for a piecewise-affine ``phi``."""
        pts = sorted(set(self.breaks) | set(phi.breaks))
        total = ZERO
        for a, b in zip(pts, pts[1:]):
            h = self.heights[min(bisect_right(self.breaks, a) - 1, len(self.heights) - 1)]
            if h == 0:
                continue
            j = phi.piece_index(a)
            s, t = phi.slopes[j], phi.intercepts[j]
            total += h * (s * (b * b - a * a) / 2 + t * (b - a))
        for p, m in self.atoms:
            total += m * phi(p)
        return total

    def __eq__(self, other):
        return (isinstance(other, PwConstMeasure) and self.breaks == other.breaks
                and self.heights == other.heights and self.atoms == other.atoms)

    def __hash__(self):
        return hash((self.breaks, self.heights, self.atoms))

    def __repr__(self):
        dens = ", ".join(f"[{a},{b}):{h}" for a, b, h in self.density_pieces())
        at = ", ".join(f"{p}:{m}" for p, m in self.atoms)
        return f"PwConstMeasure(density={{{dens}}}, atoms={{{at}}})"

    def to_json(self) -> dict:
        return {"breakpoints": [fmt(v) for v in self.breaks],
                "heights": [fmt(v) for v in self.heights],
                "atoms": [[fmt(p), fmt(m)] for p, m in self.atoms]}

    @classmethod
    def from_json(cls, d: Mapping) -> "PwConstMeasure":
        return cls(d["breakpoints"], d["heights"], [(p, m) for p, m in d.get("atoms", [])])


def pushforward(mu: PwConstMeasure, fmap: PiecewiseAffine) -> PwConstMeasure:
    """Exact image measure ``mu o fmap^{-1}``.

    Flat pieces turn their density mass into an atom at the piece's value.
    """
    events: dict[Rational, Rational] = {}
    atoms: dict[Rational, Rational] = {}
    pts = sorted(set(mu.breaks) | set(fmap.breaks))
    for a, b in zip(pts, pts[1:]):
        h = mu.heights[min(bisect_right(mu.breaks, a) - 1, len(mu.heights) - 1)]
        if h == 0:
            continue
        j = fmap.piece_index(a)
        s, t = fmap.slopes[j], fmap.intercepts[j]
        if s == 0:
            atoms[t] = atoms.get(t, ZERO) + h * (b - a)
            continue
        y0, y1 = s * a + t, s * b + t
        if y0 > y1:
            y0, y1 = y1, y0
        d = h / abs(s)
        events[y0] = events.get(y0, ZERO) + d
        events[y1] = events.get(y1, ZERO) - d
    for p, m in mu.atoms:
        y = fmap(p)
        atoms[y] = atoms.get(y, ZERO) + m
    breaks, heights = [ZERO], []
    level = ZERO
    for y in sorted(events):
        if y > breaks[-1]:
            heights.append(level)
            breaks.append(y)
        level += events[y]
    if breaks[-1] < ONE:
        heights.append(level)
        breaks.append(ONE)
    return PwConstMeasure(breaks, heights, atoms)


class MeasureSequence:
    """The pushforward sequence ``mu_n = f_0^n mu_0`` materialized on demand.

    Runs of a repeated map that leave the current measure invariant are
    skipped in one jump, so very large time indices are cheap when the
    schedule is eventually piecewise constant.
    """

    def __init__(self, initial: PwConstMeasure, system: NDSystem, name: str | None = None):
        self.initial = initial
        self.system = system
        self.name = name or "mu"
        # segment starts: mu_n = _values[k] for _starts[k] <= n < _starts[k+1]
        self._starts: list[int] = [0]
        self._values: list[PwConstMeasure] = [initial]
        self._frontier = 0  # largest n known
        self._lock = threading.Lock()

    def __getitem__(self, n: int) -> PwConstMeasure:
        if n < 0:
            raise UsageError("measure index must be >= 0")
        with self._lock:
            while self._frontier < n:
                self._advance(n)
            k = bisect_right(self._starts, n) - 1
            return self._values[k]

    def _advance(self, target: int):
        t = self._frontier
        mu = self._values[-1]
        fmap = self.system.map_at(t)
        nxt = pushforward(mu, fmap)
        if nxt == mu:
            nc = self.system.schedule.next_change(t)
            stop = target if nc is None else min(target, nc)
            self._frontier = max(stop, t + 1)
            return
        self._starts.append(t + 1)
        self._values.append(nxt)
        self._frontier = t + 1

    def change_points(self, horizon: int) -> list[tuple[int, PwConstMeasure]]:
        """``(start, mu)`` segments covering ``0 <= n < horizon``."""
        self[horizon - 1]
        with self._lock:
            return [(s, v) for s, v in zip(self._starts, self._values) if s < horizon]

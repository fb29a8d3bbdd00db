"""Finite interval partitions of [0, 1], refinements and dynamical pullbacks.

A partition is stored as consecutive half-open atoms ``[b_k, b_{k+1})`` each
carrying a cell label; a cell is the union of its atoms.  Equality is mod
finite point sets, which is all that matters for the entropies computed here.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import Callable, Iterator, Sequence

from .errors import DEFAULT_CELL_BUDGET, BudgetExceeded, UsageError
from .intervals import Interval, IntervalSet
from .rational import ONE, ZERO, Q, Rational, fmt
from .system import NDSystem


def _canonical(breaks, labels):
    """Merge equal neighbours and relabel cells by first appearance."""
    nb, nl = [breaks[0]], []
    relabel: dict = {}
    for k, lab in enumerate(labels):
        c = relabel.setdefault(lab, len(relabel))
        if nl and nl[-1] == c:
            nb[-1] = breaks[k + 1]
        else:
            nl.append(c)
            nb.append(breaks[k + 1])
    return tuple(nb), tuple(nl), len(relabel)


class Partition:
    """Partition of [0, 1] into finitely many interval-set cells."""

    __slots__ = ("breaks", "labels", "n_cells", "names")

    def __init__(self, breaks, labels, names: Sequence[str] | None = None):
        b = [Q(v) for v in breaks]
        if len(b) < 2 or b[0] != ZERO or b[-1] != ONE or len(labels) != len(b) - 1:
            raise UsageError("atoms must tile [0, 1]")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise UsageError("partition breakpoints must increase")
        order = {}
        for lab in labels:
            order.setdefault(lab, len(order))
        self.breaks, self.labels, self.n_cells = _canonical(b, labels)
        if names is not None:
            names = list(names)
            if len(names) != len(order):
                raise UsageError("one name per cell required")
            # names are given in first-appearance order of the raw labels
            self.names = tuple(names)
        else:
            self.names = None

    @classmethod
    def _raw(cls, breaks, labels, n_cells) -> "Partition":
        p = cls.__new__(cls)
        p.breaks, p.labels, p.n_cells, p.names = breaks, labels, n_cells, None
        return p

    @classmethod
    def trivial(cls) -> "Partition":
        return cls([0, 1], [0])

    @classmethod
    def uniform(cls, k: int) -> "Partition":
        """``k`` equal intervals."""
        return cls([Q(i) / k for i in range(k + 1)], list(range(k)))

    @classmethod
    def from_breaks(cls, inner_breaks, names=None) -> "Partition":
        pts = [ZERO] + sorted(Q(v) for v in inner_breaks) + [ONE]
        return cls(pts, list(range(len(pts) - 1)), names)

    @classmethod
    def from_cells(cls, cells: Sequence[IntervalSet], names=None) -> "Partition":
        """Build from interval sets that tile [0, 1] up to finitely many points."""
        pts = sorted({ZERO, ONE} | {p for c in cells for p in c.endpoints()})
        labels = []
        for a, b in zip(pts, pts[1:]):
            mid = (a + b) / 2
            owners = [i for i, c in enumerate(cells) if c.contains(mid)]
            if len(owners) != 1:
                raise UsageError(f"cells {'overlap' if owners else 'miss'} near {mid}")
            labels.append(owners[0])
        empty = [i for i, c in enumerate(cells) if c.measure == 0]
        if empty:
            raise UsageError(f"cells {empty} have zero length")
        if names is not None:
            first = []
            for lab in labels:
                if lab not in first:
                    first.append(lab)
            names = [names[i] for i in first]
        return cls(pts, labels, names)

    def __len__(self):
        return self.n_cells

    def atoms(self) -> Iterator[tuple[Rational, Rational, int]]:
        b = self.breaks
        for k, lab in enumerate(self.labels):
            yield b[k], b[k + 1], lab

    def label_at(self, x) -> int:
        k = min(bisect_right(self.breaks, Q(x)) - 1, len(self.labels) - 1)
        return self.labels[k]

    def cell(self, i: int) -> IntervalSet:
        last = len(self.labels) - 1
        return IntervalSet(Interval(a, b, True, k == last)
                           for k, (a, b, lab) in enumerate(self.atoms()) if lab == i)

    def cells(self) -> list[IntervalSet]:
        return [self.cell(i) for i in range(self.n_cells)]

    def lengths(self) -> list[Rational]:
        out = [ZERO] * self.n_cells
        for a, b, lab in self.atoms():
            out[lab] += b - a
        return out

    def masses(self, mu) -> list[Rational]:
        """Exact cell masses under a ``PwConstMeasure``."""
        out = [ZERO] * self.n_cells
        for m, lab in zip(mu.atom_masses(self.breaks), self.labels):
            out[lab] += m
        return out

    def __eq__(self, other):
        return (isinstance(other, Partition) and self.breaks == other.breaks
                and self.labels == other.labels)

    def __hash__(self):
        return hash((self.breaks, self.labels))

    def __repr__(self):
        return f"Partition({self.n_cells} cells, {len(self.labels)} atoms)"

    def to_json(self) -> dict:
        d = {"breakpoints": [fmt(v) for v in self.breaks], "labels": list(self.labels)}
        if self.names is not None:
            d["names"] = list(self.names)
        return d

    @classmethod
    def from_json(cls, d) -> "Partition":
        return cls(d["breakpoints"], d["labels"], d.get("names"))


def refine(P: Partition, Q_: Partition, budget: int = DEFAULT_CELL_BUDGET) -> Partition:
    """Common refinement: all nonempty intersections of a P-cell with a Q-cell."""
    pts = sorted(set(P.breaks) | set(Q_.breaks))
    if len(pts) - 1 > budget:
        raise BudgetExceeded("refinement atoms", len(pts) - 1, budget)
    labels = []
    for a, b in zip(pts, pts[1:]):
        labels.append((P.label_at(a), Q_.label_at(a)))
    b, lab, n = _canonical(pts, labels)
    return Partition._raw(b, lab, n)


def coarsen_check(P: Partition, Q_: Partition) -> bool:
    """True iff every cell of ``Q_`` is a union of cells of ``P`` (mod points)."""
    return refine(P, Q_).n_cells == P.n_cells


# ---------------------------------------------------------------------------
# itinerary engine


def itineraries(sys: NDSystem, i: int, parts: Sequence[Partition | None],
                budget: int = DEFAULT_CELL_BUDGET, on_step: Callable | None = None):
    """Atoms of ``V_{j<len(parts)} f_i^{-j} parts[j]`` (``None`` entries are trivial).

    Returns ``(breaks, codes)``: atom ``k`` is ``[breaks[k], breaks[k+1])`` and
    ``codes[k]`` encodes its itinerary.  ``on_step(j, breaks, codes)`` is called
    after the ``j``-th refinement.
    """
    los = [ZERO]
    slopes = [ONE]
    icpts = [ZERO]
    codes = [0]
    n = len(parts)
    for j, P in enumerate(parts):
        if j > 0:
            fmap = sys.map_at(i + j - 1)
            if not _is_identity(fmap):
                los, slopes, icpts, codes = _apply(los, slopes, icpts, codes, fmap, budget)
        if P is not None and P.n_cells > 1:
            los, slopes, icpts, codes = _refine(los, slopes, icpts, codes, P, budget,
                                                keep_maps=j < n - 1)
        if on_step is not None:
            on_step(j, los, codes)
    return los + [ONE], codes


def _is_identity(fmap) -> bool:
    return fmap.n_pieces == 1 and fmap.slopes[0] == 1 and fmap.intercepts[0] == 0


def _apply(los, slopes, icpts, codes, fmap, budget):
    B = fmap.breaks
    fs, ft = fmap.slopes, fmap.intercepts
    last = len(B) - 2
    nlo, ns, nt, nc = [], [], [], []
    his = los[1:] + [ONE]
    for lo, hi, s, t, c in zip(los, his, slopes, icpts, codes):
        if s == 0:
            k = min(bisect_right(B, t) - 1, last)
            nlo.append(lo); ns.append(ZERO); nt.append(fs[k] * t + ft[k]); nc.append(c)
            continue
        y0 = s * lo + t
        y1 = s * hi + t
        if s > 0:
            a = bisect_right(B, y0)
            b = bisect_left(B, y1)
            k = a - 1
            nlo.append(lo); ns.append(fs[k] * s); nt.append(fs[k] * t + ft[k]); nc.append(c)
            for idx in range(a, b):
                k = idx
                nlo.append((B[idx] - t) / s); ns.append(fs[k] * s); nt.append(fs[k] * t + ft[k]); nc.append(c)
        else:
            a = bisect_right(B, y1)
            b = bisect_left(B, y0)
            k = b - 1
            nlo.append(lo); ns.append(fs[k] * s); nt.append(fs[k] * t + ft[k]); nc.append(c)
            for idx in range(b - 1, a - 1, -1):
                k = idx - 1
                nlo.append((B[idx] - t) / s); ns.append(fs[k] * s); nt.append(fs[k] * t + ft[k]); nc.append(c)
        if len(nlo) > budget:
            raise BudgetExceeded("itinerary atoms", len(nlo), budget)
    return nlo, ns, nt, nc


def _refine(los, slopes, icpts, codes, P: Partition, budget, keep_maps=True):
    B = P.breaks
    L = P.labels
    K = P.n_cells
    last = len(B) - 2
    nlo, ns, nt, nc = [], [], [], []
    his = los[1:] + [ONE]
    for lo, hi, s, t, c in zip(los, his, slopes, icpts, codes):
        c = c * K
        if s == 0:
            k = min(bisect_right(B, t) - 1, last)
            nlo.append(lo); ns.append(s); nt.append(t); nc.append(c + L[k])
            continue
        y0 = s * lo + t
        y1 = s * hi + t
        if s > 0:
            a = bisect_right(B, y0)
            b = bisect_left(B, y1)
            k = a - 1
            nlo.append(lo); nc.append(c + L[k])
            for idx in range(a, b):
                nlo.append((B[idx] - t) / s); nc.append(c + L[idx])
            cnt = b - a + 1
        else:
            a = bisect_right(B, y1)
            b = bisect_left(B, y0)
            nlo.append(lo); nc.append(c + L[b - 1])
            for idx in range(b - 1, a - 1, -1):
                nlo.append((B[idx] - t) / s); nc.append(c + L[idx - 1])
            cnt = b - a + 1
        if keep_maps:
            ns.extend([s] * cnt); nt.extend([t] * cnt)
        if len(nlo) > budget:
            raise BudgetExceeded("itinerary atoms", len(nlo), budget)
    if not keep_maps:
        ns, nt = [ONE] * len(nlo), [ZERO] * len(nlo)
    return nlo, ns, nt, nc


def partition_from_itineraries(breaks, codes) -> Partition:
    b, lab, n = _canonical(breaks, codes)
    return Partition._raw(b, lab, n)


def code_masses(breaks, codes, mu=None) -> dict:
    """Exact mass per itinerary code (Lebesgue if ``mu`` is None)."""
    out: dict = {}
    if mu is None:
        for k, c in enumerate(codes):
            out[c] = out.get(c, ZERO) + (breaks[k + 1] - breaks[k])
        return out
    for m, c in zip(mu.atom_masses(breaks), codes):
        out[c] = out.get(c, ZERO) + m
    return out


def pullback_partition(sys: NDSystem, i: int, j: int, P: Partition,
                       budget: int = DEFAULT_CELL_BUDGET) -> Partition:
    """``f_i^{-j} P``; cells with empty preimage are dropped."""
    if j < 0:
        raise UsageError("j must be >= 0")
    if j == 0:
        return P
    return partition_from_itineraries(*itineraries(sys, i, [None] * j + [P], budget))


class PartitionSequence:
    """Time-indexed partitions ``n -> P_n`` with a cardinality bound."""

    def __init__(self, generator: Callable[[int], Partition], kind: str, bound: int,
                 name: str = "P", spec: dict | None = None):
        if kind not in ("constant", "periodic", "programmatic"):
            raise UsageError(f"unknown partition-sequence kind {kind!r}")
        self._gen = generator
        self.kind = kind
        self.bound = int(bound)
        self.name = name
        self.spec = spec
        self._cache: dict[int, Partition] = {}

    def __getitem__(self, n: int) -> Partition:
        p = self._cache.get(n)
        if p is None:
            p = self._gen(n)
            if p.n_cells > self.bound:
                raise UsageError(f"{self.name}[{n}] has {p.n_cells} cells > bound {self.bound}")
            if len(self._cache) < 4096:
                self._cache[n] = p
        return p

    def window(self, i: int, n: int) -> list[Partition]:
        return [self[i + j] for j in range(n)]

    @classmethod
    def constant(cls, P: Partition, name: str = "P") -> "PartitionSequence":
        return cls(lambda n: P, "constant", P.n_cells, name,
                   {"kind": "constant", "partition": P.to_json()})

    @classmethod
    def periodic(cls, parts: Sequence[Partition], name: str = "P") -> "PartitionSequence":
        parts = list(parts)
        return cls(lambda n: parts[n % len(parts)], "periodic", max(p.n_cells for p in parts), name,
                   {"kind": "periodic", "partitions": [p.to_json() for p in parts]})

    @classmethod
    def programmatic(cls, fn: Callable[[int], Partition], bound: int, name: str,
                     spec: dict | None = None) -> "PartitionSequence":
        return cls(fn, "programmatic", bound, name, spec)

    def to_json(self) -> dict:
        if self.spec is None:
            raise UsageError(f"partition sequence {self.name!r} is not serialisable")
        return dict(self.spec, name=self.name)

    @classmethod
    def from_json(cls, d) -> "PartitionSequence":
        kind = d["kind"]
        name = d.get("name", "P")
        if kind == "constant":
            return cls.constant(Partition.from_json(d["partition"]), name)
        if kind == "periodic":
            return cls.periodic([Partition.from_json(p) for p in d["partitions"]], name)
        if kind == "binary-digits":
            return binary_digit_sequence()
        raise UsageError(f"cannot load partition sequence kind {kind!r}")


def digit_partition(i: int) -> Partition:
    """Cells ``{x : (i+1)-th binary digit of x is 0}`` and its complement."""
    k = 2 ** (i + 1)
    return Partition([Q(j) / k for j in range(k + 1)], [j % 2 for j in range(k)])


def binary_digit_sequence() -> PartitionSequence:
    return PartitionSequence.programmatic(digit_partition, 2, "binary-digits", {"kind": "binary-digits"})


def joined_partition(sys: NDSystem, seq: PartitionSequence, i: int, n: int,
                     budget: int = DEFAULT_CELL_BUDGET) -> Partition:
    """``P_i^n = V_{j<n} f_i^{-j} P_{i+j}``."""
    if n < 1:
        raise UsageError("n must be >= 1")
    return partition_from_itineraries(*itineraries(sys, i, seq.window(i, n), budget))


def axiomC_power(sys: NDSystem, seq: PartitionSequence, m: int,
                 budget: int = DEFAULT_CELL_BUDGET) -> PartitionSequence:
    """``n -> V_{i<m} f_n^{-i} P_{n+i}``, cardinality bound ``N**m``."""
    if m < 1:
        raise UsageError("m must be >= 1")
    if m == 1:
        return seq
    return PartitionSequence.programmatic(lambda n: joined_partition(sys, seq, n, m, budget),
                                          seq.bound ** m, f"{seq.name}<{m}>")

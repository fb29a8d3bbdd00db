"""Topological entropy estimates: Bowen spanning/separated counts, open-cover
refinement counts, the Lipschitz upper bound and expanding circle formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
import numpy as np
from numba import njit

from .errors import DEFAULT_CELL_BUDGET, BudgetExceeded, UsageError
from .intervals import Interval, IntervalSet
from .maps import PwAffineMap, compose, preimage
from .measures import PwConstMeasure
from .rational import ONE, ZERO, Q, Rational, fmt, log2q
from .setcover import greedy_cover, min_set_cover
from .system import NDSystem, compose_window

TIE_TOL = 1e-9


# ---------------------------------------------------------------------------
# Spanning and separated sets on a rational grid


@dataclass
class SpanningReport:
    """Grid-based bounds on ``r(n, eps)``.

    ``lower`` is the size of a greedy ``2 eps``-separated set of grid points,
    which no Bowen ``(n, eps)``-ball can contain two of, so it bounds
    ``r(n, eps)`` from below.  ``upper`` is the size of a greedy spanning set
    whose balls of the shrunken radius ``eps_eff`` cover the grid; grid
    spacing and the Lipschitz constant turn that into a spanning set for the
    whole space.  ``upper`` is ``None`` when no positive ``eps_eff`` exists, and
    ``rigorous_upper`` is false when the maps are not continuous on the space.
    """

    n: int
    eps: Rational
    grid_step: Rational
    lower: int
    upper: int | None
    eps_eff: float
    coarse: bool
    rigorous_upper: bool
    system_id: str = "system"

    @property
    def lower_bits(self) -> float:
        return math.log2(self.lower) / self.n

    @property
    def upper_bits(self) -> float | None:
        return None if self.upper is None else math.log2(self.upper) / self.n


def _continuous_on_space(fmap: PwAffineMap, circle: bool) -> bool:
    if not circle:
        return fmap.is_continuous()
    vals = [(fmap.slopes[j - 1] * b + fmap.intercepts[j - 1], fmap.slopes[j] * b + fmap.intercepts[j])
            for j, b in enumerate(fmap.breaks[1:-1], start=1)]
    vals.append((fmap.slopes[-1] + fmap.intercepts[-1], fmap.intercepts[0]))
    return all((u - v) % 1 == 0 for u, v in vals)


@dataclass
class GridOrbits:
    """Exact orbit segments of the grid ``x_k = k h`` plus a float copy for fast comparison."""

    exact: list[list[Rational]]  # exact[i][k] = f_0^i(x_k)
    floats: np.ndarray  # shape (grid points, n)

    @property
    def n(self) -> int:
        return self.floats.shape[1]

    def exact_dn(self, sys: NDSystem, a: int, b: int) -> Rational:
        return max(sys.distance(row[a], row[b]) for row in self.exact)


def grid_orbits(sys: NDSystem, n: int, grid_step) -> GridOrbits:
    """Exact orbits ``f_0^i(x_k)``, ``i < n``, of the grid ``x_k = k h``."""
    h = Q(grid_step)
    if h <= 0 or (1 / h).denominator != 1:
        raise UsageError("grid step must be 1/G for a positive integer G")
    G = int(1 / h)
    xs = [h * k for k in range(G + 1)]
    out = np.empty((G + 1, n))
    rows = [xs]
    for i in range(n):
        out[:, i] = np.fromiter(map(float, rows[i]), float, G + 1)
        if i + 1 < n:
            rows.append(sys.map_at(i).apply_all(rows[i]))
    return GridOrbits(rows, out)


@njit(cache=True)
def _bowen(orb, a, b, circle, cap):
    """Bowen distance between rows ``a`` and ``b``, stopping early once it exceeds ``cap``."""
    d = 0.0
    for i in range(orb.shape[1]):
        t = abs(orb[a, i] - orb[b, i])
        if circle and 1.0 - t < t:
            t = 1.0 - t
        if t > d:
            d = t
            if d > cap:
                break
    return d


@njit(cache=True)
def _scan_chosen(orb, chosen, xs, m, k, thr, tol, circle, start):
    """Compare row ``k`` with the chosen rows near it in ``x``.

    Returns ``(status, row, position)``: status 0 means no chosen row is within
    ``thr``, 1 a certain conflict, 2 a near tie at ``row`` to be settled exactly
    (resume the scan at ``position + 1``).
    """
    x = orb[k, 0]
    lo = np.searchsorted(xs[:m], x - thr - tol)
    nwrap = 0
    if circle and x + thr + tol > 1.0:
        nwrap = min(np.searchsorted(xs[:m], x + thr + tol - 1.0, "right"), lo)
    total = nwrap + (m - lo)
    for s in range(start, total):
        pos = s if s < nwrap else lo + (s - nwrap)
        j = chosen[pos]
        d = _bowen(orb, j, k, circle, thr + tol)
        if d < thr - tol:
            return 1, j, s
        if d <= thr + tol:
            return 2, j, s
    return 0, -1, total


@njit(cache=True)
def _scan_window(orb, lo, hi, step, c, r, tol, circle, start):
    """Walk rows ``lo, lo + step, ...`` (stopping before ``hi``) looking for one within ``r`` of ``c``.

    Returns ``(status, row, position)`` with status 1 for a certain hit, 2 for a
    near tie and 0 when the walk ends.
    """
    s = start
    while True:
        q = lo + s * step
        if (step > 0 and q >= hi) or (step < 0 and q <= hi):
            return 0, -1, s
        d = _bowen(orb, q, c, circle, r + tol)
        if d < r - tol:
            return 1, q, s
        if d <= r + tol:
            return 2, q, s
        s += 1


def spanning_bounds(sys: NDSystem, n: int, eps, grid_step, *, orbits=None, upper: bool = True) -> SpanningReport:
    """Greedy separated (lower) and spanning (upper) counts for ``r(n, eps)`` on a grid.

    ``orbits`` may hold precomputed grid orbits of length ``>= n``.
    ``upper=False`` skips the spanning count (reported as None).
    """
    eps, h = Q(eps), Q(grid_step)
    if n < 1:
        raise UsageError("n must be >= 1")
    if eps <= 0:
        raise UsageError("eps must be positive")
    if h > eps:
        raise UsageError(f"grid step {h} is coarser than eps {eps}")
    circle = sys.space == "circle"
    go = grid_orbits(sys, n, h) if orbits is None else orbits
    if go.n < n or len(go.exact[0]) != int(1 / h) + 1:
        raise UsageError("precomputed orbits do not match n and grid step")
    if go.n > n:
        go = GridOrbits(go.exact[:n], np.ascontiguousarray(go.floats[:, :n]))
    orb = go.floats
    if circle:
        orb = orb[:-1]  # x = 1 is the same circle point as x = 0
    npts = orb.shape[0]

    # Lipschitz constant of x -> (f_0^i x)_{i<n} in the max metric
    lip, prod, rigorous = ONE, ONE, True
    for i in range(n - 1):
        f = sys.map_at(i)
        rigorous = rigorous and _continuous_on_space(f, circle)
        prod *= f.lipschitz
        lip = max(lip, prod)
    coarse = h > eps / (2 * lip)
    eps_eff_q = eps - lip * h / 2

    xf = orb[:, 0]

    # lower: greedy 2eps-separated subset (strict), scanned in x order
    sep = 2 * eps
    sepf = float(sep)
    chosen = np.empty(npts, dtype=np.int64)
    xs = np.empty(npts)
    m = 0
    for k in range(npts):
        pos, conflict = 0, False
        while True:
            status, j, pos = _scan_chosen(orb, chosen, xs, m, k, sepf, TIE_TOL, circle, pos)
            if status == 2 and go.exact_dn(sys, int(j), k) > sep:
                pos += 1
                continue
            conflict = status != 0
            break
        if not conflict:
            chosen[m], xs[m] = k, xf[k]
            m += 1
    lower = m

    # upper: sweep greedy cover of the grid by (n, eps_eff)-balls centred on grid points
    want_upper, upper = upper, None
    eps_eff = float(eps_eff_q)
    if want_upper and eps_eff_q > 0:

        def first_hit(lo, hi, step, c):
            pos = 0
            while True:
                status, q, pos = _scan_window(orb, lo, hi, step, c, eps_eff, TIE_TOL, circle, pos)
                if status == 2 and not go.exact_dn(sys, int(q), c) < eps_eff_q:
                    pos += 1
                    continue
                return q if status else -1

        def mark(lo, hi, c):
            q = lo
            while q < hi:
                q = first_hit(q, hi, 1, c)
                if q < 0:
                    break
                covered[q] = True
                q += 1

        reach = eps_eff + TIE_TOL
        covered = np.zeros(npts, dtype=bool)
        upper = 0
        p = 0
        while p < npts:
            # farthest forward grid point whose ball still contains p
            hi = int(np.searchsorted(xf, xf[p] + reach, "right"))
            c = first_hit(hi - 1, p, -1, p)
            c = p if c < 0 else c
            lo = int(np.searchsorted(xf, xf[c] - reach, "left"))
            hi = int(np.searchsorted(xf, xf[c] + reach, "right"))
            mark(lo, hi, c)
            if circle and xf[c] - reach < 0:
                mark(int(np.searchsorted(xf, 1 + xf[c] - reach, "left")), npts, c)
            if circle and xf[c] + reach > 1:
                mark(0, int(np.searchsorted(xf, xf[c] + reach - 1, "right")), c)
            covered[c] = True
            upper += 1
            while p < npts and covered[p]:
                p += 1
    return SpanningReport(n, eps, h, lower, upper, eps_eff, bool(coarse), rigorous, sys.name)


@dataclass
class SpanningTrace:
    eps: Rational
    ns: list[int]
    lower: list[int]
    upper: list[int | None]
    lower_bits: list[float] = field(init=False)
    upper_bits: list[float | None] = field(init=False)
    lower_growth: list[float | None] = field(init=False)
    upper_growth: list[float | None] = field(init=False)

    def __post_init__(self):
        self.lower_bits = [math.log2(c) / n for c, n in zip(self.lower, self.ns)]
        self.upper_bits = [None if c is None else math.log2(c) / n for c, n in zip(self.upper, self.ns)]
        self.lower_growth = [None] + [
            (math.log2(c1) - math.log2(c0)) / (n1 - n0)
            for c0, c1, n0, n1 in zip(self.lower, self.lower[1:], self.ns, self.ns[1:])]
        self.upper_growth = [None] + [
            None if c0 is None or c1 is None else (math.log2(c1) - math.log2(c0)) / (n1 - n0)
            for c0, c1, n0, n1 in zip(self.upper, self.upper[1:], self.ns, self.ns[1:])]


def entropy_from_spanning(reports: Sequence[SpanningReport]) -> dict[Rational, SpanningTrace]:
    """Group reports by ``eps`` into per-``eps`` traces.

    Besides the plain quotients ``log2(count)/n`` each trace carries growth
    increments ``(log2 c(n') - log2 c(n)) / (n' - n)``, which drop the
    ``log2(1/eps)/n`` offset that slows the plain quotient down.
    """
    if not reports:
        return {}
    if len({r.system_id for r in reports}) > 1:
        raise UsageError("reports come from different systems")
    by_eps: dict[Rational, list[SpanningReport]] = {}
    for r in reports:
        by_eps.setdefault(r.eps, []).append(r)
    out = {}
    for eps in sorted(by_eps, reverse=True):
        rs = sorted(by_eps[eps], key=lambda r: r.n)
        out[eps] = SpanningTrace(eps, [r.n for r in rs], [r.lower for r in rs], [r.upper for r in rs])
    return out


@dataclass
class SpanningPowerCheck:
    """Separated-count growth of ``sys^[m]`` against ``sys`` at matched horizons.

    Power horizon ``n`` sees base times ``0, m, ..., m(n-1)``, so it is matched
    with base horizon ``m(n-1)+1``.  Growth is the increment of ``log2`` counts
    from ``n`` to ``n+1`` (power) and from ``m(n-1)+1`` to ``mn+1`` (base, per base step).
    """

    m: int
    n: int
    power_counts: tuple[int, int]
    base_counts: tuple[int, int]
    power_growth: float
    base_growth: float

    @property
    def ratio(self) -> float:
        return self.power_growth / self.base_growth if self.base_growth > 0 else float("nan")


def spanning_power_rule(sys: NDSystem, m: int, n: int, eps, grid_step) -> SpanningPowerCheck:
    from .system import power_system

    if m < 1 or n < 1:
        raise UsageError("m and n must be >= 1")
    pw = power_system(sys, m)
    p0, p1 = (spanning_bounds(pw, k, eps, grid_step, upper=False).lower for k in (n, n + 1))
    b0, b1 = (spanning_bounds(sys, m * (k - 1) + 1, eps, grid_step, upper=False).lower for k in (n, n + 1))
    pg = math.log2(p1) - math.log2(p0)
    bg = (math.log2(b1) - math.log2(b0)) / m
    return SpanningPowerCheck(m, n, (p0, p1), (b0, b1), pg, bg)


# ---------------------------------------------------------------------------
# Open covers


def _as_open(iv) -> Interval:
    if isinstance(iv, Interval):
        return iv
    a, b = iv
    return Interval.open(Q(a), Q(b))


class CoverSequence:
    """Time-indexed open covers of [0, 1] by intervals (constant or periodic)."""

    def __init__(self, covers: Sequence[Sequence], kind: str = "periodic", name: str = "U"):
        if kind not in ("constant", "periodic"):
            raise UsageError("cover kind must be constant or periodic")
        self.covers = [tuple(_as_open(iv) for iv in c) for c in covers]
        if not self.covers or (kind == "constant" and len(self.covers) != 1):
            raise UsageError("constant cover sequences take exactly one cover")
        for c in self.covers:
            lebesgue_number(c)  # validates
        self.kind = kind
        self.name = name

    @classmethod
    def constant(cls, cover, name: str = "U") -> "CoverSequence":
        return cls([cover], "constant", name)

    def __getitem__(self, n: int) -> tuple[Interval, ...]:
        return self.covers[n % len(self.covers)]

    def to_json(self) -> dict:
        return {"kind": self.kind, "name": self.name,
                "covers": [[[fmt(iv.lo), fmt(iv.hi)] for iv in c] for c in self.covers]}


def lebesgue_number(cover: Iterable) -> Rational:
    """Largest ``delta`` such that every subinterval of [0, 1] of length below
    ``delta`` lies in one element of an open-interval cover (capped at 1).

    Sweeping left endpoints ``a``: the furthest reach of elements starting
    strictly left of ``a`` bounds the intervals that start at ``a``.
    """
    elems = [_as_open(iv) for iv in cover]
    if not elems:
        raise UsageError("empty cover")
    if IntervalSet(elems) & IntervalSet.unit() != IntervalSet.unit():
        raise UsageError("intervals do not cover [0, 1]")
    best = ONE
    cands = sorted({ZERO} | {iv.lo for iv in elems if ZERO < iv.lo <= ONE})
    for x in cands:
        reach = max((iv.hi for iv in elems if iv.lo < x or (iv.lo == x and iv.lo_closed)), default=None)
        if reach is None or reach <= x:
            raise UsageError(f"point {x} is not covered")
        if reach <= ONE:
            best = min(best, reach - x)
    return best


@dataclass
class CoverCount:
    n: int
    exact: int | None
    greedy: int
    elements: int
    upper_only: bool

    @property
    def value(self) -> int:
        return self.greedy if self.exact is None else self.exact

    @property
    def bits(self) -> float:
        return math.log2(self.value) / self.n


def refined_cover(sys: NDSystem, covers: CoverSequence, n: int, budget: int = DEFAULT_CELL_BUDGET,
                  i: int = 0) -> list[IntervalSet]:
    """Distinct nonempty elements ``U_{j_0} & f_0^{-1} U_{j_1} & ... & f_0^{-(n-1)} U_{j_{n-1}}``."""
    if n < 1:
        raise UsageError("n must be >= 1")
    unit = IntervalSet.unit()
    cur = list(dict.fromkeys(IntervalSet([iv]) & unit for iv in covers[i + n - 1]))
    for k in range(i + n - 2, i - 1, -1):
        f = sys.map_at(k)
        pre = [preimage(f, V) for V in cur]
        base = [IntervalSet([iv]) & unit for iv in covers[k]]
        nxt: dict[IntervalSet, None] = {}
        for U in base:
            for W in pre:
                X = U & W
                if X:
                    nxt[X] = None
            if len(nxt) > budget:
                raise BudgetExceeded("refined cover elements", len(nxt), budget)
        cur = list(nxt)
    if not cur:
        raise RuntimeError("refined cover is empty")
    return cur


def _atom_masks(elements: list[IntervalSet]) -> tuple[int, list[int]]:
    pts = sorted({p for e in elements for iv in e for p in (iv.lo, iv.hi)} | {ZERO, ONE})
    index = {p: k for k, p in enumerate(pts)}
    masks = []
    for e in elements:
        m = 0
        for iv in e:
            kl, kh = index[iv.lo], index[iv.hi]
            if kh > kl:
                m |= ((1 << (2 * kh - 1 - 2 * kl)) - 1) << (2 * kl + 1)
            if iv.lo_closed:
                m |= 1 << (2 * kl)
            if iv.hi_closed:
                m |= 1 << (2 * kh)
        masks.append(m)
    universe = (1 << (2 * len(pts) - 1)) - 1
    return universe, masks


def cover_refinement_count(sys: NDSystem, covers: CoverSequence, n: int, element_budget: int = 10_000,
                           node_limit: int = 2_000_000, budget: int = DEFAULT_CELL_BUDGET) -> CoverCount:
    """Minimal subcover cardinality ``N(U_0^n)``.

    Solved exactly by branch and bound when the refined cover has at most
    ``element_budget`` elements; otherwise only the greedy value is returned
    and ``upper_only`` is set.
    """
    elems = refined_cover(sys, covers, n, budget)
    universe, masks = _atom_masks(elems)
    if len(elems) > element_budget:
        g = len(greedy_cover(universe, masks))
        return CoverCount(n, None, g, len(elems), True)
    res = min_set_cover(universe, masks, node_limit)
    return CoverCount(n, res.size if res.exact else None, res.greedy_size, len(elems), not res.exact)


# ---------------------------------------------------------------------------
# Lipschitz bound


def lipschitz_upper_bound(L: Sequence, dim=1) -> list[float]:
    """``dim * (1/n) * sum_{i<n} max(0, log2 L_i)`` for ``n = 1..len(L)``.

    Equal constants are grouped so each partial sum is a short exact-weight ``fsum``.
    """
    dim = Q(dim)
    if dim < 0:
        raise UsageError("dim must be >= 0")
    counts: dict[Rational, int] = {}
    logs: dict[Rational, float] = {}
    out = []
    for n, l in enumerate(L, start=1):
        l = Q(l)
        if l <= 0:
            raise UsageError("Lipschitz constants must be positive")
        if l > 1:
            counts[l] = counts.get(l, 0) + 1
            if l not in logs:
                logs[l] = log2q(l)
        total = math.fsum(c * logs[v] for v, c in counts.items())
        out.append(float(dim) * total / n)
    return out


def lipschitz_bound_at(sys: NDSystem, n: int, dim=1) -> float:
    """The same quantity at a single, possibly astronomically large, ``n``.

    Constant runs of the schedule are summed in one step each.
    """
    if n < 1:
        raise UsageError("n must be >= 1")
    counts: dict[Rational, int] = {}
    for start, stop, name in sys.runs(0, n):
        L = sys.map_named(name).lipschitz
        if L > 1:
            counts[L] = counts.get(L, 0) + (stop - start)
    total = math.fsum(float(Fraction(c, n)) * log2q(L) for L, c in counts.items())
    return float(Q(dim)) * total


# ---------------------------------------------------------------------------
# Expanding circle maps


def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    n = gmpy2.mpz(n)
    p = gmpy2.mpz(2)
    while p * p <= n and p < 100_000:
        while n % p == 0:
            out[int(p)] = out.get(int(p), 0) + 1
            n //= p
        p = gmpy2.next_prime(p)
    if n > 1:
        out[int(n)] = out.get(int(n), 0) + 1
    return out


@dataclass(frozen=True)
class Log2Linear:
    """Exact value ``sum_b c_b * log2(b)`` with rational ``c_b`` over prime-ish bases ``b``."""

    terms: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def _make(cls, acc: dict[int, Fraction]) -> "Log2Linear":
        return cls(tuple(sorted((b, c) for b, c in acc.items() if c != 0)))

    @classmethod
    def of_rational(cls, q, coeff=1) -> "Log2Linear":
        """``coeff * log2(q)`` for positive rational ``q``."""
        q = Q(q)
        if q <= 0:
            raise UsageError("log of a non-positive value")
        c = Fraction(coeff)
        acc: dict[int, Fraction] = {}
        for p, e in _factor(int(q.numerator)).items():
            acc[p] = acc.get(p, Fraction(0)) + c * e
        for p, e in _factor(int(q.denominator)).items():
            acc[p] = acc.get(p, Fraction(0)) - c * e
        return cls._make(acc)

    def __add__(self, other: "Log2Linear") -> "Log2Linear":
        acc = dict(self.terms)
        for b, c in other.terms:
            acc[b] = acc.get(b, Fraction(0)) + c
        return Log2Linear._make(acc)

    def scale(self, c) -> "Log2Linear":
        c = Fraction(c)
        return Log2Linear._make({b: v * c for b, v in self.terms})

    def __float__(self) -> float:
        return math.fsum(float(c) if b == 2 else float(c) * math.log2(b) for b, c in self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*log2({b})" for b, c in self.terms)


@dataclass
class CircleEntropy:
    n: int
    topological: Log2Linear
    measure: Log2Linear


def expanding_circle_entropies(sys: NDSystem, mu0: PwConstMeasure | None, n: int,
                               budget: int = DEFAULT_CELL_BUDGET) -> list[CircleEntropy]:
    """Exact ``(1/k) log2 int |(f_0^k)'| dx`` and ``(1/k) int log2 |(f_0^k)'| dmu_0`` for ``k = 1..n``."""
    if sys.space != "circle":
        raise UsageError("expanding-circle formulas need a circle system")
    mu0 = PwConstMeasure.lebesgue() if mu0 is None else mu0
    out = []
    comp = None
    slope_product = ONE
    uniform = True
    meas_acc = Log2Linear()
    for k in range(1, n + 1):
        f = sys.map_at(k - 1)
        if any(abs(s) <= 1 for s in f.slopes) or not _continuous_on_space(f, True):
            raise UsageError(f"map at time {k - 1} is not an expanding circle map")
        if uniform and len({abs(s) for s in f.slopes}) == 1:
            # constant |slope|: the composite derivative is the plain product
            s = abs(f.slopes[0])
            slope_product *= s
            meas_acc = meas_acc + Log2Linear.of_rational(s)
            out.append(CircleEntropy(k, Log2Linear.of_rational(slope_product, Fraction(1, k)),
                                     meas_acc.scale(Fraction(1, k))))
            continue
        if uniform:
            uniform = False
            comp = compose_window(sys, 0, k - 1) if k > 1 else None
        comp = f if comp is None else compose(f, comp, budget)
        deriv = sum(((hi - lo) * abs(s) for lo, hi, s, _ in comp.pieces()), ZERO)
        top = Log2Linear.of_rational(deriv, Fraction(1, k))
        weights: dict[Rational, Rational] = {}
        for j, (lo, hi, s, _) in enumerate(comp.pieces()):
            w = mu0.mass(IntervalSet([Interval(lo, hi, True, j == comp.n_pieces - 1)]))
            if w:
                weights[abs(s)] = weights.get(abs(s), ZERO) + w
        meas = Log2Linear()
        for s, w in weights.items():
            meas = meas + Log2Linear.of_rational(s, Fraction(int(w.numerator), int(w.denominator) * k))
        out.append(CircleEntropy(k, top, meas))
    return out

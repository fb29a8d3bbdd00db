"""Named systems with default measures, partitions and documented expected values."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BudgetExceeded, UsageError
from .intervals import IntervalSet
from .maps import PiecewiseAffine, PwAffineMap, preimage
from .measures import MeasureSequence, PwConstMeasure
from .partitions import Partition, PartitionSequence, binary_digit_sequence
from .rational import ONE, ZERO, Q, Rational
from .system import MAX_RUN_STEPS, IndexSetSchedule, NDSystem, PeriodicSchedule, constant_system
from .topological import CoverSequence

LOG2_3 = math.log2(3)


@dataclass(frozen=True)
class Expected:
    """A documented reference value; ``source`` says where it comes from."""

    value: float
    tol: float
    source: str  # "closed-form", "derived" or "trivial"
    note: str = ""

    def to_json(self) -> dict:
        return {"value": self.value, "tol": self.tol, "source": self.source, "note": self.note}


@dataclass
class CatalogEntry:
    id: str
    system: NDSystem
    mu0: PwConstMeasure
    partitions: PartitionSequence
    expected: dict[str, Expected] = field(default_factory=dict)
    cover: CoverSequence | None = None
    extra_partitions: dict[str, PartitionSequence] = field(default_factory=dict)
    notes: str = ""

    def measures(self) -> MeasureSequence:
        return MeasureSequence(self.mu0, self.system, f"{self.id}:mu")

    def to_json(self) -> dict:
        d = {"id": self.id, "system": self.system.to_json(), "mu0": self.mu0.to_json(),
             "expected": {k: v.to_json() for k, v in sorted(self.expected.items())},
             "notes": self.notes}
        if self.partitions.spec is not None:
            d["partitions"] = self.partitions.to_json()
        if self.cover is not None:
            d["cover"] = self.cover.to_json()
        return d


def near_halves_cover(delta="1/100") -> CoverSequence:
    d = Q(delta)
    return CoverSequence.constant([(-d, Q("1/2") + d), (Q("1/2") - d, 1 + d)], "near-halves")


# ---------------------------------------------------------------------------
# the transiently chaotic example


BO_J = (Q("1/3"), Q("2/3"))


def bo_maps() -> tuple[PwAffineMap, PwAffineMap]:
    """``(f, g)``: ``f`` halves ``[0, 2/3)`` and sends ``[2/3, 1]`` onto ``[1/3, 1]``;
    ``g`` is the identity off ``J = [1/3, 2/3]`` and a full three-branch map of slope
    ``+-3`` on ``J``.  Both are continuous and fix 1."""
    f = PwAffineMap([0, "2/3", 1], ["1/2", 2], [0, -1])
    g = PwAffineMap([0, "1/3", "4/9", "5/9", "2/3", 1], [1, 3, -3, 3, 1], [0, "-2/3", 2, "-4/3", 0])
    return f, g


def bo_system() -> NDSystem:
    f, g = bo_maps()
    return NDSystem({"f": f, "g": g}, IndexSetSchedule("f", "g", sequence="two_pow_n_squared"), name="bo")


def bo_lower_bound(n: int = 16) -> float:
    """The counting lower bound ``(13 log2 3 + 2 + log2 3) / 16`` at ``n = 16``."""
    if n != 16:
        raise UsageError("the closed-form lower bound is stated for n = 16 only")
    return (13 * LOG2_3 + 2 + LOG2_3) / 16


def bo_lipschitz_value(n: int = 512) -> float:
    """``(1/n) sum max(0, log2 L_i)`` for the schedule: f (L = 2) at the hit indices, g (L = 3) elsewhere."""
    sched = bo_system().schedule
    hits = len(sched.hits_below(n))
    return math.fsum([(n - hits) * LOG2_3, float(hits)]) / n


def make_bo_system(k: int = 1) -> CatalogEntry:
    """The example with Lebesgue measure and constant ``1/(3k)``-interval partitions."""
    if k not in (1, 2, 3):
        raise UsageError("k must be 1, 2 or 3")
    sys = bo_system()
    parts = {f"k={j}": PartitionSequence.constant(Partition.uniform(3 * j), f"uniform{3 * j}")
             for j in (1, 2, 3)}
    exp = {
        "h": Expected(LOG2_3, 1e-9, "closed-form", "entropy of the system; Lebesgue is a maximal-entropy IMS"),
        "meas_lower_16": Expected(bo_lower_bound(16), 1e-9, "derived",
                                  "claimed lower bound on H(P_0^16)/16"),
        "lipschitz_512": Expected(bo_lipschitz_value(512), 1e-9, "derived",
                                  "(509 log2 3 + 3)/512: f at 1, 2, 16 below 512"),
        "f_indices_below_600": Expected(4, 0, "closed-form", "1, 2, 16, 512"),
    }
    return CatalogEntry("bo", sys, PwConstMeasure.lebesgue(), parts[f"k={k}"], exp,
                        cover=near_halves_cover(), extra_partitions=parts,
                        notes="values off the constrained regions are specific to this realization")


# ---------------------------------------------------------------------------
# autonomous and simple baselines


def tent_map() -> PwAffineMap:
    return PwAffineMap([0, "1/2", 1], [2, -2], [0, 2])


def make_baselines() -> list[CatalogEntry]:
    leb = PwConstMeasure.lebesgue()
    halves = PartitionSequence.constant(Partition.uniform(2), "halves")
    cover = near_halves_cover()
    out = []

    ident = constant_system(PwAffineMap.identity(), "id")
    ident.name = "identity"
    out.append(CatalogEntry("identity", ident, leb, halves,
                            {"h_top": Expected(0.0, 0.05, "trivial")}, cover))

    dbl = constant_system(PwAffineMap.linear_mod1(2), "d", "circle")
    dbl.name = "doubling"
    out.append(CatalogEntry("doubling", dbl, leb, halves,
                            {"h_top": Expected(1.0, 0.1, "derived", "cover-count growth"),
                             "h_mu": Expected(1.0, 1e-9, "closed-form", "halves generate")}, cover))

    tent = constant_system(tent_map(), "t")
    tent.name = "tent"
    out.append(CatalogEntry("tent", tent, leb, halves,
                            {"h_top": Expected(1.0, 0.1, "derived"),
                             "h_mu": Expected(1.0, 1e-9, "closed-form")}, cover))

    rot = constant_system(PwAffineMap.linear_mod1(1, "8/13"), "r", "circle")
    rot.name = "rotation"
    out.append(CatalogEntry("rotation", rot, leb, halves,
                            {"h_top": Expected(0.0, 0.05, "trivial", "isometry")}, cover))

    demo = constant_system(PwAffineMap.identity(), "id")
    demo.name = "emax-demo"
    out.append(CatalogEntry("emax-demo", demo, leb, binary_digit_sequence(),
                            {"meas_trace": Expected(1.0, 0.0, "derived", "one new fair digit per step"),
                             "h_top": Expected(0.0, 0.05, "trivial")}, cover))

    alt = NDSystem({"a": PwAffineMap.linear_mod1(2), "b": PwAffineMap.linear_mod1(4)},
                   PeriodicSchedule(["a", "b"]), "circle", name="alternating-2-4")
    out.append(CatalogEntry("alternating-2-4", alt, leb, halves,
                            {"h_top": Expected(1.5, 0.0, "derived", "slope product 8^(n/2)"),
                             "h_mu": Expected(1.5, 0.0, "derived")}, cover))

    tri = constant_system(PwAffineMap.linear_mod1(3), "t3", "circle")
    tri.name = "tripling"
    out.append(CatalogEntry("tripling", tri, leb, PartitionSequence.constant(Partition.uniform(3), "thirds"),
                            {"h_top": Expected(LOG2_3, 0.0, "trivial"),
                             "h_mu": Expected(LOG2_3, 0.0, "trivial")}, cover))
    return out


def get_entry(name: str, k: int = 1) -> CatalogEntry:
    if name == "bo":
        return make_bo_system(k)
    for e in make_baselines():
        if e.id == name:
            return e
    raise UsageError(f"unknown catalog entry {name!r}")


def catalog_ids() -> list[str]:
    return ["bo"] + [e.id for e in make_baselines()]


# ---------------------------------------------------------------------------
# diagnostics


def window_preimage(sys: NDSystem, i: int, n: int, target: IntervalSet) -> IntervalSet:
    """``(f_i^n)^{-1}(target)`` by pulling back one map at a time."""
    s = target
    for j in range(i + n - 1, i - 1, -1):
        s = preimage(sys.map_at(j), s)
    return s


def smoothed_indicator(a, b, ramp) -> PiecewiseAffine:
    """Piecewise-affine hat: 1 on ``[a, b]``, linear to 0 over ``ramp`` on each side (clipped to [0, 1])."""
    a, b, r = Q(a), Q(b), Q(ramp)
    pts = [(a - r, ZERO), (a, ONE), (b, ONE), (b + r, ZERO)]
    knots = sorted({ZERO, ONE} | {p for p, _ in pts if ZERO < p < ONE})

    def val(x):
        if x <= a - r or x >= b + r:
            return ZERO
        if a <= x <= b:
            return ONE
        return (x - (a - r)) / r if x < a else ((b + r) - x) / r

    slopes, icpts = [], []
    for lo, hi in zip(knots, knots[1:]):
        y0, y1 = val(lo), val(hi)
        s = (y1 - y0) / (hi - lo)
        slopes.append(s)
        icpts.append(y0 - s * lo)
    return PiecewiseAffine(knots, slopes, icpts)


@dataclass
class WeakStarReport:
    """Exact ``int phi d mu_n`` on the segments where ``mu_n`` changes."""

    starts: list[int]
    values: dict[str, list[Rational]]
    horizon: int

    def at(self, name: str, n: int) -> Rational:
        k = max(j for j, s in enumerate(self.starts) if s <= n)
        return self.values[name][k]


def weak_star_diagnostic(mus: MeasureSequence, tests: dict[str, PiecewiseAffine], horizon: int) -> WeakStarReport:
    """Integrals of piecewise-affine test functions against ``mu_n`` for ``n < horizon``.

    ``mu_n`` is constant between change points, so one value per segment is reported.
    """
    segs = mus.change_points(horizon)
    vals = {name: [mu.integrate(phi) for _, mu in segs] for name, phi in tests.items()}
    return WeakStarReport([s for s, _ in segs], vals, horizon)


def settling_index(mus: MeasureSequence, target: IntervalSet, threshold, horizon: int) -> tuple[int | None, list]:
    """Smallest ``N`` with ``mu_n(target) >= threshold`` for all ``N <= n < horizon``.

    Returns ``(N, [(segment start, mass), ...])``; ``N`` is None if the last
    segment is still below the threshold.
    """
    threshold = Q(threshold)
    segs = [(s, mu.mass(target)) for s, mu in mus.change_points(horizon)]
    N = None
    for s, m in reversed(segs):
        if m >= threshold:
            N = s
        else:
            break
    return N, segs


def orbit_settling_time(sys: NDSystem, x, target: IntervalSet, horizon: int) -> int | None:
    """Smallest ``T <= horizon`` with ``f_0^t(x)`` in ``target`` for all ``T <= t <= horizon``.

    Long runs of one map are skipped once the rational orbit becomes periodic.
    """
    x = Q(x)
    last_out = -1 if x in target else 0
    for start, stop, name in sys.runs(0, horizon):
        fmap = sys.map_named(name)
        seen = {x: start}
        path = [x]
        cur = x
        tt = start
        while tt < stop:
            cur = fmap(cur)
            tt += 1
            if cur not in target:
                last_out = tt
            if cur in seen:
                c0 = seen[cur]
                cycle = path[c0 - start:]
                period = len(cycle)
                rem = stop - tt
                # state at time tt + r is cycle[r % period]
                outs = [r for r in range(period) if cycle[r] not in target]
                if outs and rem > 0:
                    best = max(tt + r + ((rem - r) // period) * period for r in outs if r <= rem)
                    last_out = max(last_out, best)
                cur = cycle[rem % period]
                tt = stop
                break
            seen[cur] = tt
            path.append(cur)
            if len(path) > MAX_RUN_STEPS:
                raise BudgetExceeded("orbit steps without a cycle", len(path), MAX_RUN_STEPS)
        x = cur
    return None if last_out >= horizon else last_out + 1

"""Measure-theoretic entropy of partition sequences along an invariant measure sequence."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DEFAULT_CELL_BUDGET, UsageError
from .information import entropy_of_masses
from .intervals import Interval, IntervalSet
from .maps import PwAffineMap
from .measures import MeasureSequence, PwConstMeasure
from .partitions import (Partition, PartitionSequence, binary_digit_sequence, code_masses,
                         itineraries, joined_partition, partition_from_itineraries)
from .rational import ONE, ZERO, Q, Rational, fmt
from .system import NDSystem, constant_system


@dataclass
class EntropyTrace:
    """``H_{mu_0}(P_0^n) / n`` at an increasing list of horizons.

    The running maximum stands in for the limsup, which is not finitely computable.
    """

    horizons: list[int]
    entropies: list[float]
    cells: list[int]
    atoms: list[int]
    system_id: str = "system"
    partition_id: str = "P"
    measure_id: str = "mu"
    values: list[float] = field(init=False)
    running_max: list[float] = field(init=False)

    def __post_init__(self):
        self.values = [h / n for h, n in zip(self.entropies, self.horizons)]
        best, self.running_max = float("-inf"), []
        for v in self.values:
            best = max(best, v)
            self.running_max.append(best)

    @property
    def sup(self) -> float:
        return self.running_max[-1]

    def rows(self):
        for n, v, c, a in zip(self.horizons, self.values, self.cells, self.atoms):
            yield {"n": n, "value_bits": f"{v:.12g}", "cells": c, "budget_used": a}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["n", "value_bits", "cells", "budget_used"], lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows())
        return buf.getvalue()


def partition_entropy_trace(sys: NDSystem, mu0: PwConstMeasure | None, seq: PartitionSequence,
                            horizons: Sequence[int], budget: int = DEFAULT_CELL_BUDGET,
                            measure_id: str = "mu") -> EntropyTrace:
    """Exact-mass entropies of the joined partitions ``P_0^n`` for each ``n`` in ``horizons``.

    ``mu0=None`` means Lebesgue measure (faster path).
    """
    horizons = list(horizons)
    if not horizons or any(h < 1 for h in horizons) or horizons != sorted(set(horizons)):
        raise UsageError("horizons must be a nonempty increasing list of positive ints")
    if mu0 is not None and mu0 == PwConstMeasure.lebesgue():
        mu0 = None
    wanted = set(horizons)
    ent, cells, atoms = {}, {}, {}

    def snapshot(j, los, codes):
        n = j + 1
        if n in wanted:
            cm = code_masses(los + [ONE], codes, mu0)
            ent[n] = entropy_of_masses(cm.values())
            cells[n] = sum(1 for m in cm.values() if m != 0)
            atoms[n] = len(codes)

    itineraries(sys, 0, seq.window(0, horizons[-1]), budget, on_step=snapshot)
    return EntropyTrace(horizons, [ent[n] for n in horizons], [cells[n] for n in horizons],
                        [atoms[n] for n in horizons], sys.name, seq.name, measure_id)


def class_entropy_sup(traces: Sequence[EntropyTrace]) -> float:
    """Entropy of the admissible class generated by a finite family of sequences."""
    if not traces:
        raise UsageError("need at least one trace")
    keys = {(t.system_id, t.measure_id) for t in traces}
    if len(keys) > 1:
        raise UsageError(f"traces come from different systems/measures: {sorted(keys)}")
    return max(t.sup for t in traces)


# ---------------------------------------------------------------------------
# Misiurewicz-class certificates


@dataclass
class MisiurewiczCertificate:
    eps: Rational
    horizon: int
    delta_floor: Rational
    margins: list[list[Rational | None]]
    gaps: list[Rational | None]
    verdict: str
    failure: tuple[int, tuple[int, int]] | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def delta(self) -> Rational | None:
        """Uniform separation over the checked horizon (None: no two cores ever present)."""
        finite = [g for g in self.gaps if g is not None]
        return min(finite) if finite else None

    def to_json(self) -> dict:
        return {
            "eps": fmt(self.eps), "horizon": self.horizon, "delta_floor": fmt(self.delta_floor),
            "verdict": self.verdict,
            "delta": None if self.delta is None else fmt(self.delta),
            "failure": None if self.failure is None else {"n": self.failure[0], "cells": list(self.failure[1])},
            "gaps": [None if g is None else fmt(g) for g in self.gaps],
            "margins": [[None if r is None else fmt(r) for r in row] for row in self.margins],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def _components(P: Partition) -> list[list[tuple[Rational, Rational]]]:
    comps: list[list] = [[] for _ in range(P.n_cells)]
    for a, b, lab in P.atoms():
        comps[lab].append((a, b))
    return comps


def _core_mass(mu: PwConstMeasure, cum, comps, r) -> Rational:
    total = ZERO
    for a, b in comps:
        lo, hi = a + r, b - r
        if lo > hi:
            continue
        total += mu._dens_between(cum, lo, hi)
        for p, m in mu.atoms:
            if lo <= p <= hi:
                total += m
    return total


def core_margin(mu: PwConstMeasure, comps, eps: Rational, cum=None) -> Rational | None:
    """Largest symmetric shrink ``r > 0`` of every component with mass loss ``<= eps``.

    ``None`` means the whole cell may be discarded (its mass is at most ``eps``);
    ``0`` means no positive margin exists.
    """
    cum = mu._cum() if cum is None else cum
    cell_mass = sum((mu._dens_between(cum, a, b) for a, b in comps), ZERO)
    cell_mass += sum((m for p, m in mu.atoms for a, b in comps if a <= p < b or (p == b == ONE)), ZERO)
    if cell_mass <= eps:
        return None

    def loss(r):
        return cell_mass - _core_mass(mu, cum, comps, r)

    cand = {ZERO}
    pts = list(mu.breaks) + [p for p, _ in mu.atoms]
    for a, b in comps:
        cand.add((b - a) / 2)
        for p in pts:
            if a < p < b:
                cand.add(p - a)
                cand.add(b - p)
    rmax = max((b - a) / 2 for a, b in comps)
    cand = sorted(c for c in cand if c <= rmax)
    k = 0
    for idx, c in enumerate(cand):
        if loss(c) <= eps:
            k = idx
        else:
            break
    if k == len(cand) - 1:
        return cand[k]
    c0, c1 = cand[k], cand[k + 1]
    x1, x2 = c0 + (c1 - c0) / 3, c0 + 2 * (c1 - c0) / 3
    l1, l2 = loss(x1), loss(x2)
    beta = (l2 - l1) / (x2 - x1)
    alpha = l1 - beta * x1
    if alpha + beta * c0 > eps:
        return c0
    if beta == 0:
        return (c0 + c1) / 2
    r = (eps - alpha) / beta
    if r >= c1:
        return (c0 + c1) / 2
    return r


def _cores(comps_by_cell, margins):
    cores = []
    for i, (comps, r) in enumerate(zip(comps_by_cell, margins)):
        if r is None:
            continue
        for a, b in comps:
            if b - a >= 2 * r:
                cores.append((a + r, b - r, i))
    cores.sort()
    return cores


def _min_gap(cores, circle: bool):
    best, pair = None, None
    for (_, b0, i), (a1, _, j) in zip(cores, cores[1:]):
        if i != j and (best is None or a1 - b0 < best):
            best, pair = a1 - b0, (i, j)
    if circle and len(cores) > 1:
        (_, b0, i), (a1, _, j) = cores[-1], cores[0]
        if i != j:
            g = ONE - b0 + a1
            if best is None or g < best:
                best, pair = g, (i, j)
    return best, pair


def misiurewicz_certificate(mus: MeasureSequence, seq: PartitionSequence, eps, horizon: int,
                            delta_floor=None, stop_at_failure: bool = True) -> MisiurewiczCertificate:
    """Constructive check of conditions (a) and (b) for ``n < horizon``.

    Cores shrink every component of a cell by the largest common margin whose
    mass loss stays within ``eps``.  The verdict fails at the first ``n`` whose
    core separation drops below ``delta_floor`` (default ``eps/1024``), which is
    the finite-horizon stand-in for a separation bounded away from zero.
    With ``stop_at_failure`` the per-``n`` arrays end at the failing ``n``.
    """
    eps = Q(eps)
    if eps <= 0:
        raise UsageError("eps must be positive")
    floor = eps / 1024 if delta_floor is None else Q(delta_floor)
    circle = mus.system.space == "circle"
    memo: dict = {}
    margins, gaps = [], []
    verdict, failure = "pass", None
    for n in range(horizon):
        mu, P = mus[n], seq[n]
        key = (mu, P)
        res = memo.get(key)
        if res is None:
            comps = _components(P)
            cum = mu._cum()
            ms = [core_margin(mu, c, eps, cum) for c in comps]
            gap, pair = _min_gap(_cores(comps, ms), circle)
            res = (ms, gap, pair)
            if len(memo) < 1024:
                memo[key] = res
        ms, gap, pair = res
        margins.append(ms)
        gaps.append(gap)
        if verdict == "pass":
            zero = [i for i, r in enumerate(ms) if r == 0]
            if zero:
                verdict, failure = "fail", (n, (zero[0], zero[0]))
            elif gap is not None and gap < floor:
                verdict, failure = "fail", (n, pair)
            if verdict == "fail" and stop_at_failure:
                break
    return MisiurewiczCertificate(eps, horizon, floor, margins, gaps, verdict, failure)


def certificate_cores(cert: MisiurewiczCertificate, seq: PartitionSequence, n: int) -> list[IntervalSet]:
    """The compact cores ``K_{n,i}`` as closed-interval sets."""
    P = seq[n]
    out = []
    for comps, r in zip(_components(P), cert.margins[n]):
        if r is None:
            out.append(IntervalSet())
        else:
            out.append(IntervalSet(Interval.closed(a + r, b - r) for a, b in comps if b - a >= 2 * r))
    return out


# ---------------------------------------------------------------------------


def emax_blowup_demo(n_max: int = 20, budget: int = DEFAULT_CELL_BUDGET):
    """Identity map with binary-digit partitions: 1 bit per step despite zero topological entropy.

    Returns the measure trace for ``n = 1..n_max`` and the Lipschitz upper bound
    on topological entropy at ``n_max`` (which is 0 for the identity).
    """
    from .topological import lipschitz_upper_bound

    ident = constant_system(PwAffineMap.identity(), "id")
    ident.name = "identity"
    trace = partition_entropy_trace(ident, None, binary_digit_sequence(), range(1, n_max + 1),
                                    budget, measure_id="lebesgue")
    topo = lipschitz_upper_bound([ONE] * n_max, 1)[-1]
    return trace, topo


def power_partitions(sys: NDSystem, seq: PartitionSequence, m: int,
                     budget: int = DEFAULT_CELL_BUDGET) -> PartitionSequence:
    """Partitions for the ``m``-th power system: ``n -> V_{i<m} f_{nm}^{-i} P_{nm+i}``."""
    if m < 1:
        raise UsageError("m must be >= 1")
    if m == 1:
        return seq
    return PartitionSequence.programmatic(
        lambda n: joined_partition(sys, seq, n * m, m, budget), seq.bound ** m, f"{seq.name}<{m}>")


@dataclass
class PowerRuleCheck:
    m: int
    n: int
    base_bits: float  # H(P_0^{nm}) for the original system
    power_bits: float  # H of the n-step join for the power system
    identical: bool  # joined partitions agree exactly (mod zero)


def measure_power_rule(sys: NDSystem, seq: PartitionSequence, m: int, n: int,
                       mu0: PwConstMeasure | None = None, budget: int = DEFAULT_CELL_BUDGET) -> PowerRuleCheck:
    """Compare ``P_0^{nm}`` for ``sys`` with the ``n``-step join of the power partitions on ``sys^[m]``."""
    from .system import power_system

    base = partition_from_itineraries(*itineraries(sys, 0, seq.window(0, n * m), budget))
    pw_sys = power_system(sys, m)
    pw = partition_from_itineraries(*itineraries(pw_sys, 0, power_partitions(sys, seq, m, budget).window(0, n),
                                                 budget))
    mu = PwConstMeasure.lebesgue() if mu0 is None else mu0
    hb = entropy_of_masses(base.masses(mu))
    hp = entropy_of_masses(pw.masses(mu))
    return PowerRuleCheck(m, n, hb, hp, base == pw)

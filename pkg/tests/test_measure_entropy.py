"""Entropy traces of partition sequences, class suprema, certificates and power rules."""
from __future__ import annotations

import csv
import io
import itertools
import math
import random

import pytest

from ndsentropy import (MeasureSequence, Partition, PartitionSequence, PwConstMeasure, Q,
                        UsageError, class_entropy_sup, emax_blowup_demo,
                        joined_partition, measure_power_rule, misiurewicz_certificate,
                        partition_entropy_trace, shannon_entropy)
from ndsentropy.catalog import bo_system, get_entry, window_preimage
from ndsentropy.information import entropy_of_masses
from ndsentropy.intervals import IntervalSet
from ndsentropy.measure_entropy import certificate_cores
from ndsentropy.partitions import binary_digit_sequence

from conftest import SEEDS, rand_measure, rand_partition, rand_system

LEB = PwConstMeasure.lebesgue()
LOG2_3 = math.log2(3)
HALVES = PartitionSequence.constant(Partition.uniform(2), "halves")
THIRDS = PartitionSequence.constant(Partition.uniform(3), "thirds")


def doubling():
    return get_entry("doubling").system


def identity():
    return get_entry("identity").system


def join_by_preimages(sys, P: Partition, n: int) -> list[IntervalSet]:
    """Independent oracle for ``P_0^n``: intersect exact preimages of every cell."""
    cells = [IntervalSet.unit()]
    for j in range(n):
        pre = [window_preimage(sys, 0, j, c) for c in P.cells()]
        cells = [x for x in (a & b for a in cells for b in pre) if x.measure > 0]
    return cells


# --- traces ------------------------------------------------------------------


def test_doubling_halves_one_bit_every_n():
    t = partition_entropy_trace(doubling(), None, HALVES, range(1, 9))
    assert t.values == [1.0] * 8
    assert t.cells == [2 ** n for n in range(1, 9)]


def test_identity_thirds_decays():
    t = partition_entropy_trace(identity(), None, THIRDS, [1, 2, 5, 10])
    assert t.values == pytest.approx([LOG2_3 / n for n in (1, 2, 5, 10)], abs=1e-12)
    assert t.sup == pytest.approx(LOG2_3)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_bo_trace_matches_preimage_oracle(n):
    sys = bo_system()
    oracle = entropy_of_masses(c.measure for c in join_by_preimages(sys, Partition.uniform(3), n))
    t = partition_entropy_trace(sys, None, THIRDS, [n])
    assert t.entropies[0] == pytest.approx(oracle, abs=1e-12)


def test_trace_with_non_lebesgue_initial_measure():
    mu0 = PwConstMeasure([0, "1/4", 1], [2, "2/3"])
    t = partition_entropy_trace(doubling(), mu0, HALVES, [1, 3])
    oracle = [shannon_entropy(mu0, joined_partition(doubling(), HALVES, 0, n)) for n in (1, 3)]
    assert t.entropies == pytest.approx(oracle, abs=1e-12)


@pytest.mark.parametrize("seed", SEEDS[:30])
def test_trace_invariants_random(seed):
    rng = random.Random(seed)
    sys, mu0 = rand_system(rng), rand_measure(rng)
    parts = [rand_partition(rng) for _ in range(2)]
    seq = PartitionSequence.periodic(parts, "P")
    t = partition_entropy_trace(sys, mu0, seq, [1, 2, 3, 4])
    for n, h in zip(t.horizons, t.entropies):
        assert h >= 0
        assert h <= math.fsum(math.log2(seq[i].n_cells) for i in range(n)) + 1e-9


@pytest.mark.parametrize("seed", SEEDS[:30])
def test_coarsening_monotonicity(seed):
    rng = random.Random(seed)
    sys, mu0 = rand_system(rng), rand_measure(rng)
    P = rand_partition(rng, 5)
    merge = {lab: rng.randrange(2) for lab in range(P.n_cells)}
    Qp = Partition(P.breaks, [merge[lab] for lab in P.labels])
    tp = partition_entropy_trace(sys, mu0, PartitionSequence.constant(P), [1, 2, 3, 4])
    tq = partition_entropy_trace(sys, mu0, PartitionSequence.constant(Qp), [1, 2, 3, 4])
    assert all(hq <= hp + 1e-12 for hq, hp in zip(tq.entropies, tp.entropies))


def test_trace_csv_columns():
    t = partition_entropy_trace(doubling(), None, HALVES, [1, 2])
    rows = list(csv.DictReader(io.StringIO(t.to_csv())))
    assert list(rows[0]) == ["n", "value_bits", "cells", "budget_used"]
    assert rows[1]["value_bits"] == "1"


def test_trace_rejects_bad_horizons():
    with pytest.raises(UsageError):
        partition_entropy_trace(doubling(), None, HALVES, [3, 2])
    with pytest.raises(UsageError):
        partition_entropy_trace(doubling(), None, HALVES, [])


# --- class suprema -----------------------------------------------------------


def test_class_sup_single_trace():
    t = partition_entropy_trace(identity(), None, THIRDS, [1, 4])
    assert class_entropy_sup([t]) == t.sup


def test_class_sup_doubling_halves_thirds():
    hz = [12, 14, 16]
    th = partition_entropy_trace(doubling(), None, THIRDS, hz)
    # thirds pull back to 3 * 2^(n-1) equal atoms grouped into 2^(n-1) + ... cells: (n - 1 + log2 3)/n
    assert th.values == pytest.approx([(n - 1 + LOG2_3) / n for n in hz], abs=1e-12)
    sup = class_entropy_sup([partition_entropy_trace(doubling(), None, HALVES, hz), th])
    assert 1.0 <= sup <= 1.0 + (LOG2_3 - 1) / hz[0] + 1e-12


def test_class_sup_rejects_mixed_systems():
    a = partition_entropy_trace(doubling(), None, HALVES, [1])
    b = partition_entropy_trace(identity(), None, HALVES, [1])
    with pytest.raises(UsageError):
        class_entropy_sup([a, b])


# --- certificates ------------------------------------------------------------


def _verify_cores(cert, seq, mus, horizon):
    for n in range(horizon):
        cores = certificate_cores(cert, seq, n)
        P = seq[n]
        for i, (cell, core) in enumerate(zip(P.cells(), cores)):
            assert (core - cell).measure == 0 and all(cell.contains(iv.lo) for iv in core)
            assert mus[n].mass(cell) - mus[n].mass(core) <= cert.eps
        pts = [(iv.lo, iv.hi, i) for i, core in enumerate(cores) for iv in core]
        for (a0, a1, i), (b0, b1, j) in itertools.combinations(pts, 2):
            if i != j:
                gap = max(b0 - a1, a0 - b1)
                assert gap >= cert.delta


def test_certificate_bo_thirds_passes():
    mus = MeasureSequence(LEB, bo_system())
    cert = misiurewicz_certificate(mus, THIRDS, "1/100", 512)
    assert cert.passed and cert.delta > 0
    _verify_cores(cert, THIRDS, mus, 40)


def test_certificate_autonomous_constant_passes():
    ident = identity()
    mus = MeasureSequence(LEB, ident)
    for eps in ("1/100", "1/3"):
        cert = misiurewicz_certificate(mus, THIRDS, eps, 20)
        assert cert.passed
        _verify_cores(cert, THIRDS, mus, 20)


def test_certificate_binary_digits_fails():
    mus = MeasureSequence(LEB, identity())
    cert = misiurewicz_certificate(mus, binary_digit_sequence(), "1/100", 20)
    assert not cert.passed
    n, _ = cert.failure
    # separation of the digit cores shrinks like 2^-n
    finite = [(k, g) for k, g in enumerate(cert.gaps[:n]) if g is not None]
    assert all(g <= Q(1) / 2 ** (k + 1) for k, g in finite)


def test_certificate_json_round_trip():
    import json
    mus = MeasureSequence(LEB, identity())
    cert = misiurewicz_certificate(mus, THIRDS, "1/100", 3)
    d = json.loads(cert.dumps())
    assert d["verdict"] == "pass" and len(d["margins"]) == 3


def test_certificate_rejects_nonpositive_eps():
    with pytest.raises(UsageError):
        misiurewicz_certificate(MeasureSequence(LEB, identity()), THIRDS, 0, 3)


# --- E_max demo --------------------------------------------------------------


def test_emax_demo():
    trace, topo = emax_blowup_demo(12)
    assert trace.values == [1.0] * 12
    assert topo == 0.0
    assert partition_entropy_trace(identity(), None, binary_digit_sequence(), [10]).entropies == [10.0]


# --- power rule --------------------------------------------------------------


@pytest.mark.parametrize("sysname,seq", [("doubling", HALVES), ("tent", HALVES), ("tripling", THIRDS)])
@pytest.mark.parametrize("m", [2, 3])
def test_measure_power_rule_constant_systems(sysname, seq, m):
    sys = get_entry(sysname).system
    chk = measure_power_rule(sys, seq, m, 3)
    assert chk.identical
    assert chk.power_bits == chk.base_bits
    # quotient form: H/n for the power system equals m * H/(nm)
    assert chk.power_bits / 3 == pytest.approx(m * chk.base_bits / (3 * m), abs=1e-12)


def test_measure_power_rule_bo_schedule():
    chk = measure_power_rule(bo_system(), THIRDS, 2, 4)
    assert chk.identical and chk.power_bits == chk.base_bits


@pytest.mark.parametrize("seed", SEEDS[:20])
def test_measure_power_rule_random(seed):
    rng = random.Random(seed)
    sys = rand_system(rng)
    seq = PartitionSequence.periodic([rand_partition(rng) for _ in range(2)], "P")
    chk = measure_power_rule(sys, seq, rng.randint(2, 3), 2)
    assert chk.identical and chk.power_bits == chk.base_bits

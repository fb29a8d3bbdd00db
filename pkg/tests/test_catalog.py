"""Catalog constructors, the BO realization properties and its diagnostics."""
from __future__ import annotations

import json
import math

import pytest

from ndsentropy import (IntervalSet, MeasureSequence, NDSystem, PwConstMeasure, Q, UsageError,
                        get_entry, partition_entropy_trace)
from ndsentropy.catalog import (BO_J, bo_lipschitz_value, bo_lower_bound, bo_maps, bo_system, catalog_ids,
                                make_baselines, make_bo_system, orbit_settling_time, settling_index,
                                smoothed_indicator, weak_star_diagnostic, window_preimage)
from ndsentropy.maps import PiecewiseAffine, preimage
from ndsentropy.system import two_pow_n_squared

LOG2_3 = math.log2(3)
LEB = PwConstMeasure.lebesgue()
J_LO, J_HI = BO_J
TARGET = IntervalSet.half_open(0, "1/100")


def pieces(fmap):
    return list(zip(fmap.breaks, fmap.breaks[1:], fmap.slopes, fmap.intercepts))


# --- BO realization ----------------------------------------------------------


def test_g_three_full_branches_on_J():
    _, g = bo_maps()
    inside = [(a, b, s, t) for a, b, s, t in pieces(g) if J_LO <= a and b <= J_HI]
    assert [s for *_, s, _ in inside] == [3, -3, 3]
    assert inside[0][0] == J_LO and inside[-1][1] == J_HI
    for a, b, s, t in inside:
        assert sorted((s * a + t, s * b + t)) == [J_LO, J_HI]


def test_g_identity_off_J():
    _, g = bo_maps()
    for a, b, s, t in pieces(g):
        if b <= J_LO or a >= J_HI:
            assert (s, t) == (1, 0)
    for x in (Q(0), Q("1/7"), Q("1/3") - Q(1) / 10 ** 9, Q("2/3") + Q(1) / 10 ** 9, Q("9/10")):
        assert g(x) == x


def test_f_inverse_branch():
    f, _ = bo_maps()
    # the preimage of [1/3, 2/3) in [2/3, 5/6) is (x - 1/3)/2 + 2/3 pointwise
    for num in range(1, 60):
        y = Q("1/3") + Q(num) / 180
        x = (y - Q("1/3")) / 2 + Q("2/3")
        assert Q("2/3") <= x < Q("5/6") and f(x) == y
    pre = preimage(f, IntervalSet.half_open("1/3", "2/3"))
    assert pre & IntervalSet.half_open("2/3", 1) == IntervalSet.half_open("2/3", "5/6")


def test_lipschitz_constants_and_fixed_point():
    f, g = bo_maps()
    assert f.lipschitz == 2 and g.lipschitz == 3
    assert f(Q(1)) == 1 and g(Q(1)) == 1


def test_schedule_indices_and_gaps():
    sched = bo_system().schedule
    assert sched.hits_below(600) == [1, 2, 16, 512]
    m = [two_pow_n_squared(n) for n in range(4)]
    assert m == [1, 2, 16, 512]
    assert m[2] - m[1] - 1 == 13
    assert [bo_system().name_at(i) for i in range(4)] == ["g", "f", "f", "g"]


@pytest.mark.parametrize("n", [1, 2])
def test_counting_identity(n):
    sys = bo_system()
    A = IntervalSet.half_open("1/3", "1/2")
    horizon = two_pow_n_squared(n - 1) + 1
    assert window_preimage(sys, 0, horizon, A).measure == A.measure / 2 ** n


@pytest.mark.parametrize("n", [1, 2])
def test_counting_identity_random_subintervals(n):
    sys = bo_system()
    horizon = two_pow_n_squared(n - 1) + 1
    for a, b in ((Q("1/3"), Q("2/3")), (Q("2/5"), Q("3/5")), (Q("4/9"), Q("5/9")), (Q("1/2"), Q("2/3"))):
        A = IntervalSet.half_open(a, b)
        assert window_preimage(sys, 0, horizon, A).measure == A.measure / 2 ** n


def test_j_block_at_sixteen_with_ninths():
    """With the 1/9 partition the n = 16 join has exactly 3^13 cells of mass 1/(12 * 3^13)."""
    from collections import Counter
    from ndsentropy import joined_partition
    e = make_bo_system(3)
    P = joined_partition(e.system, e.partitions, 0, 16)
    counts = Counter(P.masses(e.mu0))
    assert counts[Q(1) / (12 * 3 ** 13)] == 3 ** 13


def test_thirds_cannot_see_the_J_block():
    e = make_bo_system(1)
    t = partition_entropy_trace(e.system, e.mu0, e.partitions, [16])
    assert t.cells == [5]
    assert t.values[0] < bo_lower_bound(16)


# --- orbit convergence -------------------------------------------------------


def test_orbit_convergence_grid():
    sys = bo_system()
    grid = [Q(j) / 1000 for j in range(1000)]
    horizon = two_pow_n_squared(16)
    times = [orbit_settling_time(sys, x, TARGET, horizon) for x in grid]
    assert all(t is not None for t in times)
    # a short horizon leaves most orbits still in the chaotic block
    short = [orbit_settling_time(sys, x, TARGET, 20000) for x in grid]
    assert sum(t is None for t in short) > 500


def test_orbit_settling_time_simple_cases():
    sys = bo_system()
    assert orbit_settling_time(sys, 0, TARGET, 100) == 0
    assert orbit_settling_time(sys, 1, TARGET, 10 ** 6) is None


# --- weak-star diagnostic ----------------------------------------------------


def test_weak_star_bo_hat_increases_to_one():
    mus = MeasureSequence(LEB, bo_system())
    tests = {"hat": smoothed_indicator(0, "1/100", "1/100"), "one": PiecewiseAffine([0, 1], [0], [1])}
    rep = weak_star_diagnostic(mus, tests, two_pow_n_squared(12))
    hat = rep.values["hat"]
    assert hat[-1] >= Q("99/100") and hat[-1] <= 1
    assert hat[-1] > hat[0]
    assert all(v == 1 for v in rep.values["one"])
    assert rep.at("hat", rep.starts[-1] + 5) == hat[-1]


def test_weak_star_identity_constant():
    mus = MeasureSequence(LEB, get_entry("identity").system)
    rep = weak_star_diagnostic(mus, {"hat": smoothed_indicator(0, "1/100", "1/100")}, 1000)
    assert rep.values["hat"] == [Q("3/200")]


def test_settling_index_bo():
    mus = MeasureSequence(LEB, bo_system())
    N, segs = settling_index(mus, TARGET, "99/100", two_pow_n_squared(12))
    assert N is not None
    assert all(m >= Q("99/100") for s, m in segs if s >= N)
    assert N == 2 ** 121 + 1
    N2, _ = settling_index(mus, TARGET, "99/100", 10 ** 6)
    assert N2 is None


def test_smoothed_indicator_values():
    phi = smoothed_indicator("1/4", "1/2", "1/8")
    assert phi(Q("1/3")) == 1 and phi(Q("3/16")) == Q("1/2") and phi(Q("3/4")) == 0


# --- catalog -----------------------------------------------------------------


def test_catalog_ids_and_lookup():
    ids = catalog_ids()
    assert ids == ["bo", "identity", "doubling", "tent", "rotation", "emax-demo", "alternating-2-4", "tripling"]
    for i in ids:
        assert get_entry(i).id == i
    with pytest.raises(UsageError):
        get_entry("nope")
    with pytest.raises(UsageError):
        make_bo_system(4)


def test_expected_values_carry_provenance():
    for e in [make_bo_system()] + make_baselines():
        assert e.expected
        for v in e.expected.values():
            assert v.source in ("closed-form", "derived", "trivial")
    exp = {e.id: e.expected for e in make_baselines()}
    assert exp["identity"]["h_top"].value == 0.0
    assert exp["doubling"]["h_top"].value == 1.0
    assert exp["rotation"]["h_top"].value == 0.0
    assert exp["alternating-2-4"]["h_top"].value == 1.5
    bo = make_bo_system().expected
    assert bo["h"].value == LOG2_3
    assert bo["meas_lower_16"].value == pytest.approx(1.512, abs=5e-4)
    assert bo["lipschitz_512"].value == bo_lipschitz_value(512) == pytest.approx(1.58153, abs=1e-5)


def test_constructors_deterministic_and_json():
    a, b = make_bo_system(), make_bo_system()
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)
    for e in [a] + make_baselines():
        d = json.loads(json.dumps(e.to_json()))
        sys = NDSystem.from_json(d["system"])
        for i in range(20):
            assert sys.name_at(i) == e.system.name_at(i)
        assert PwConstMeasure.from_json(d["mu0"]) == e.mu0


def test_bo_lower_bound_only_at_sixteen():
    assert bo_lower_bound() == pytest.approx((14 * LOG2_3 + 2) / 16)
    with pytest.raises(UsageError):
        bo_lower_bound(8)

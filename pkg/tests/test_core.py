"""Rationals, intervals, piecewise-affine maps and nonautonomous systems."""
from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndsentropy import (DomainError, Interval, IntervalSet, NDSystem, PwAffineMap, Q, UsageError,
                        compose, compose_window, constant_system, evaluate, power_system, preimage)
from ndsentropy.catalog import bo_maps, bo_system
from ndsentropy.maps import PiecewiseAffine
from ndsentropy.rational import fmt
from ndsentropy.system import (IndexSetSchedule, PeriodicSchedule, table_lipschitz, two_pow_n_squared,
                               uniform_lipschitz)

from conftest import SEEDS, rand_map, rand_system

fractions = st.fractions(min_value=0, max_value=1, max_denominator=50)


# --- rationals ---------------------------------------------------------------


def test_rational_parsing_and_lowest_terms():
    q = Q("6/8")
    assert (q.numerator, q.denominator) == (3, 4)
    assert Q(Fraction(2, 4)) == Q("1/2")
    assert fmt(Q("-3/6")) == "-1/2"
    assert fmt(Q(5)) == "5/1"  # always p/q in the JSON dialect


@pytest.mark.parametrize("bad", [0.5, True, None])
def test_rational_rejects_inexact(bad):
    with pytest.raises(TypeError):
        Q(bad)


def test_rational_rejects_garbage_string():
    with pytest.raises(ValueError):
        Q("one half")


# --- intervals ---------------------------------------------------------------


def test_interval_emptiness_and_membership():
    assert Interval.open(Q("1/3"), Q("1/3")).is_empty
    assert not Interval.point("1/3").is_empty
    iv = Interval("1/4", "1/2")
    assert iv.contains("1/4") and not iv.contains("1/2")
    with pytest.raises(ValueError):
        Interval("1/2", "1/4")


def test_intervalset_merges_adjacent_pieces():
    s = IntervalSet([Interval("0", "1/3"), Interval("1/3", "1/2"), Interval.closed("3/4", "1")])
    assert len(s) == 2
    assert s.measure == Q("1/2") + Q("1/4")


def test_intervalset_open_gap_is_kept():
    s = IntervalSet([Interval.open("0", "1/2"), Interval.open("1/2", "1")])
    assert len(s) == 2 and not s.contains("1/2")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(fractions, fractions, st.booleans(), st.booleans()), max_size=5),
       st.lists(st.tuples(fractions, fractions, st.booleans(), st.booleans()), max_size=5))
def test_intervalset_algebra_pointwise(a, b):
    def build(raw):
        return IntervalSet(Interval(min(x, y), max(x, y), c1, c2) for x, y, c1, c2 in raw)

    A, B = build(a), build(b)
    pts = {Q(x) for raw in (a, b) for x, y, *_ in raw} | {Q(y) for raw in (a, b) for x, y, *_ in raw}
    pts |= {(p + r) / 2 for p in pts for r in pts}
    for p in pts:
        assert (A | B).contains(p) == (A.contains(p) or B.contains(p))
        assert (A & B).contains(p) == (A.contains(p) and B.contains(p))
        assert (A - B).contains(p) == (A.contains(p) and not B.contains(p))
    assert (A | B).measure + (A & B).measure == A.measure + B.measure


def test_intervalset_json_round_trip():
    s = IntervalSet([Interval.open("1/7", "2/7"), Interval.closed("1/2", "1")])
    assert IntervalSet.from_json(s.to_json()) == s


# --- maps --------------------------------------------------------------------


def test_map_rejects_image_outside_unit_interval():
    with pytest.raises(UsageError):
        PwAffineMap([0, 1], [2], [0])


def test_map_domain_error():
    f, _ = bo_maps()
    with pytest.raises(DomainError):
        f(Q("3/2"))


def test_half_open_piece_convention():
    f = PwAffineMap.linear_mod1(2)
    assert f(Q("1/2")) == 0  # second piece starts at 1/2
    assert f(Q(1)) == 1  # last piece closed at 1


def test_doubling_composite_has_four_slope_four_branches():
    d = PwAffineMap.linear_mod1(2)
    c = compose(d, d)
    assert c.n_pieces == 4 and set(c.slopes) == {4}
    assert c == PwAffineMap.linear_mod1(4)


def test_bo_preimage_examples():
    f, g = bo_maps()
    J = IntervalSet.half_open("1/3", "2/3")
    assert preimage(f, J) == IntervalSet.half_open("2/3", "5/6")
    # equal mod points: g(4/9) = 2/3 lies outside J
    pre_g = preimage(g, J)
    assert (pre_g - J).measure == 0 and (J - pre_g).measure == 0
    assert not pre_g.contains(Q("4/9")) and pre_g.contains(Q("5/9"))
    ident = PwAffineMap.identity()
    assert preimage(ident, J) == J


def test_preimage_of_point_under_flat_piece():
    h = PwAffineMap([0, "1/2", 1], [0, 1], ["1/4", 0])
    pre = preimage(h, IntervalSet([Interval.point("1/4")]))
    assert pre == IntervalSet([Interval("0", "1/2"), Interval.point("1/4")])
    assert pre.measure == Q("1/2")


@pytest.mark.parametrize("seed", SEEDS[:40])
def test_preimage_adjunction(seed):
    rng = random.Random(seed)
    f = rand_map(rng)
    a, b = sorted(rng.sample(range(0, 13), 2))
    T = IntervalSet([Interval(Q(a) / 12, Q(b) / 12, rng.random() < 0.5, rng.random() < 0.5)])
    pre = preimage(f, T)
    pts = set(f.breaks) | {Q(k) / 97 for k in range(98)}
    pts |= {iv.lo for iv in pre} | {iv.hi for iv in pre}
    for x in pts:
        assert pre.contains(x) == T.contains(f(x))


@pytest.mark.parametrize("seed", SEEDS[:40])
def test_preimage_measure_bookkeeping(seed):
    rng = random.Random(seed)
    f = rand_map(rng, flat_prob=0.0)
    a, b = sorted(rng.sample(range(0, 13), 2))
    T = IntervalSet.half_open(Q(a) / 12, Q(b) / 12)
    expect = Q(0)
    for j, (lo, hi, s, t) in enumerate(f.pieces()):
        if s == 0:
            expect += (hi - lo) if T.contains(t) else 0
            continue
        img_lo, img_hi = f.piece_image(j)
        expect += (T & IntervalSet([Interval.closed(img_lo, img_hi)])).measure / abs(s)
    assert preimage(f, T).measure == expect


@pytest.mark.parametrize("seed", SEEDS[:30])
def test_compose_matches_pointwise(seed):
    # discontinuous maps: agreement except where the inner value sits on an outer breakpoint
    rng = random.Random(seed)
    f, g = rand_map(rng), rand_map(rng)
    c = compose(f, g)
    for x in set(g.breaks) | {Q(k) / 53 for k in range(54)}:
        assert c(x) == f(g(x)) or g(x) in f.breaks


def _rand_continuous(rng):
    k = rng.randint(1, 4)
    b = sorted({Q(0), Q(1)} | {Q(rng.randint(1, 23)) / 24 for _ in range(k - 1)})
    ys = [Q(rng.randint(0, 12)) / 12 for _ in b]
    s = [(y1 - y0) / (x1 - x0) for x0, x1, y0, y1 in zip(b, b[1:], ys, ys[1:])]
    return PwAffineMap(b, s, [y0 - sl * x0 for x0, y0, sl in zip(b, ys, s)])


@pytest.mark.parametrize("seed", SEEDS[:30])
def test_compose_continuous_exact_everywhere(seed):
    rng = random.Random(seed)
    f, g = _rand_continuous(rng), _rand_continuous(rng)
    c = compose(f, g)
    for x in set(g.breaks) | {Q(k) / 53 for k in range(54)}:
        assert c(x) == f(g(x))


def test_map_json_round_trip():
    _, g = bo_maps()
    assert PwAffineMap.from_json(g.to_json()) == g


# --- systems -----------------------------------------------------------------


def test_bo_schedule_indices():
    sys = bo_system()
    assert [i for i in range(600) if sys.name_at(i) == "f"] == [1, 2, 16, 512]
    assert two_pow_n_squared(2) - two_pow_n_squared(1) - 1 == 13


def test_evaluate_examples():
    sys = bo_system()
    assert evaluate(sys, 0, 1, Q("2/5")) == Q("8/15")
    assert evaluate(sys, 0, 2, Q("1/2")) == Q("1/4")
    assert evaluate(sys, 7, 0, Q("1/3")) == Q("1/3")
    with pytest.raises(DomainError):
        evaluate(sys, 0, 1, Q(2))


def test_compose_window_examples():
    dbl = constant_system(PwAffineMap.linear_mod1(2), "d", "circle")
    assert compose_window(dbl, 0, 2) == PwAffineMap.linear_mod1(4)
    sys = bo_system()
    f, g = bo_maps()
    assert compose_window(sys, 5, 1) == g
    fg = compose_window(sys, 0, 2)
    assert fg == compose(f, g)
    assert {abs(s) for s in fg.slopes} <= {Q(6), Q("3/2"), Q(2), Q("1/2")}


@pytest.mark.parametrize("seed", SEEDS[:25])
def test_composition_coherence(seed):
    rng = random.Random(seed)
    sys = rand_system(rng)
    i, n = rng.randint(0, 3), rng.randint(1, 4)
    comp = compose_window(sys, i, n)
    bad = [x for x in (Q(k) / 31 for k in range(32)) if comp(x) != evaluate(sys, i, n, x)]
    # mismatches are isolated points where an intermediate value hits a breakpoint
    for x in bad:
        y, hit = x, False
        for j in range(i, i + n):
            fj = sys.map_at(j)
            hit = hit or y in fj.breaks
            y = fj(y)
        assert hit


def test_composition_coherence_bo():
    sys = bo_system()
    for i, n in [(0, 3), (1, 4), (14, 4)]:
        comp = compose_window(sys, i, n)
        for x in (Q(k) / 81 for k in range(82)):
            assert comp(x) == evaluate(sys, i, n, x)


def test_compose_window_budget():
    dbl = constant_system(PwAffineMap.linear_mod1(2), "d")
    from ndsentropy import BudgetExceeded
    with pytest.raises(BudgetExceeded):
        compose_window(dbl, 0, 12, budget=1000)


def test_uniform_lipschitz_examples():
    L, run = uniform_lipschitz(bo_system(), 4)
    assert L == [3, 2, 2, 3] and run == [3, 3, 3, 3]
    L, _ = uniform_lipschitz(constant_system(PwAffineMap.linear_mod1(2), "d"), 5)
    assert L == [2] * 5
    L, _ = uniform_lipschitz(constant_system(PwAffineMap.identity(), "i"), 3)
    assert L == [1] * 3
    assert table_lipschitz(bo_system()) == 3


def test_power_system_examples():
    dbl = constant_system(PwAffineMap.linear_mod1(2), "d", "circle")
    assert power_system(dbl, 1) is dbl
    p2 = power_system(dbl, 2)
    assert all(p2.map_at(i) == PwAffineMap.linear_mod1(4) for i in range(5))
    bo2 = power_system(bo_system(), 2)
    # f enters the squared system in the step covering times 2n, 2n+1
    hits = {m for m in (1, 2, 16, 512)}
    for n in range(300):
        assert ("f" in bo2.name_at(n).split(";")) == bool(hits & {2 * n, 2 * n + 1})


@pytest.mark.parametrize("m", [2, 3])
def test_power_coherence(m):
    sys = bo_system()
    p = power_system(sys, m)
    for n in (1, 3, 6):
        for x in {Q(k) / 29 for k in range(30)}:
            assert evaluate(p, 0, n, x) == evaluate(sys, 0, n * m, x)


def test_system_json_round_trip():
    for sys in (bo_system(), NDSystem({"a": PwAffineMap.linear_mod1(2), "b": PwAffineMap.linear_mod1(4)},
                                      PeriodicSchedule(["a", "b"]), "circle", name="alt")):
        back = NDSystem.loads(sys.dumps())
        assert back == sys and back.dumps() == sys.dumps()


def test_system_rejects_undefined_map():
    with pytest.raises(UsageError):
        NDSystem({"a": PwAffineMap.identity()}, PeriodicSchedule(["a", "b"]))


def test_index_schedule_huge_indices():
    s = IndexSetSchedule("f", "g", sequence="two_pow_n_squared")
    m9 = two_pow_n_squared(9)
    assert s.name_at(m9) == "f" and s.name_at(m9 + 1) == "g"
    assert s.next_change(m9 + 1) == two_pow_n_squared(10)


def test_runs_cover_window_in_order():
    sys = bo_system()
    runs = list(sys.runs(0, 20))
    assert runs[0][0] == 0 and runs[-1][1] == 20
    assert all(a[1] == b[0] for a, b in zip(runs, runs[1:]))
    assert [r[2] for r in runs] == ["g", "f", "f", "g", "f", "g"]  # f at 1, 2, 16


def test_piecewise_affine_json():
    phi = PiecewiseAffine([0, "1/2", 1], [1, -1], [0, 1])
    assert PiecewiseAffine.from_json(phi.to_json()) == phi

"""Shared fixtures and seeded random generators of small exact instances."""
from __future__ import annotations

import random

import pytest

from ndsentropy.maps import PwAffineMap
from ndsentropy.measures import PwConstMeasure
from ndsentropy.partitions import Partition
from ndsentropy.rational import ONE, ZERO, Q
from ndsentropy.system import ConstantSchedule, NDSystem, PeriodicSchedule

SEEDS = list(range(100))

# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def rand_rational(rng: random.Random, den: int = 12):
    return Q(rng.randint(0, den)) / den


def rand_breaks(rng: random.Random, k: int, den: int = 24):
    inner = sorted(rng.sample(range(1, den), k - 1))
    return [ZERO] + [Q(v) / den for v in inner] + [ONE]


def rand_map(rng: random.Random, max_pieces: int = 4, flat_prob: float = 0.15) -> PwAffineMap:
    """Random piecewise-affine self-map of [0, 1], possibly discontinuous, with occasional flat pieces."""
    k = rng.randint(1, max_pieces)
    b = rand_breaks(rng, k)
    slopes, icpts = [], []
    for lo, hi in zip(b, b[1:]):
        y0 = rand_rational(rng)
        y1 = y0 if rng.random() < flat_prob else rand_rational(rng)
        s = (y1 - y0) / (hi - lo)
        slopes.append(s)
        icpts.append(y0 - s * lo)
    return PwAffineMap(b, slopes, icpts)


def rand_partition(rng: random.Random, max_cells: int = 4) -> Partition:
    k = rng.randint(1, max_cells + 1)
    b = rand_breaks(rng, k, 18)
    labels = [rng.randrange(max_cells) for _ in range(k)]
    return Partition(b, labels)


def rand_measure(rng: random.Random, max_pieces: int = 3, atom_prob: float = 0.3) -> PwConstMeasure:
    k = rng.randint(1, max_pieces)
    b = rand_breaks(rng, k, 10)
    weights = [Q(rng.randint(0, 4)) for _ in range(k)]
    if sum(weights) == 0:
        weights[0] = ONE
    atoms = []
    if rng.random() < atom_prob:
        atoms.append((rand_rational(rng, 7), Q(rng.randint(1, 3))))
    total = sum(w for w in weights) + sum(m for _, m in atoms)
    heights = [w / total / (hi - lo) for w, lo, hi in zip(weights, b, b[1:])]
    return PwConstMeasure(b, heights, [(p, m / total) for p, m in atoms])


def rand_system(rng: random.Random, max_maps: int = 2) -> NDSystem:
    k = rng.randint(1, max_maps)
    maps = {f"m{j}": rand_map(rng) for j in range(k)}
    if k == 1:
        sched = ConstantSchedule("m0")
    else:
        sched = PeriodicSchedule([rng.choice(sorted(maps)) for _ in range(rng.randint(2, 3))])
    return NDSystem(maps, sched, name="random")


@pytest.fixture
def rng_factory():
    return lambda seed: random.Random(seed)

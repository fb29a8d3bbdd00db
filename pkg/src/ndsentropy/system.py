"""Nonautonomous systems: a schedule assigning a map to every time index."""
from __future__ import annotations

import json
import threading
from bisect import bisect_right
from typing import Callable, Mapping

from .errors import BudgetExceeded, DomainError, UsageError
from .maps import PwAffineMap, compose
from .rational import ONE, ZERO, Q, Rational

SPACES = ("interval", "circle")


def two_pow_n_squared(n: int) -> int:
    """Switching times ``m_0 = 1``, ``m_n = 2**(n*n)``."""
    return 1 if n == 0 else 2 ** (n * n)


# named strictly increasing integer sequences usable from JSON
SEQUENCES: dict[str, Callable[[int], int]] = {"two_pow_n_squared": two_pow_n_squared}


class Schedule:
    """Pure function from time index to map name.

    ``next_change(i)`` returns an index ``j > i`` such that every index in
    ``(i, j)`` uses the same map as ``i`` (``None`` if the map never changes).
    """

    kind = "abstract"

    def name_at(self, i: int) -> str:
        raise NotImplementedError

    def next_change(self, i: int) -> int | None:
        return i + 1

    def names(self) -> set[str]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(json.dumps(self.to_json(), sort_keys=True))


class ConstantSchedule(Schedule):
    kind = "constant"

    def __init__(self, name: str):
        self.name = name

    def name_at(self, i):
        return self.name

    def next_change(self, i):
        return None

    def names(self):
        return {self.name}

    def to_json(self):
        return {"kind": self.kind, "map": self.name}


class PeriodicSchedule(Schedule):
    kind = "periodic"

    def __init__(self, names):
        self.cycle = tuple(names)
        if not self.cycle:
            raise UsageError("periodic schedule needs at least one map")

    def name_at(self, i):
        return self.cycle[i % len(self.cycle)]

    def next_change(self, i):
        if len(set(self.cycle)) == 1:
            return None
        j = i + 1
        while self.name_at(j) == self.name_at(i):
            j += 1
        return j

    def names(self):
        return set(self.cycle)

    def to_json(self):
        return {"kind": self.kind, "maps": list(self.cycle)}


class IndexSetSchedule(Schedule):
    """``hit`` at the indices of a strictly increasing sequence, ``miss`` elsewhere."""

    kind = "index-set"

    def __init__(self, hit: str, miss: str, sequence: str | None = None, indices=None):
        if (sequence is None) == (indices is None):
            raise UsageError("give exactly one of sequence name or explicit indices")
        if sequence is not None and sequence not in SEQUENCES:
            raise UsageError(f"unknown sequence {sequence!r}")
        self.hit, self.miss = hit, miss
        self.sequence = sequence
        self.indices = None if indices is None else tuple(sorted(set(int(k) for k in indices)))

    def hit_after(self, i: int) -> int | None:
        """Smallest hit index strictly greater than ``i``."""
        if self.indices is not None:
            k = bisect_right(self.indices, i)
            return self.indices[k] if k < len(self.indices) else None
        seq = SEQUENCES[self.sequence]
        n = 0
        while seq(n) <= i:
            n += 1
        return seq(n)

    def is_hit(self, i: int) -> bool:
        if self.indices is not None:
            k = bisect_right(self.indices, i)
            return k > 0 and self.indices[k - 1] == i
        return self.hit_after(i - 1) == i

    def hits_below(self, bound: int) -> list[int]:
        out, i = [], -1
        while True:
            j = self.hit_after(i)
            if j is None or j >= bound:
                return out
            out.append(j)
            i = j

    def name_at(self, i):
        return self.hit if self.is_hit(i) else self.miss

    def next_change(self, i):
        if self.is_hit(i):
            return i + 1
        return self.hit_after(i)

    def names(self):
        return {self.hit, self.miss}

    def to_json(self):
        d = {"kind": self.kind, "hit": self.hit, "miss": self.miss}
        if self.sequence is not None:
            d["sequence"] = self.sequence
        else:
            d["indices"] = list(self.indices)
        return d


class PowerSchedule(Schedule):
    """Window ``n`` of the base schedule: maps at ``n*m, ..., n*m + m - 1``.

    Names are ``;``-joined in application order.
    """

    kind = "power"

    def __init__(self, base: Schedule, m: int):
        if m < 1:
            raise UsageError("power m must be >= 1")
        self.base, self.m = base, int(m)

    def name_at(self, n):
        m = self.m
        return ";".join(self.base.name_at(n * m + r) for r in range(m))

    def next_change(self, n):
        m = self.m
        j = self.base.next_change(n * m)
        if j is None:
            return None
        last_uniform = (j - m) // m
        return last_uniform + 1 if last_uniform >= n else n + 1

    def names(self):
        return self.base.names()

    def to_json(self):
        return {"kind": self.kind, "base": self.base.to_json(), "m": self.m}


def schedule_from_json(d: Mapping) -> Schedule:
    kind = d.get("kind")
    if kind == "constant":
        return ConstantSchedule(d["map"])
    if kind == "periodic":
        return PeriodicSchedule(d["maps"])
    if kind == "index-set":
        return IndexSetSchedule(d["hit"], d["miss"], sequence=d.get("sequence"), indices=d.get("indices"))
    if kind == "power":
        return PowerSchedule(schedule_from_json(d["base"]), d["m"])
    raise UsageError(f"unknown schedule kind {kind!r}")


class NDSystem:
    """A table of named maps plus a schedule; ``f_i = maps[schedule.name_at(i)]``."""

    def __init__(self, maps: Mapping[str, PwAffineMap], schedule: Schedule,
                 space: str = "interval", name: str | None = None):
        if space not in SPACES:
            raise UsageError(f"space must be one of {SPACES}")
        self.maps = dict(maps)
        for k, v in self.maps.items():
            if not isinstance(v, PwAffineMap):
                raise UsageError(f"map {k!r} is not a PwAffineMap")
        missing = schedule.names() - set(self.maps)
        if missing:
            raise UsageError(f"schedule references undefined maps {sorted(missing)}")
        self.schedule = schedule
        self.space = space
        self.name = name or "system"
        self._composites: dict[str, PwAffineMap] = {}
        self._lock = threading.Lock()

    def map_named(self, name: str) -> PwAffineMap:
        if name in self.maps:
            return self.maps[name]
        with self._lock:
            cached = self._composites.get(name)
        if cached is not None:
            return cached
        parts = name.split(";")
        result = self.maps[parts[0]]
        for p in parts[1:]:
            result = compose(self.maps[p], result)
        with self._lock:
            self._composites.setdefault(name, result)
        return result

    def map_at(self, i: int) -> PwAffineMap:
        if i < 0:
            raise UsageError("time index must be >= 0")
        return self.map_named(self.schedule.name_at(i))

    def name_at(self, i: int) -> str:
        return self.schedule.name_at(i)

    def distance(self, x, y):
        d = abs(x - y)
        if self.space == "circle":
            return min(d, 1 - d)
        return d

    def runs(self, i: int, n: int):
        """Yield ``(start, stop, name)`` maximal-known constant runs covering ``[i, i+n)``."""
        t, end = i, i + n
        while t < end:
            nc = self.schedule.next_change(t)
            stop = end if nc is None else min(end, nc)
            yield t, stop, self.schedule.name_at(t)
            t = stop

    def __eq__(self, other):
        return (isinstance(other, NDSystem) and self.maps == other.maps
                and self.schedule == other.schedule and self.space == other.space)

    def __hash__(self):
        return hash((self.schedule, self.space))

    def __repr__(self):
        return f"NDSystem({self.name!r}, space={self.space}, schedule={self.schedule.to_json()})"

    def to_json(self) -> dict:
        return {"name": self.name, "space": self.space,
                "maps": {k: v.to_json() for k, v in sorted(self.maps.items())},
                "schedule": self.schedule.to_json()}

    @classmethod
    def from_json(cls, d: Mapping) -> "NDSystem":
        unknown = set(d) - {"name", "space", "maps", "schedule"}
        if unknown:
            raise UsageError(f"unknown system fields {sorted(unknown)}")
        maps = {k: PwAffineMap.from_json(v) for k, v in d["maps"].items()}
        return cls(maps, schedule_from_json(d["schedule"]), d.get("space", "interval"), d.get("name"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "NDSystem":
        return cls.from_json(json.loads(text))


def constant_system(fmap: PwAffineMap, name: str = "f", space: str = "interval") -> NDSystem:
    return NDSystem({name: fmap}, ConstantSchedule(name), space, name=name)


# cap on steps spent looking for an eventual cycle inside one long run
MAX_RUN_STEPS = 10_000_000


def iterate_map(fmap: PwAffineMap, x: Rational, k: int) -> Rational:
    """``fmap^k(x)`` exactly, jumping over eventual cycles of rational orbits."""
    if k <= 0:
        return x
    seen = {x: 0}
    for step in range(1, k + 1):
        x = fmap(x)
        if step == k:
            return x
        if x in seen:
            period = step - seen[x]
            for _ in range((k - step) % period):
                x = fmap(x)
            return x
        if step >= MAX_RUN_STEPS:
            raise BudgetExceeded("orbit steps without a cycle", step, MAX_RUN_STEPS)
        seen[x] = step
    return x


def evaluate(sys: NDSystem, i: int, n: int, x) -> Rational:
    """``f_i^n(x) = f_{i+n-1} o ... o f_i (x)`` exactly; ``n = 0`` is the identity."""
    x = Q(x)
    if x < ZERO or x > ONE:
        raise DomainError(f"{x} is outside [0, 1]")
    if n < 0:
        raise UsageError("step count must be >= 0")
    for start, stop, name in sys.runs(i, n):
        x = iterate_map(sys.map_named(name), x, stop - start)
    return x


def compose_window(sys: NDSystem, i: int, n: int, budget: int | None = None) -> PwAffineMap:
    """Closed-form composite ``f_i^n`` with collinear pieces merged."""
    if n < 1:
        raise UsageError("compose_window needs n >= 1")
    result = sys.map_at(i)
    for j in range(i + 1, i + n):
        result = compose(sys.map_at(j), result, budget)
    return result


def power_system(sys: NDSystem, m: int) -> NDSystem:
    """The ``m``-th power system ``n -> f_{nm}^m``."""
    if m < 1:
        raise UsageError("m must be >= 1")
    if m == 1:
        return sys
    return NDSystem(sys.maps, PowerSchedule(sys.schedule, m), sys.space, name=f"{sys.name}^[{m}]")


def uniform_lipschitz(sys: NDSystem, horizon: int) -> tuple[list[Rational], list[Rational]]:
    """Per-step Lipschitz constants ``L_i`` (max |slope|) for ``i < horizon`` and their running max."""
    if horizon < 1:
        raise UsageError("horizon must be >= 1")
    ls, running = [], []
    best = None
    for start, stop, name in sys.runs(0, horizon):
        L = sys.map_named(name).lipschitz
        for _ in range(start, stop):
            ls.append(L)
            best = L if best is None or L > best else best
            running.append(best)
    return ls, running


def table_lipschitz(sys: NDSystem) -> Rational:
    """Exact uniform bound ``sup_n L_n`` for the finite map table."""
    base = max(sys.maps[k].lipschitz for k in sys.schedule.names())
    if isinstance(sys.schedule, PowerSchedule):
        return base ** sys.schedule.m
    return base

"""Shannon entropy, conditional entropy and the Rokhlin-type distance (bits).

Masses stay exact; only the final ``-sum p log2 p`` is floating point, and it
is summed with ``math.fsum`` so the result does not depend on cell order.
"""
from __future__ import annotations

import math
from typing import Iterable

from .errors import UsageError
from .measures import MeasureSequence, PwConstMeasure
from .partitions import Partition, PartitionSequence, refine
from .rational import log2q


def entropy_of_masses(masses: Iterable) -> float:
    return math.fsum(-float(p) * log2q(p) for p in masses if p != 0)


def shannon_entropy(mu: PwConstMeasure, P: Partition) -> float:
    return entropy_of_masses(P.masses(mu))


def conditional_entropy(mu: PwConstMeasure, P: Partition, Q: Partition) -> float:
    """``H(P | Q) = H(P v Q) - H(Q)``."""
    return shannon_entropy(mu, refine(P, Q)) - shannon_entropy(mu, Q)


def symmetric_conditional(mu: PwConstMeasure, P: Partition, Q: Partition) -> float:
    """``H(P|Q) + H(Q|P)``."""
    joint = shannon_entropy(mu, refine(P, Q))
    return 2 * joint - shannon_entropy(mu, P) - shannon_entropy(mu, Q)


def rokhlin_distance(mus: MeasureSequence, P: PartitionSequence, Q: PartitionSequence,
                     horizon: int) -> tuple[float, list[float]]:
    """Max over ``n < horizon`` of ``H_{mu_n}(P_n|Q_n) + H_{mu_n}(Q_n|P_n)``.

    A lower bound for the supremum over all ``n``; the per-``n`` trace is returned too.
    """
    if horizon < 1:
        raise UsageError("horizon must be >= 1")
    trace = [symmetric_conditional(mus[n], P[n], Q[n]) for n in range(horizon)]
    return max(trace), trace

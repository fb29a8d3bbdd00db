"""Exact entropy computations for nonautonomous piecewise-affine systems on [0, 1]."""
from __future__ import annotations

from .errors import BudgetExceeded, DomainError, NDSError, UsageError
from .intervals import Interval, IntervalSet
from .maps import PiecewiseAffine, PwAffineMap, compose, preimage
from .measures import MeasureSequence, PwConstMeasure, pushforward
from .partitions import (Partition, PartitionSequence, binary_digit_sequence, joined_partition,
                         pullback_partition, refine)
from .information import conditional_entropy, rokhlin_distance, shannon_entropy
from .measure_entropy import (EntropyTrace, MisiurewiczCertificate, class_entropy_sup,
                              emax_blowup_demo, measure_power_rule, misiurewicz_certificate,
                              partition_entropy_trace)
from .rational import Q, fmt
from .system import (ConstantSchedule, IndexSetSchedule, NDSystem, PeriodicSchedule, PowerSchedule,
                     compose_window, constant_system, evaluate, power_system)
from .topological import (CoverSequence, Log2Linear, SpanningReport, cover_refinement_count,
                          entropy_from_spanning, expanding_circle_entropies, lebesgue_number,
                          lipschitz_bound_at, lipschitz_upper_bound, spanning_bounds,
                          spanning_power_rule)
from .catalog import CatalogEntry, get_entry, make_baselines, make_bo_system

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "DomainError", "NDSError", "UsageError",
    "Interval", "IntervalSet", "PiecewiseAffine", "PwAffineMap", "compose", "preimage",
    "MeasureSequence", "PwConstMeasure", "pushforward",
    "Partition", "PartitionSequence", "binary_digit_sequence", "joined_partition",
    "pullback_partition", "refine",
    "conditional_entropy", "rokhlin_distance", "shannon_entropy",
    "EntropyTrace", "MisiurewiczCertificate", "class_entropy_sup", "emax_blowup_demo",
    "measure_power_rule", "misiurewicz_certificate", "partition_entropy_trace",
    "Q", "fmt",
    "ConstantSchedule", "IndexSetSchedule", "NDSystem", "PeriodicSchedule", "PowerSchedule",
    "compose_window", "constant_system", "evaluate", "power_system",
    "CoverSequence", "Log2Linear", "SpanningReport", "cover_refinement_count",
    "entropy_from_spanning", "expanding_circle_entropies", "lebesgue_number",
    "lipschitz_bound_at", "lipschitz_upper_bound", "spanning_bounds", "spanning_power_rule",
    "CatalogEntry", "get_entry", "make_baselines", "make_bo_system",
    "__version__",
]

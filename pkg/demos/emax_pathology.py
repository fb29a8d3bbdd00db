"""Why a class of partition sequences needs more than refinement control.

On the identity map the binary-digit partitions produce one fresh bit per step,
so the measure trace is identically 1, although nothing moves.  The separation
certificate catches this: the digit cells get closer than any fixed delta.
"""
from __future__ import annotations

from ndsentropy import MeasureSequence, PwConstMeasure, emax_blowup_demo, get_entry, misiurewicz_certificate
from ndsentropy.partitions import PartitionSequence, Partition, binary_digit_sequence


def main() -> None:
    tr, topo = emax_blowup_demo(16)
    print("digit partitions, H/n:", tr.values)
    print(f"topological estimate: {topo:.4f} bits")
    mus = MeasureSequence(PwConstMeasure.lebesgue(), get_entry("identity").system)
    cert = misiurewicz_certificate(mus, binary_digit_sequence(), "1/100", 16)
    print("digit certificate:", cert.verdict, "failure:", cert.failure)
    thirds = PartitionSequence.constant(Partition.uniform(3), "thirds")
    cert = misiurewicz_certificate(mus, thirds, "1/100", 16)
    print("constant thirds certificate:", cert.verdict, "delta:", cert.delta)


if __name__ == "__main__":
    main()

"""Batch experiment runner.

    ndsentropy --config run.json --out results/ [--workers K] [--budget CELLS] [--verify]

Exit status: 0 success, 2 invalid config, 3 budget exceeded, 4 verification failed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .catalog import (CatalogEntry, Expected, get_entry, near_halves_cover, settling_index,
                      smoothed_indicator, weak_star_diagnostic)
from .errors import DEFAULT_CELL_BUDGET, BudgetExceeded, UsageError
from .information import rokhlin_distance
from .intervals import IntervalSet
from .maps import PiecewiseAffine
from .measure_entropy import (emax_blowup_demo, measure_power_rule, misiurewicz_certificate,
                              partition_entropy_trace)
from .measures import MeasureSequence, PwConstMeasure
from .partitions import Partition, PartitionSequence
from .rational import Q, fmt
from .system import NDSystem, two_pow_n_squared, uniform_lipschitz
from .topological import (cover_refinement_count, entropy_from_spanning,
                          expanding_circle_entropies, lipschitz_bound_at, lipschitz_upper_bound,
                          spanning_bounds, spanning_power_rule)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_VERIFY = 0, 2, 3, 4
DEFAULT_SEED = 20240601

KINDS = ("meas-entropy", "topo-spanning", "topo-cover", "lipschitz-bound", "rokhlin", "certify",
         "power-rule", "weak-star", "emax-demo", "circle-formulas")

# accepted keys -> type check
FIELDS: dict[str, Callable[[Any], bool]] = {
    "system": lambda v: isinstance(v, str),
    "kind": lambda v: v in KINDS,
    "horizons": lambda v: isinstance(v, list) and all(isinstance(x, int) and x > 0 for x in v),
    "n": lambda v: isinstance(v, int) and v > 0,
    "ns": lambda v: isinstance(v, list) and all(isinstance(x, int) and x > 0 for x in v),
    "eps": lambda v: isinstance(v, (str, list)),
    "grid_step": lambda v: isinstance(v, str),
    "m": lambda v: isinstance(v, int) and v >= 1,
    "k": lambda v: v in (1, 2, 3),
    "eps_cert": lambda v: isinstance(v, str),
    "horizon": lambda v: isinstance(v, int) and v > 0,
    "seed": lambda v: isinstance(v, int),
    "cover_delta": lambda v: isinstance(v, str),
    "partition": lambda v: isinstance(v, dict),
    "compare_cells": lambda v: isinstance(v, int) and v >= 1,
    "measure": lambda v: isinstance(v, dict),
    "threshold": lambda v: isinstance(v, str),
    "out": lambda v: isinstance(v, str),
}
REQUIRED = ("system", "kind")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def validate_config(cfg: Any) -> dict:
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(cfg) - set(FIELDS))
    if unknown:
        raise UsageError(f"unknown config fields: {unknown}")
    for key in REQUIRED:
        if key not in cfg:
            raise UsageError(f"missing required field {key!r}")
    for key, val in cfg.items():
        if not FIELDS[key](val):
            raise UsageError(f"invalid value for {key!r}: {val!r}")
    for key in ("eps", "grid_step", "eps_cert", "cover_delta", "threshold"):
        if key in cfg:
            vals = cfg[key] if isinstance(cfg[key], list) else [cfg[key]]
            for v in vals:
                if not isinstance(v, str) or "/" not in v:
                    raise UsageError(f"{key} values must be rationals written as 'p/q'")
                Q(v)
    return cfg


@dataclass
class Context:
    cfg: dict
    entry: CatalogEntry | None
    system: NDSystem
    mu0: PwConstMeasure
    partitions: PartitionSequence
    budget: int
    workers: int


def load_context(cfg: dict, budget: int, workers: int) -> Context:
    ref = cfg["system"]
    entry = None
    if ref.endswith(".json"):
        path = Path(ref)
        if not path.exists():
            raise UsageError(f"system file {ref} not found")
        system = NDSystem.loads(path.read_text())
        mu0 = PwConstMeasure.lebesgue()
        parts = PartitionSequence.constant(Partition.uniform(2), "halves")
    else:
        entry = get_entry(ref, cfg.get("k", 1))
        system, mu0, parts = entry.system, entry.mu0, entry.partitions
    if "measure" in cfg:
        mu0 = PwConstMeasure.from_json(cfg["measure"])
    if "partition" in cfg:
        parts = PartitionSequence.from_json(cfg["partition"])
    return Context(cfg, entry, system, mu0, parts, budget, workers)


def _eps_list(cfg) -> list:
    e = cfg.get("eps", "1/64")
    return [Q(v) for v in (e if isinstance(e, list) else [e])]


# ---------------------------------------------------------------------------
# computations: each returns (csv header, rows, summary dict, checks list)
# a check is (name, passed, detail)


def _expect(ctx: Context, key: str) -> Expected:
    if ctx.entry is None or key not in ctx.entry.expected:
        raise UsageError(f"no expected value {key!r} declared for {ctx.cfg['system']!r}")
    return ctx.entry.expected[key]


def run_meas_entropy(ctx: Context):
    hs = ctx.cfg.get("horizons", [1, 2, 4, 8])
    tr = partition_entropy_trace(ctx.system, ctx.mu0, ctx.partitions, hs, ctx.budget,
                                 measure_id=ctx.cfg["system"])
    rows = [[n, v, c, a] for n, v, c, a in zip(tr.horizons, tr.values, tr.cells, tr.atoms)]
    summary = {"running_max": tr.running_max[-1]}

    def checks():
        sysid = ctx.cfg["system"]
        if sysid == "bo":
            out = []
            if 16 in tr.horizons:
                lb = _expect(ctx, "meas_lower_16").value
                v = tr.values[tr.horizons.index(16)]
                out.append(("lower(16) >= counting bound", v >= lb - 1e-9, f"{v:.12g} vs {lb:.12g}"))
            lip = lipschitz_upper_bound(uniform_lipschitz(ctx.system, 512)[0], 1)[-1]
            out.append(("upper(512) <= 1.582", lip <= 1.582, f"{lip:.12g}"))
            h = _expect(ctx, "h").value
            lo = tr.running_max[-1]
            hi = lipschitz_bound_at(ctx.system, two_pow_n_squared(12))
            out.append(("log2 3 in [lower, upper limit]", lo - 1e-9 <= h <= hi + 1e-9,
                        f"[{lo:.12g}, {hi:.12g}]"))
            return out
        if sysid == "emax-demo":
            return [("trace exactly 1.0", all(v == 1.0 for v in tr.values), str(tr.values))]
        e = _expect(ctx, "h_mu")
        v = tr.values[-1]
        return [("h_mu at last horizon", abs(v - e.value) <= max(e.tol, 1e-9), f"{v:.12g} vs {e.value:.12g}")]

    return ["n", "value_bits", "cells", "budget_used"], rows, summary, checks


def run_topo_spanning(ctx: Context):
    ns = ctx.cfg.get("ns", [ctx.cfg.get("n", 8)])
    grid = ctx.cfg.get("grid_step", "1/4096")
    reports = [spanning_bounds(ctx.system, n, e, grid) for e in _eps_list(ctx.cfg) for n in ns]
    rows = [[r.n, fmt(r.eps), r.lower_bits, r.upper_bits, fmt(r.grid_step), r.lower, r.upper, int(r.coarse)]
            for r in reports]
    traces = entropy_from_spanning(reports)
    summary = {fmt(e): {"lower_growth": t.lower_growth, "upper_growth": t.upper_growth}
               for e, t in traces.items()}

    def checks():
        e = _expect(ctx, "h_top")
        out = []
        for eps, t in traces.items():
            g = [x for x in t.lower_growth if x is not None]
            if not g:
                raise UsageError("verification needs at least two horizons (ns)")
            out.append((f"lower growth eps={fmt(eps)}", abs(g[-1] - e.value) <= e.tol, f"{g[-1]:.12g}"))
        return out

    return ["n", "eps", "lower_bits", "upper_bits", "grid_step", "lower_count", "upper_count", "coarse"], \
        rows, summary, checks


def run_topo_cover(ctx: Context):
    ns = ctx.cfg.get("ns", [ctx.cfg.get("n", 6)])
    cover = near_halves_cover(ctx.cfg.get("cover_delta", "1/100"))
    counts = [cover_refinement_count(ctx.system, cover, n, budget=ctx.budget) for n in ns]
    rows = [[c.n, c.exact, c.greedy, c.elements, c.bits, int(c.upper_only)] for c in counts]

    def checks():
        e = _expect(ctx, "h_top")
        v = counts[-1].bits
        return [("cover growth at last n", abs(v - e.value) <= e.tol and not counts[-1].upper_only, f"{v:.12g}")]

    return ["n", "exact_N", "greedy_N", "elements", "bits", "upper_only"], rows, {}, checks


def run_lipschitz(ctx: Context):
    n = ctx.cfg.get("n", 512)
    L, _ = uniform_lipschitz(ctx.system, n)
    tr = lipschitz_upper_bound(L, 1)
    rows = [[i + 1, fmt(L[i]), v] for i, v in enumerate(tr)]

    def checks():
        if ctx.cfg["system"] == "bo":
            e = _expect(ctx, "lipschitz_512")
            if n != 512:
                raise UsageError("the declared Lipschitz value is for n = 512")
            return [("trace(512)", abs(tr[-1] - e.value) <= e.tol, f"{tr[-1]:.12g}")]
        e = _expect(ctx, "h_top")
        return [("upper bound >= h_top", tr[-1] >= e.value - e.tol, f"{tr[-1]:.12g}")]

    return ["n", "L", "value_bits"], rows, {"value": tr[-1]}, checks


def run_rokhlin(ctx: Context):
    horizon = ctx.cfg.get("horizon", 8)
    other = PartitionSequence.constant(Partition.uniform(ctx.cfg.get("compare_cells", 2)), "compare")
    mus = MeasureSequence(ctx.mu0, ctx.system)
    d, trace = rokhlin_distance(mus, ctx.partitions, other, horizon)
    rows = [[n, v] for n, v in enumerate(trace)]

    def checks():
        raise UsageError("rokhlin runs declare no expected values")

    return ["n", "distance_bits"], rows, {"distance": d}, checks


def run_certify(ctx: Context):
    horizon = ctx.cfg.get("horizon", 512)
    cert = misiurewicz_certificate(MeasureSequence(ctx.mu0, ctx.system), ctx.partitions,
                                   ctx.cfg.get("eps_cert", "1/100"), horizon)
    rows = [[n, None if g is None else fmt(g), sum(r is not None for r in ms)]
            for n, (g, ms) in enumerate(zip(cert.gaps, cert.margins))]
    summary = {"verdict": cert.verdict, "delta": None if cert.delta is None else fmt(cert.delta),
               "failure": cert.to_json()["failure"]}

    def checks():
        want = {"bo": "pass", "emax-demo": "fail"}.get(ctx.cfg["system"])
        if want is None:
            raise UsageError(f"no expected certificate verdict for {ctx.cfg['system']!r}")
        return [("verdict", cert.verdict == want, cert.verdict)]

    return ["n", "min_gap", "kept_cells"], rows, summary, checks


def run_power_rule(ctx: Context):
    m = ctx.cfg.get("m", 2)
    n = ctx.cfg.get("n", 4)
    grid = ctx.cfg.get("grid_step", "1/16384")
    eps = _eps_list(ctx.cfg)[0]
    chk = spanning_power_rule(ctx.system, m, n, eps, grid)
    ratio = chk.ratio
    meas = measure_power_rule(ctx.system, ctx.partitions, m, n, ctx.mu0, ctx.budget)
    rows = [["power", n, *chk.power_counts, chk.power_growth],
            ["base", m * (n - 1) + 1, *chk.base_counts, chk.base_growth]]
    summary = {"ratio": ratio, "measure_identical": meas.identical,
               "measure_base_bits": meas.base_bits, "measure_power_bits": meas.power_bits}

    def checks():
        return [("topological ratio", abs(ratio - m) <= 0.1, f"{ratio:.12g}"),
                ("measure identity", meas.identical and meas.base_bits == meas.power_bits,
                 f"{meas.base_bits:.12g} / {meas.power_bits:.12g}")]

    return ["system", "horizon", "lower_count_n", "lower_count_next", "growth_bits"], rows, summary, checks


def run_weak_star(ctx: Context):
    horizon = ctx.cfg.get("horizon", two_pow_n_squared(12))
    thr = ctx.cfg.get("threshold", "99/100")
    mus = MeasureSequence(ctx.mu0, ctx.system)
    target = IntervalSet.half_open(0, "1/100")
    tests = {"hat": smoothed_indicator(0, "1/100", "1/100"), "one": PiecewiseAffine([0, 1], [0], [1])}
    rep = weak_star_diagnostic(mus, tests, horizon)
    N, segs = settling_index(mus, target, thr, horizon)
    rows = [[s, fmt(m), float(m), float(h)] for (s, m), h in zip(segs, rep.values["hat"])]
    summary = {"settling_index": N, "threshold": thr}

    def checks():
        if ctx.cfg["system"] != "bo":
            raise UsageError("weak-star expectations exist for bo only")
        return [("settles above threshold", N is not None, str(N))]

    return ["start", "mass_0_1_100", "mass_float", "hat_integral"], rows, summary, checks


def run_emax(ctx: Context):
    n = ctx.cfg.get("n", 20)
    tr, topo = emax_blowup_demo(n, ctx.budget)
    rows = [[k, v, c] for k, v, c in zip(tr.horizons, tr.values, tr.cells)]

    def checks():
        return [("measure trace exactly 1.0", all(v == 1.0 for v in tr.values), ""),
                ("topological estimate <= 0.05", topo <= 0.05, f"{topo:.12g}")]

    return ["n", "value_bits", "cells"], rows, {"topological_bound": topo}, checks


def run_circle(ctx: Context):
    n = ctx.cfg.get("n", 8)
    res = expanding_circle_entropies(ctx.system, ctx.mu0, n, ctx.budget)
    rows = [[r.n, float(r.topological), float(r.measure), repr(r.topological), repr(r.measure)] for r in res]

    def checks():
        e = _expect(ctx, "h_top")
        sel = [r for r in res if r.n % 2 == 0] if ctx.cfg["system"] == "alternating-2-4" else res
        ok = all(float(r.topological) == e.value and r.topological == r.measure for r in sel)
        return [("exact values", ok, f"{e.value:.12g}")]

    return ["n", "top_bits", "meas_bits", "top_exact", "meas_exact"], rows, {}, checks


RUNNERS = {"meas-entropy": run_meas_entropy, "topo-spanning": run_topo_spanning, "topo-cover": run_topo_cover,
           "lipschitz-bound": run_lipschitz, "rokhlin": run_rokhlin, "certify": run_certify,
           "power-rule": run_power_rule, "weak-star": run_weak_star, "emax-demo": run_emax,
           "circle-formulas": run_circle}


def run(cfg: dict, out_dir: Path, *, workers: int = 1, budget: int = DEFAULT_CELL_BUDGET,
        verify: bool = False) -> tuple[int, dict]:
    """Run one experiment and write ``<kind>.csv`` and ``report.json`` into ``out_dir``."""
    cfg = validate_config(cfg)
    ctx = load_context(cfg, budget, workers)
    header, rows, summary, checks = RUNNERS[cfg["kind"]](ctx)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_name = f"{cfg['kind']}.csv"
    (out_dir / csv_name).write_text(to_csv(header, rows))
    report = {"config": cfg, "config_hash": config_hash(cfg), "seed": cfg.get("seed", DEFAULT_SEED),
              "workers": workers, "budget": budget, "csv": csv_name, "summary": summary}
    if ctx.entry is not None:
        report["expected"] = {k: v.to_json() for k, v in sorted(ctx.entry.expected.items())}
    status = EXIT_OK
    if verify:
        results = checks()
        report["verify"] = [{"check": n, "pass": bool(ok), "detail": d} for n, ok, d in results]
        if not all(ok for _, ok, _ in results):
            status = EXIT_VERIFY
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=str) + "\n")
    return status, report


def _diag(kind: str, msg: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": msg, "exit": code}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="ndsentropy", description="Entropy experiments for nonautonomous systems.")
    ap.add_argument("--config", required=True, help="experiment config (JSON)")
    ap.add_argument("--out", default=None, help="output directory (default: config 'out' or ./results)")
    ap.add_argument("--workers", type=int, default=1, help="worker count (results do not depend on it)")
    ap.add_argument("--budget", type=int, default=DEFAULT_CELL_BUDGET, help="cell budget")
    ap.add_argument("--verify", action="store_true", help="check results against declared expected values")
    args = ap.parse_args(argv)
    try:
        if args.workers < 1 or args.budget < 1:
            raise UsageError("--workers and --budget must be positive")
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        out = Path(args.out or (cfg.get("out") if isinstance(cfg, dict) else None) or "results")
        status, report = run(cfg, out, workers=args.workers, budget=args.budget, verify=args.verify)
    except BudgetExceeded as exc:
        return _diag("budget", str(exc), EXIT_BUDGET)
    except (UsageError, KeyError, TypeError, ValueError) as exc:
        return _diag("config", str(exc), EXIT_CONFIG)
    for item in report.get("verify", []):
        print(f"{'PASS' if item['pass'] else 'FAIL'}  {item['check']}  {item['detail']}")
    return status


if __name__ == "__main__":
    sys.exit(main())

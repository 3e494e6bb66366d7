"""Experiment runner CLI.

Subcommands: partition, simulate, validate-alpha, oracle, gen-rates,
gen-popularity. Every output file embeds the resolved configuration and the
master seed, and re-running a command with the same config and seed yields
byte-identical files. Exit codes: 0 ok, 1 validation error, 2 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .allocation import AllocationConfig, allocate_s0
from .codec import RateTable, storage_cost, synthesize_rate_table
from .config import ConfigError, ExperimentConfig, load_config
from .domain import CameraRig, Popularity, Viewpoint, make_popularity
from .models import g_factor, t_star
from .partition import (Partition, PartitionObjectiveParams, brute_force_optimal,
                        equidistant_partition, partition_objective, partition_record,
                        select_baseline_nk, solve_optimal)
from .simulator import (SessionConfig, aggregate_sessions, generate_path, path_seed,
                        run_sessions, trace_request_records)

SESSION_COLUMNS = [
    "method", "delta", "mu", "f_e", "t_S", "q_label", "mean_rate_bits",
    "mean_distortion", "success_rate", "starvation_rate", "N_K", "U_S_bits",
    "mean_rate_kB", "U_S_kB", "mean_hole_pixels", "t_star", "g",
    "path_count", "allocator",
]

PARTITION_COLUMNS = [
    "method", "delta", "mu", "f_e", "q_label", "N_K", "cost_total",
    "cost_rate", "cost_storage", "t_star", "g", "mean_width", "boundaries",
]

ALPHA_COLUMNS = [
    "t_star", "delta", "g", "segment", "first_view", "last_view", "mass",
    "alpha_hat", "alpha_model", "rel_err", "interior", "in_regime",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return str(value)


def _write_csv(path, columns, rows, comment: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(comment)
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _bits_to_kb(bits: float) -> float:
    return bits / 8000.0


def build_method_partition(method: str, cfg: ExperimentConfig, table, pop_true,
                           g: float, mu: float):
    """Partition for one method at one sweep point, plus its evaluation params.

    Evaluation always uses the true popularity and the actual g, whatever
    the method optimised for.
    """
    n_v = cfg.n_views
    uniform = make_popularity("uniform", n_v)
    eval_params = PartitionObjectiveParams(mu=mu, g=g, popularity=pop_true,
                                           table=table, width_cap=cfg.width_cap)
    if method == "NBPA":
        part = solve_optimal(eval_params, n_v)
    elif method == "NBPU":
        solve_params = PartitionObjectiveParams(mu=mu, g=g, popularity=uniform,
                                                table=table, width_cap=cfg.width_cap)
        part = solve_optimal(solve_params, n_v)
    elif method in ("Baseline", "Baseline-NB"):
        mode = "fixed" if method == "Baseline" else "nb"
        nk_params = PartitionObjectiveParams(mu=mu, g=g, popularity=uniform,
                                             table=table, width_cap=cfg.width_cap)
        nk = select_baseline_nk(nk_params, n_v, mode)
        part = equidistant_partition(n_v, nk)
    else:
        raise ConfigError(f"methods: unknown method {method!r}")
    return part, eval_params


def _sweep_points(cfg: ExperimentConfig, with_ts: bool):
    for method in cfg.methods:
        for f_e in cfg.sweep("f_e"):
            for delta in cfg.sweep("delta"):
                for mu in cfg.sweep("mu"):
                    if with_ts:
                        for t_s in cfg.sweep("t_s"):
                            yield method, int(f_e), float(delta), float(mu), t_s
                    else:
                        yield method, int(f_e), float(delta), float(mu)


def _point_tag(method: str, f_e: int, delta: float, mu: float, t_s=None) -> str:
    tag = f"{method}_fe{f_e}_d{delta:g}_mu{mu:g}"
    if t_s is not None:
        tag += f"_ts{t_s:g}"
    return tag


def cmd_partition(args) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    table = cfg.table()
    pop = cfg.popularity()
    rows = []
    for method, f_e, delta, mu in _sweep_points(cfg, with_ts=False):
        sched = cfg.schedule(delta, f_e)
        ts = t_star(sched)
        g = g_factor(ts, delta, cfg.n_views)
        part, eval_params = build_method_partition(method, cfg, table, pop, g, mu)
        record = partition_record(part, eval_params)
        record.update({
            "method": method, "delta": delta, "f_e": f_e, "t_star": ts,
            "n_segments": part.n_segments,
        })
        record.update(cfg.provenance())
        name = f"partition_{_point_tag(method, f_e, delta, mu)}.json"
        with open(os.path.join(cfg.out_dir, name), "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        rows.append({
            "method": method, "delta": delta, "mu": mu, "f_e": f_e,
            "q_label": table.q_label, "N_K": part.n_segments,
            "cost_total": record["cost_total"], "cost_rate": record["cost_rate"],
            "cost_storage": record["cost_storage"], "t_star": ts, "g": g,
            "mean_width": cfg.n_views / part.n_segments,
            "boundaries": list(part.boundaries),
        })
    _write_csv(os.path.join(cfg.out_dir, "partitions.csv"), PARTITION_COLUMNS,
               rows, cfg.provenance_comment())
    print(f"wrote {len(rows)} partition points to {cfg.out_dir}")
    return 0


def _simulate_point(payload):
    raw, method, f_e, delta, mu, t_s = payload
    cfg = ExperimentConfig(raw)
    table = cfg.table()
    pop = cfg.popularity()
    rig = cfg.rig()
    scene = cfg.scene()
    sched = cfg.schedule(delta, f_e)
    ts = t_star(sched)
    g = g_factor(ts, delta, cfg.n_views)
    part, _ = build_method_partition(method, cfg, table, pop, g, mu)
    sim = cfg.raw["simulate"]
    t_s_val = ts if t_s is None else float(t_s)
    if t_s_val > ts:
        raise ConfigError(f"sweeps.t_s: value {t_s_val} exceeds t_star {ts}")
    alloc = AllocationConfig(t_star=ts, delta=delta, t_s=t_s_val,
                             sample_count=sim["sample_count"],
                             memory_aware=bool(sim["memory_aware"]))
    shift = sim["virtual_shift"]
    session_cfg = SessionConfig(
        schedule=sched, popularity=pop, partition=part, alloc=alloc, rig=rig,
        scene=scene, table=table, allocator=str(sim["allocator"]),
        path_count=int(sim["path_count"]), seed=cfg.seed,
        virtual_shift=tuple(shift) if shift is not None else None)
    traces = run_sessions(session_cfg)
    summary = aggregate_sessions(traces)
    storage = storage_cost(table, part)
    row = {
        "method": method, "delta": delta, "mu": mu, "f_e": f_e,
        "t_S": t_s_val, "q_label": table.q_label,
        "mean_rate_bits": summary.mean_rate_bits,
        "mean_distortion": summary.mean_distortion,
        "success_rate": summary.success_rate,
        "starvation_rate": summary.starvation_rate,
        "N_K": part.n_segments, "U_S_bits": storage,
        "mean_rate_kB": _bits_to_kb(summary.mean_rate_bits),
        "U_S_kB": _bits_to_kb(storage),
        "mean_hole_pixels": summary.mean_hole_pixels,
        "t_star": ts, "g": g, "path_count": session_cfg.path_count,
        "allocator": session_cfg.allocator,
    }
    records = None
    if sim["emit_traces"]:
        records = []
        for i, trace in enumerate(traces):
            records.extend(trace_request_records(trace, context={"path": i}))
    return row, records


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    points = [(cfg.raw, m, f_e, d, mu, t_s)
              for m, f_e, d, mu, t_s in _sweep_points(cfg, with_ts=True)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_point, points))
    else:
        results = [_simulate_point(p) for p in points]
    rows = []
    for point, (row, records) in zip(points, results):
        rows.append(row)
        if records is not None:
            _, method, f_e, delta, mu, t_s = point
            name = f"traces_{_point_tag(method, f_e, delta, mu, row['t_S'])}.jsonl"
            with open(os.path.join(cfg.out_dir, name), "w") as fh:
                fh.write(json.dumps({"meta": cfg.provenance()}, sort_keys=True) + "\n")
                for rec in records:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
    _write_csv(os.path.join(cfg.out_dir, "sessions.csv"), SESSION_COLUMNS,
               rows, cfg.provenance_comment())
    print(f"wrote {len(rows)} session summaries to {cfg.out_dir}")
    return 0


def cmd_validate_alpha(args) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    spec = cfg.raw["alpha"]
    n_v = int(spec["n_views"])
    n_k = int(spec["n_segments"])
    delta = float(spec["delta"])
    path_count = int(spec["path_count"])
    grid = [float(t) for t in spec["t_star_grid"]]

    rig = CameraRig.linear(n_v)
    pop = cfg.popularity(n_views=n_v)
    part = equidistant_partition(n_v, n_k)
    # bits are irrelevant for request counting; any valid table works
    table = synthesize_rate_table(n_v, "constant", (2.0, 1.0), q_label="alpha")
    sched = cfg.schedule(delta)
    n_e = sched.n_requests

    request_s = []
    for i in range(path_count):
        path = generate_path(pop, sched, path_seed(cfg.seed, i, 0))
        request_s.append(path.frame_s[::sched.request_interval])

    masses = np.array([pop.mass(a, b) for a, b in part.segments()])
    rows = []
    worst = 0.0
    for ts in grid:
        g = g_factor(ts, delta, n_v)
        alloc = AllocationConfig(t_star=ts, delta=delta)
        counts = np.zeros(n_k)
        for coords in request_s:
            for s in coords:
                decision = allocate_s0(Viewpoint(float(s)), part, rig, alloc, table)
                for k in decision.selected:
                    counts[k - 1] += 1.0
        alpha_hat = counts / path_count
        alpha_model = (1.0 - g) * n_e + g * n_e * masses
        in_regime = ts * delta <= n_v / 6.0
        for k, ((a, b), mass) in enumerate(zip(part.segments(), masses), start=1):
            interior = 1 < k < n_k
            rel = abs(alpha_hat[k - 1] - alpha_model[k - 1]) / n_e
            if interior and in_regime:
                worst = max(worst, rel)
            rows.append({
                "t_star": ts, "delta": delta, "g": g, "segment": k,
                "first_view": a, "last_view": b, "mass": float(mass),
                "alpha_hat": float(alpha_hat[k - 1]),
                "alpha_model": float(alpha_model[k - 1]),
                "rel_err": float(rel), "interior": int(interior),
                "in_regime": int(in_regime),
            })
    _write_csv(os.path.join(cfg.out_dir, "alpha.csv"), ALPHA_COLUMNS, rows,
               cfg.provenance_comment())
    print(f"alpha model check: {len(rows)} rows, worst interior in-regime "
          f"relative error {worst:.4f}")
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    spec = cfg.raw["oracle"]
    instances = int(spec["instances"])
    n_min, n_max = int(spec["n_views_min"]), int(spec["n_views_max"])
    mu_grid = [float(m) for m in spec["mu_grid"]]
    g_grid = [float(g) for g in spec["g_grid"]]
    rng = np.random.default_rng(cfg.seed)
    failures = 0
    started = time.perf_counter()
    for i in range(instances):
        n_v = int(rng.integers(n_min, n_max + 1))
        h_p = rng.uniform(1.0, 50.0, n_v)
        h_i = h_p + rng.uniform(1.0, 100.0, n_v)
        w = rng.uniform(0.01, 1.0, n_v)
        pop = Popularity(w / w.sum())
        table = RateTable("oracle", h_i, h_p)
        mu = mu_grid[i % len(mu_grid)]
        g = g_grid[(i // len(mu_grid)) % len(g_grid)]
        params = PartitionObjectiveParams(mu=mu, g=g, popularity=pop, table=table)
        solved = solve_optimal(params, n_v)
        solved_cost = partition_objective(solved, params)
        _, brute_cost = brute_force_optimal(params, n_v)
        ok = abs(solved_cost - brute_cost) <= 1e-9
        verdict = "ok" if ok else "MISMATCH"
        print(f"instance {i:3d}: N_V={n_v:2d} mu={mu} g={g} "
              f"solver={solved_cost!r} brute={brute_cost!r} {verdict}")
        if not ok:
            failures += 1
    elapsed = time.perf_counter() - started
    print(f"{instances} instances in {elapsed:.2f}s, {failures} mismatches")
    return 2 if failures else 0


def cmd_gen_rates(args) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    table = cfg.table()
    path = args.file or os.path.join(cfg.out_dir, "rates.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(cfg.provenance_comment())
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "h_I", "h_P"])
        for n in range(table.n_views):
            writer.writerow([n + 1, repr(float(table.h_i[n])),
                             repr(float(table.h_p[n]))])
    print(f"wrote rate table ({table.n_views} views) to {path}")
    return 0


def cmd_gen_popularity(args) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    pop = cfg.popularity()
    path = args.file or os.path.join(cfg.out_dir, "popularity.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(cfg.provenance_comment())
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "p"])
        for n, p in enumerate(pop.weights, start=1):
            writer.writerow([n, repr(float(p))])
    print(f"wrote popularity ({pop.n_views} views) to {path}")
    return 0


def _add_common(sub):
    sub.add_argument("--config", default=None, help="YAML experiment config")
    sub.add_argument("--seed", type=int, default=None, help="master seed override")
    sub.add_argument("--out", default=None, help="output directory override")
    sub.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="dotted config override, e.g. --set sweeps.mu=[0.05,0.5]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="naviseg",
        description="Navigation-segment partitioning and session simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="solve partitions over the sweep grid")
    _add_common(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("simulate", help="run navigation sessions over the sweep grid")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate-alpha", help="empirical vs model request counts")
    _add_common(p)
    p.set_defaults(func=cmd_validate_alpha)

    p = sub.add_parser("oracle", help="solver vs brute-force equivalence suite")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-rates", help="synthesize a rate-table CSV")
    _add_common(p)
    p.add_argument("--file", default=None, help="output CSV path")
    p.set_defaults(func=cmd_gen_rates)

    p = sub.add_parser("gen-popularity", help="synthesize a popularity CSV")
    _add_common(p)
    p.add_argument("--file", default=None, help="output CSV path")
    p.set_defaults(func=cmd_gen_popularity)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``orderpick <command> ...``.

Exit codes: 1 usage or unreadable input, 2 validation failure, 3 state
budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import yaml

from . import __version__, kernels, mip_export
from .dp_core import BUDGET_ENV, MemoryBudgetExceeded, solve_makespan, write_trace
from .dp_turnover import solve_turnover
from .instance import SCHEMA_VERSION, GeneratorParams, InstanceError, generate, load, save
from .metrics import (WAIT_HEADER, classify_waiting, count_interventions, misplaced_waiting,
                      relocation_stats, wait_row, write_rows)
from .policies import PolicyError, gap, resolve_config, simulate
from .schedule import InvalidSolution, avg_turnover, reconstruct, save_solution, write_schedule_csv
from .warehouse import LayoutError, default_layout, make_layout

TRACE_SCHEMA_VERSION = 1
RESULTS_HEADER = ("instance", "policy", "objective", "value", "gap", "runtime_ms")
EXIT_USAGE, EXIT_INVALID, EXIT_BUDGET = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def as_fraction(x: float, max_den: int = 1000) -> str:
    """``p/q`` when x is that rational to 1e-9, else the decimal."""
    f = Fraction(x).limit_denominator(max_den)
    if abs(float(f) - x) <= 1e-9:
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    return repr(x)


def _atomic_json(doc, path):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# ------------------------------------------------------------------- gen

def _layout_from(doc):
    if not doc:
        return default_layout()
    return make_layout(**doc)


def generator_params(doc: dict, seed: int) -> GeneratorParams:
    doc = dict(doc or {})
    layout = _layout_from(doc.pop("layout", None))
    return GeneratorParams(layout=layout, seed=seed, **doc)


def cmd_gen(args) -> int:
    base = {"n_orders": args.orders, "arrival_rate": args.rate,
            "max_order_size": args.max_size, "capacity": args.capacity,
            "speed": args.speed, "pick_time": args.pick_time, "slot_pitch": args.pitch}
    if args.count == 1:
        save(generate(generator_params(base, args.seed)), args.out)
        print(args.out)
        return 0
    os.makedirs(args.out, exist_ok=True)
    for k in range(args.count):
        path = os.path.join(args.out, f"inst_{args.seed + k}.json")
        save(generate(generator_params(base, args.seed + k)), path)
        print(path)
    return 0


# ----------------------------------------------------------------- solve

def cmd_solve(args) -> int:
    inst = load(args.instance, metric_close_flag=args.metric_close)
    record = args.trace is not None
    t0 = time.perf_counter()
    if args.objective == "makespan":
        res = solve_makespan(inst, dominance=args.dominance, fifo_order_start=args.fifo_order_start,
                             budget=args.budget, record=record)
        dp, value, extra = res, res.value, {}
        print(f"makespan {as_fraction(value)}")
    else:
        res = solve_turnover(inst, dominance=args.dominance,
                             fifo_order_start=args.fifo_order_start, budget=args.budget,
                             record=record)
        dp, value = res.dp, res.avg_turnover
        extra = {"completion_sum": res.completion_sum, "label": res.label,
                 "exactness": res.exactness}
        print(f"avg_turnover {as_fraction(value)}")
        print(f"completion_sum {as_fraction(res.completion_sum)}")
        print(f"exactness {res.exactness}")
    ms = (time.perf_counter() - t0) * 1000
    sol = dp.solution
    print("batches " + " | ".join(",".join(f"o{o + 1}" for o in b) for b in sol.batches))
    if record:
        write_trace(dp, args.trace, with_label=args.objective == "turnover")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_solution(sol, os.path.join(args.out, "solution.json"))
        write_schedule_csv(inst, sol, reconstruct(inst, sol), os.path.join(args.out, "schedule.csv"))
        stats = dict(dp.stats)
        stats.update(objective=args.objective, value=value, **extra)
        keys = sorted(stats)
        write_rows(os.path.join(args.out, "stats.csv"), keys, [[stats[k] for k in keys]])
    if args.verbose:
        print(f"states_expanded {dp.stats['states_expanded']} backend {kernels.BACKEND} "
              f"runtime_ms {ms:.1f}", file=sys.stderr)
    return 0


# ------------------------------------------------------------------- mip

def cmd_export_mip(args) -> int:
    inst = load(args.instance, metric_close_flag=args.metric_close)
    model = mip_export.build_mip(inst, args.objective)
    mip_export.write_lp(model, args.out)
    print(f"{args.out}: {len(model.variables)} variables, {len(model.rows)} rows, K = {model.K}")
    if args.solve:
        obj = mip_export.solve_lp(args.out, args.solve)
        print(f"solver objective {obj!r} -> {args.solve}")
    return 0


def cmd_check_solution(args) -> int:
    inst = load(args.instance, metric_close_flag=args.metric_close)
    model = mip_export.build_mip(inst, args.objective)
    try:
        values = mip_export.read_solution(model, args.solution)
    except (OSError, mip_export.SolutionFileError) as exc:
        print(f"unparseable solution: {exc}", file=sys.stderr)
        return EXIT_USAGE
    bad = mip_export.check_solution(model, values)
    if bad:
        for line in bad:
            print(f"violated {line}")
        return EXIT_INVALID
    sol = mip_export.decode(model, inst, values)
    sched = reconstruct(inst, sol)
    sched_value = sched.makespan if args.objective == "makespan" else avg_turnover(inst, sched, sol)
    print(f"feasible; mip objective {model.objective_value(values)!r}; "
          f"schedule objective {sched_value!r}")
    print("batches " + " | ".join(",".join(f"o{o + 1}" for o in b) for b in sol.batches))
    return 0


# -------------------------------------------------------------- simulate

def load_manifest(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh) if path.endswith(".json") else yaml.safe_load(fh)
    if not isinstance(doc, dict) or "policies" not in doc:
        raise UsageError("manifest needs a 'policies' list")
    base = os.path.dirname(os.path.abspath(path))
    if "instances" in doc:
        insts = [p if os.path.isabs(p) else os.path.join(base, p) for p in doc["instances"]]
        for p in insts:
            if not os.path.exists(p):
                raise UsageError(f"manifest instance {p} does not exist")
        doc["instances"] = insts
    elif "seeds" not in doc:
        raise UsageError("manifest needs 'instances' or 'seeds'")
    for spec in doc["policies"]:
        resolve_config(spec)
    doc.setdefault("objectives", ["makespan"])
    for o in doc["objectives"]:
        if o not in ("makespan", "turnover"):
            raise UsageError(f"unknown objective {o!r}")
    return doc


def _tasks(doc):
    if "instances" in doc:
        return [(os.path.splitext(os.path.basename(p))[0], p, None) for p in doc["instances"]]
    seeds = doc["seeds"]
    if isinstance(seeds, int):
        seeds = list(range(int(doc.get("seed", 0)), int(doc.get("seed", 0)) + seeds))
    return [(f"seed{s}", None, s) for s in seeds]


def _run_task(task):
    name, path, seed, doc, out = task
    inst = load(path) if path else generate(generator_params(doc.get("generator"), seed))
    budget = (doc.get("solver") or {}).get("budget")
    rows, metric_rows, wait_rows = [], [], []
    for objective in doc["objectives"]:
        if objective == "makespan":
            ref = solve_makespan(inst, budget=budget)
            star = ref.value
            if objective == doc["objectives"][0]:
                wait_rows.append(wait_row(name, classify_waiting(inst, ref.solution)))
        else:
            star = solve_turnover(inst, budget=budget).avg_turnover
        for spec in doc["policies"]:
            cfg = resolve_config(spec)
            t0 = time.perf_counter()
            trace, _ = simulate(inst, cfg, objective, budget=budget)
            ms = (time.perf_counter() - t0) * 1000
            value = trace.objective(objective)
            rows.append([name, cfg.label, objective, value, gap(value, star), round(ms, 3)])
            reloc = relocation_stats(trace)
            metric_rows.append([name, cfg.label, objective, count_interventions(trace),
                                reloc["time"], reloc["orders_with_prior_relocation"],
                                misplaced_waiting(inst, trace)])
            if out:
                safe = cfg.label.replace("/", "_").replace("*", "star").replace("+", "plus")
                trace.write_jsonl(os.path.join(out, "traces", f"{name}__{safe}__{objective}.jsonl"))
    return rows, metric_rows, wait_rows


def cmd_simulate(args) -> int:
    doc = load_manifest(args.manifest)
    out = args.out or doc.get("output") or "results"
    os.makedirs(os.path.join(out, "traces"), exist_ok=True)
    tasks = [(n, p, s, doc, out) for n, p, s in _tasks(doc)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    rows = [r for res in results for r in res[0]]
    write_rows(os.path.join(out, "results.csv"), RESULTS_HEADER, rows)
    write_rows(os.path.join(out, "policy_metrics.csv"),
               ("instance", "policy", "objective", "interventions", "relocation_time",
                "orders_with_prior_relocation", "misplaced_waiting"),
               [r for res in results for r in res[1]])
    write_rows(os.path.join(out, "cios_waiting.csv"), WAIT_HEADER,
               [r for res in results for r in res[2]])
    print(f"{len(rows)} rows -> {os.path.join(out, 'results.csv')}")
    return 0


# ---------------------------------------------------------------- report

def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _mean(xs):
    return sum(xs) / len(xs) if xs else float("nan")


def cmd_report(args) -> int:
    res = _read(os.path.join(args.results, "results.csv"))
    groups = {}
    for r in res:
        groups.setdefault((r["objective"], r["policy"]), []).append(r)
    rows = [[obj, pol, len(g), _mean([float(r["value"]) for r in g]),
             _mean([float(r["gap"]) for r in g])] for (obj, pol), g in groups.items()]
    write_rows(os.path.join(args.results, "ladder_means.csv"),
               ("objective", "policy", "instances", "mean_value", "mean_gap"), rows)
    for row in rows:
        print(f"{row[0]:9s} {row[1]:28s} mean gap {100 * row[4]:7.2f}%")
    mpath = os.path.join(args.results, "policy_metrics.csv")
    if os.path.exists(mpath):
        mgroups = {}
        for r in _read(mpath):
            mgroups.setdefault((r["objective"], r["policy"]), []).append(r)
        write_rows(os.path.join(args.results, "interventions.csv"),
                   ("objective", "policy", "mean_interventions", "mean_relocation_time",
                    "mean_misplaced_waiting"),
                   [[o, p, _mean([float(r["interventions"]) for r in g]),
                     _mean([float(r["relocation_time"]) for r in g]),
                     _mean([float(r["misplaced_waiting"]) for r in g])]
                    for (o, p), g in mgroups.items()])
    wpath = os.path.join(args.results, "cios_waiting.csv")
    if os.path.exists(wpath):
        w = _read(wpath)
        if w:
            cols = WAIT_HEADER[1:]
            write_rows(os.path.join(args.results, "waiting_taxonomy.csv"), ("statistic",) + cols,
                       [["mean"] + [_mean([float(r[c]) for r in w]) for c in cols]])
    return 0


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="orderpick", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"orderpick {__version__} (instance schema {SCHEMA_VERSION}, "
                           f"trace schema {TRACE_SCHEMA_VERSION}, kernels {kernels.BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate random instances")
    g.add_argument("--orders", type=int, default=10)
    g.add_argument("--rate", type=float, default=200.0, help="orders per 8 hour shift")
    g.add_argument("--max-size", type=int, default=2)
    g.add_argument("--capacity", type=int, default=2)
    g.add_argument("--speed", type=float, default=0.8)
    g.add_argument("--pick-time", type=float, default=10.0)
    g.add_argument("--pitch", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("-o", "--out", required=True, help="file (count 1) or directory")
    g.set_defaults(func=cmd_gen)

    def instance_args(q):
        q.add_argument("instance")
        q.add_argument("--objective", choices=("makespan", "turnover"), default="makespan")
        q.add_argument("--metric-close", action="store_true",
                       help="repair matrices that violate the triangle inequality")

    s = sub.add_parser("solve", help="complete-information DP")
    instance_args(s)
    s.add_argument("--dominance", action=argparse.BooleanOptionalAction, default=None,
                   help="release-time pruning (default: on for makespan, off for turnover)")
    s.add_argument("--fifo-order-start", action="store_true",
                   help="start pending orders in release order only")
    s.add_argument("--trace", help="write expanded states as JSON lines")
    s.add_argument("--budget", type=int, default=None,
                   help=f"maximum stored states (env {BUDGET_ENV})")
    s.add_argument("--out", help="directory for solution.json, schedule.csv and stats.csv")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("export-mip", help="write the MIP model in LP format")
    instance_args(e)
    e.add_argument("-o", "--out", required=True)
    e.add_argument("--solve", metavar="SOLFILE",
                   help="also solve with an installed solver and write name value lines")
    e.set_defaults(func=cmd_export_mip)

    c = sub.add_parser("check-solution", help="check and decode a MIP solution file")
    instance_args(c)
    c.add_argument("solution")
    c.set_defaults(func=cmd_check_solution)

    m = sub.add_parser("simulate", help="run online policies from a manifest")
    m.add_argument("manifest")
    m.add_argument("-o", "--out")
    m.add_argument("--workers", type=int, default=1)
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="aggregate a simulate output directory")
    r.add_argument("results")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "dominance", "unset") is None:
        args.dominance = args.objective == "makespan"
    try:
        return args.func(args)
    except MemoryBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InstanceError, InvalidSolution, PolicyError, LayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

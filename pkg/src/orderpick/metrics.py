"""Measurements on complete-information schedules and policy traces."""

from __future__ import annotations

import csv
import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from .instance import Instance
from .kernels import EPS
from .schedule import Schedule, Solution, chi, reconstruct, savings

IDLE = "idle"
B_EXT = "b_ext"  # in-field wait for an order that extends the batch
B_FIT = "b_fit"  # wait although other work was available
KINDS = (IDLE, B_EXT, B_FIT)


@dataclass(frozen=True)
class WaitEpisode:
    order: int  # order waited for
    item: int
    onset: float
    duration: float
    kind: str


@dataclass(frozen=True)
class WaitReport:
    episodes: tuple
    walk_total: float  # walking that is not relocation
    pick_total: float
    relocation_total: float
    makespan: float

    def total(self, kind: str) -> float:
        return sum(e.duration for e in self.episodes if e.kind == kind)

    @property
    def idle_total(self) -> float:
        return self.total(IDLE)

    @property
    def b_ext_total(self) -> float:
        return self.total(B_EXT)

    @property
    def b_fit_total(self) -> float:
        return self.total(B_FIT)

    @property
    def strategic_total(self) -> float:
        return self.b_ext_total + self.b_fit_total

    def count(self, kind: str) -> int:
        return sum(1 for e in self.episodes if e.kind == kind)

    def percentile80(self, kind: str) -> float:
        return nearest_rank([e.duration for e in self.episodes if e.kind == kind], 80)

    @property
    def accounted(self) -> float:
        return (self.walk_total + self.pick_total + self.relocation_total + self.idle_total
                + self.b_ext_total + self.b_fit_total)


def nearest_rank(values, pct: float) -> float:
    """Nearest-rank percentile; 0 for an empty sample."""
    if not values:
        return 0.0
    xs = sorted(values)
    k = max(1, math.ceil(pct / 100.0 * len(xs)))
    return xs[k - 1]


def _relocation_part(depart, walk, unpicked_release) -> float:
    """Walking time spent before any unpicked item was released."""
    first = min(unpicked_release, default=math.inf)
    return max(0.0, min(depart + walk, first) - depart)


def classify_waiting(inst: Instance, sol: Solution, sched: Schedule | None = None) -> WaitReport:
    """Split the stationary time of an earliest-pick schedule into idle,
    batch-extension and better-fit waiting, and separate relocation walking."""
    sched = sched or reconstruct(inst, sol)
    rel = [o.release for o in inst.orders]
    picked = set()
    episodes = []
    walk = reloc = pick = 0.0
    legs = iter(sched.legs)
    for orders, seq in zip(sol.batches, sol.item_sequence):
        commenced = []
        for i, s in enumerate(seq):
            leg = next(legs)
            unpicked = [inst.release_of_item(x) for x in range(inst.n_items) if x not in picked]
            r = _relocation_part(leg.depart, leg.walk, unpicked)
            reloc += r
            walk += leg.walk - r
            pick += leg.pick
            o = inst.items[s].order_id
            if leg.wait > EPS:
                onset = leg.depart + leg.walk
                if i == 0:
                    other = any(
                        rel[j] <= onset and j != o
                        and any(it.item_id not in picked for it in inst.orders[j].items)
                        for j in range(inst.n_orders))
                    kind = B_FIT if other else IDLE
                else:
                    open_left = any(it.item_id not in picked
                                    for j in commenced for it in inst.orders[j].items)
                    kind = B_FIT if open_left else B_EXT
                episodes.append(WaitEpisode(o, s, onset, leg.wait, kind))
            if o not in commenced:
                commenced.append(o)
            picked.add(s)
    walk += sum(sched.return_walk)
    return WaitReport(tuple(episodes), walk, pick, reloc, sched.makespan)


def schedule_relocation(inst: Instance, sol: Solution, sched: Schedule | None = None) -> dict:
    """Relocation walking in an earliest-pick schedule and the orders it served."""
    sched = sched or reconstruct(inst, sol)
    picked = set()
    total = 0.0
    served = set()
    for leg in sched.legs:
        unpicked = [inst.release_of_item(x) for x in range(inst.n_items) if x not in picked]
        r = _relocation_part(leg.depart, leg.walk, unpicked)
        o = inst.items[leg.item].order_id
        first_of_order = not any(it.item_id in picked for it in inst.orders[o].items)
        if r > EPS and first_of_order:
            served.add(o)
        total += r
        picked.add(leg.item)
    mk = sched.makespan
    total = float(total)
    return {"time": total, "share": total / mk if mk > 0 else 0.0,
            "orders_with_prior_relocation": len(served)}


def count_interventions(trace) -> int:
    """Orders assigned to a batch after the batch left its start position."""
    return sum(1 for b in trace.batches for o, t in b["assigned"].items() if t > b["start"] + EPS)


def cios_interventions(inst: Instance, sol: Solution, sched: Schedule | None = None) -> int:
    """Orders released after their batch's latest possible depot departure."""
    sched = sched or reconstruct(inst, sol)
    T = inst.time_matrix()
    depot = inst.n_items
    out = 0
    for b, (orders, seq) in enumerate(zip(sol.batches, sol.item_sequence)):
        first = seq[0]
        depart = max(sched.batch_start[b],
                     sched.completion[first] - inst.pick_time - T[depot, first])
        out += sum(1 for o in orders if inst.orders[o].release > depart + EPS)
    return out


def relocation_stats(trace) -> dict:
    """Relocation time of a trace and the orders picked in the batch right after it."""
    total = 0.0
    served = set()
    ends = []
    for ev in trace.events:
        if ev["kind"] == "relocate":
            total += ev["duration"]
            ends.append(ev["t"] + ev["duration"])
    for end in ends:
        after = [b for b in trace.batches if b["start"] >= end - EPS]
        if after:
            served.update(min(after, key=lambda b: b["start"])["orders"])
    mk = trace.makespan
    return {"time": total, "share": total / mk if mk > 0 else 0.0,
            "orders_with_prior_relocation": len(served)}


def misplaced_waiting(inst: Instance, trace) -> int:
    """Orders held back longer than it takes to pick them alone."""
    return sum(1 for j, w in enumerate(trace.hold) if w > 0 and w > chi(inst, j))


def trace_time_accounting(trace) -> dict:
    """Trace time by activity; the parts add up to the makespan."""
    acc = {"walk": 0.0, "pick": 0.0, "wait": 0.0, "idle": 0.0, "relocation": 0.0}
    for ev in trace.events:
        k = ev["kind"]
        if k in ("walk", "return_depot"):
            acc["walk"] += ev["duration"]
        elif k == "pick":
            acc["pick"] += ev["duration"]
        elif k == "wait":
            acc["idle" if ev.get("reason") == "vtw" else "wait"] += ev["duration"]
        elif k == "idle":
            acc["idle"] += ev["duration"]
        elif k == "relocate":
            acc["relocation"] += ev["duration"]
    acc["total"] = sum(acc.values())
    acc["makespan"] = trace.makespan
    return acc


def batch_savings_profile(inst: Instance, sol: Solution, rng_seed: int = 0,
                          max_pairs: int = 200) -> dict:
    """Savings of the solution's two-order batches against random order pairs."""
    pairs = list(itertools.combinations(range(inst.n_orders), 2))
    if len(pairs) < 2:
        raise ValueError("need at least two order pairs for a random baseline")
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(rng_seed)
        pick = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[i] for i in sorted(pick)]
    cap = max(inst.capacity, 2)
    probe = inst.replace(capacity=cap)
    base = [savings(probe, p) for p in pairs]
    median = float(np.median(base))
    own = [savings(probe, b) for b in sol.batches if len(b) == 2]
    return {
        "mean_savings": float(np.mean(own)) if own else math.nan,
        "random_mean": float(np.mean(base)),
        "random_median": median,
        "share_above_median": (sum(1 for p in own if p > median) / len(own)) if own else math.nan,
        "n_batches": len(own),
    }


def write_rows(path, header, rows) -> None:
    """CSV with a header row, written atomically."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    os.replace(tmp, path)


WAIT_HEADER = ("instance", "idle_total", "b_ext_total", "b_fit_total", "idle_count",
               "b_ext_count", "b_fit_count", "idle_p80", "b_ext_p80", "b_fit_p80",
               "relocation_total", "makespan")


def wait_row(name: str, rep: WaitReport) -> list:
    return [name, rep.idle_total, rep.b_ext_total, rep.b_fit_total, rep.count(IDLE),
            rep.count(B_EXT), rep.count(B_FIT), rep.percentile80(IDLE), rep.percentile80(B_EXT),
            rep.percentile80(B_FIT), rep.relocation_total, rep.makespan]

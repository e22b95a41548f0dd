"""Solutions, earliest-pick schedules and objective evaluation."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import kernels
from .instance import Instance

CHI_MAX_ITEMS = 15


class InvalidSolution(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class Solution:
    """Ordered batches of order ids plus the pick sequence of each batch."""

    batches: tuple
    item_sequence: tuple

    @staticmethod
    def of(batches: Iterable[Iterable[int]], item_sequence: Iterable[Iterable[int]]) -> "Solution":
        return Solution(tuple(tuple(int(o) for o in b) for b in batches),
                        tuple(tuple(int(s) for s in seq) for seq in item_sequence))

    @property
    def pi(self) -> list:
        return [s for seq in self.item_sequence for s in seq]

    def batch_of_order(self) -> dict:
        return {o: b for b, orders in enumerate(self.batches) for o in orders}

    def to_dict(self) -> dict:
        return {"batches": [{"orders": list(b), "item_order": list(seq)}
                            for b, seq in zip(self.batches, self.item_sequence)]}

    @staticmethod
    def from_dict(doc) -> "Solution":
        try:
            return Solution.of([b["orders"] for b in doc["batches"]],
                               [b["item_order"] for b in doc["batches"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed solution document: {exc}") from None


def save_solution(sol: Solution, path) -> None:
    with open(path, "w") as fh:
        json.dump(sol.to_dict(), fh, indent=1)
        fh.write("\n")


def load_solution(path) -> Solution:
    with open(path) as fh:
        return Solution.from_dict(json.load(fh))


@dataclass(frozen=True)
class Leg:
    item: int
    batch: int
    depart: float  # time the picker leaves the previous node
    walk: float  # walking time of the leg (through the depot between batches)
    wait: float  # time spent at the item before its release
    pick: float
    via_depot: bool

    @property
    def completion(self) -> float:
        return self.depart + self.walk + self.wait + self.pick


@dataclass(frozen=True)
class Schedule:
    completion: tuple  # per item id
    order_completion: tuple  # per order id
    legs: tuple  # in pick order
    batch_start: tuple  # depot departure of each batch
    batch_return: tuple  # depot arrival of each batch
    return_walk: tuple  # walking time from the last pick of each batch to the depot

    @property
    def makespan(self) -> float:
        return self.batch_return[-1] if self.batch_return else 0.0

    @property
    def total_wait(self) -> float:
        return sum(leg.wait for leg in self.legs)

    @property
    def total_walk(self) -> float:
        return sum(leg.walk for leg in self.legs) + sum(self.return_walk)


def validate(inst: Instance, sol: Solution) -> list:
    """List of violations; empty when the solution is feasible."""
    out = []
    seen = {}
    for b, orders in enumerate(sol.batches):
        if not orders:
            out.append(f"batch {b} is empty")
        if len(orders) > inst.capacity:
            out.append(f"capacity exceeded in batch {b} ({len(orders)} > {inst.capacity})")
        for o in orders:
            if not 0 <= o < inst.n_orders:
                out.append(f"unknown order {o} in batch {b}")
            elif o in seen:
                out.append(f"partition violated: order {o} in batches {seen[o]} and {b}")
            else:
                seen[o] = b
    missing = [o for o in range(inst.n_orders) if o not in seen]
    if missing:
        out.append(f"partition violated: orders {missing} not assigned")
    if len(sol.item_sequence) != len(sol.batches):
        out.append("item_sequence must have one permutation per batch")
        return out
    for b, (orders, seq) in enumerate(zip(sol.batches, sol.item_sequence)):
        want = sorted(it.item_id for o in orders if 0 <= o < inst.n_orders
                      for it in inst.orders[o].items)
        if sorted(seq) != want:
            out.append(f"item order of batch {b} does not cover exactly its orders' items")
    return out


def reconstruct(inst: Instance, sol: Solution, check: bool = True) -> Schedule:
    """Earliest-pick schedule of a solution (picker starts at the depot at time 0)."""
    if check:
        bad = validate(inst, sol)
        if bad:
            raise InvalidSolution(bad)
    T = inst.time_matrix()
    depot = inst.n_items
    tp = inst.pick_time
    comp = [0.0] * inst.n_items
    legs = []
    starts = []
    returns = []
    back = []
    t = 0.0
    for b, seq in enumerate(sol.item_sequence):
        starts.append(t)
        prev = depot
        for i, s in enumerate(seq):
            walk = T[prev, s]
            arrive = t + walk
            r = inst.release_of_item(s)
            wait = r - arrive if r > arrive else 0.0
            legs.append(Leg(s, b, t, float(walk), float(wait), tp, i == 0 and b > 0))
            t = float(arrive + wait + tp)
            comp[s] = t
            prev = s
        back.append(float(T[prev, depot]))
        t = float(t + T[prev, depot])
        returns.append(float(t))
    ocomp = [0.0] * inst.n_orders
    for b, orders in enumerate(sol.batches):
        for o in orders:
            ocomp[o] = returns[b]
    return Schedule(tuple(comp), tuple(ocomp), tuple(legs), tuple(starts), tuple(returns),
                    tuple(back))


def makespan(inst: Instance, sched: Schedule) -> float:
    T = inst.time_matrix()
    depot = inst.n_items
    return float(max(sched.completion[s] + T[s, depot] for s in range(inst.n_items)))


def order_completions(inst: Instance, sched: Schedule, sol: Solution) -> list:
    T = inst.time_matrix()
    depot = inst.n_items
    out = [0.0] * inst.n_orders
    for orders, seq in zip(sol.batches, sol.item_sequence):
        done = float(max(sched.completion[s] + T[s, depot] for s in seq))
        for o in orders:
            out[o] = done
    return out


def completion_sum(inst: Instance, sched: Schedule, sol: Solution) -> float:
    return sum(order_completions(inst, sched, sol))


def avg_turnover(inst: Instance, sched: Schedule, sol: Solution) -> float:
    total = completion_sum(inst, sched, sol)
    return (total - sum(o.release for o in inst.orders)) / inst.n_orders


def evaluate(inst: Instance, sol: Solution, objective: str) -> float:
    sched = reconstruct(inst, sol)
    if objective == "makespan":
        return sched.makespan
    if objective == "turnover":
        return avg_turnover(inst, sched, sol)
    raise ValueError(f"unknown objective {objective!r}")


def tour_time(inst: Instance, items: Sequence[int]) -> float:
    """Shortest depot-to-depot time through ``items`` ignoring releases, picks included."""
    items = list(items)
    if len(items) > CHI_MAX_ITEMS:
        raise ValueError(f"exact tour limited to {CHI_MAX_ITEMS} items, got {len(items)}")
    T = inst.time_matrix()
    depot = inst.n_items
    fin, _ = kernels.held_karp(T, depot, depot, items, [0.0] * len(items), inst.pick_time, 0.0)
    return float(fin)


def chi(inst: Instance, order_id: int) -> float:
    """Minimum time to pick one order in its own batch (walking plus picking)."""
    return tour_time(inst, [it.item_id for it in inst.orders[order_id].items])


def savings(inst: Instance, batch: Sequence[int]) -> float:
    """Relative time saved by picking ``batch`` in one tour instead of separately."""
    batch = list(batch)
    if len(batch) > inst.capacity:
        raise ValueError("batch exceeds capacity")
    joint = tour_time(inst, [it.item_id for o in batch for it in inst.orders[o].items])
    alone = sum(chi(inst, o) for o in batch)
    return (alone - joint) / joint


def write_schedule_csv(inst: Instance, sol: Solution, sched: Schedule, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["item", "order", "batch", "completion", "wait", "walk"])
        for leg in sched.legs:
            w.writerow([leg.item, inst.items[leg.item].order_id, leg.batch,
                        repr(sched.completion[leg.item]), repr(leg.wait), repr(leg.walk)])
    os.replace(tmp, path)


def replay_delayed(inst: Instance, sol: Solution, delay: float) -> tuple:
    """Start ``delay`` late and never wait again.

    Returns ``(makespan, release_violations)``; the run is valid when the
    violation list is empty.
    """
    T = inst.time_matrix()
    depot = inst.n_items
    t = float(delay)
    bad = []
    for seq in sol.item_sequence:
        prev = depot
        for s in seq:
            t += T[prev, s]
            if t < inst.release_of_item(s) - kernels.EPS:
                bad.append(s)
            t += inst.pick_time
            prev = s
        t += T[prev, depot]
    return t, bad


def replay_no_relocation(inst: Instance, sol: Solution) -> float:
    """Makespan when the picker never walks toward an unreleased item.

    The picker leaves for the next item only once it is released, waiting
    where it stands; between batches it first returns to the depot.
    """
    T = inst.time_matrix()
    depot = inst.n_items
    t = 0.0
    for seq in sol.item_sequence:
        prev = depot
        for s in seq:
            t = max(t, inst.release_of_item(s)) + T[prev, s] + inst.pick_time
            prev = s
        t += T[prev, depot]
    return t

"""Exact forward dynamic program for batching, sequencing and routing with
release times (makespan objective), with release-time dominance rules.

A state is (last picked item, orders in the open batch, unpicked items of
those orders, pending orders). States at depth k have picked k items; the DP
walks depth by depth and keeps the smallest clock per state.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _pykernels, kernels
from .instance import Instance
from .schedule import Solution, reconstruct
from .warehouse import Location

NO_ITEM = -1  # ``last`` of a state in which nothing was picked yet
DEFAULT_STATE_BUDGET = 5_000_000
BUDGET_ENV = "ORDERPICK_MAX_STATES"


class MemoryBudgetExceeded(RuntimeError):
    def __init__(self, stage, count):
        super().__init__(f"state budget exceeded at stage {stage}: {count} states stored")
        self.stage = stage
        self.count = count


def state_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_STATE_BUDGET


@dataclass(frozen=True)
class State:
    last: int
    open_count: int
    batch_items: frozenset
    pending: frozenset

    @property
    def is_batch_completion(self) -> bool:
        return self.open_count == 0 and not self.batch_items


@dataclass(frozen=True)
class Transition:
    next_item: int
    action: str  # open, open_close, extend, extend_close, continue, close
    order: int | None
    row: int  # row of the transition table (1..13)

    @property
    def closes(self) -> bool:
        return self.action in ("open_close", "extend_close", "close")


@dataclass(frozen=True)
class Start:
    """Where a (re)solve begins: picker position, clock and open batch."""

    position: Location | None = None  # None = depot
    clock: float = 0.0
    open_orders: tuple = ()  # orders already commenced in the open batch
    batch_items: tuple = ()  # their unpicked items
    pending: tuple | None = None  # orders not yet started; None = all


@dataclass
class DPResult:
    value: float  # makespan, or the forward completion label for turnover
    clock: float
    solution: Solution | None
    path: list
    stats: dict
    arena: tuple | None = field(default=None, repr=False)
    model: "DPModel" = field(default=None, repr=False)

    def states(self):
        """Stored states with their (value, clock) when the arena was recorded."""
        if self.arena is None:
            raise ValueError("solve with record=True to keep the state arena")
        k_last, k_m, k_bm, k_pm, val, clk, _ = self.arena
        out = {}
        for i in range(len(k_last)):
            st = self.model.to_state(k_last[i], k_m[i], k_bm[i], k_pm[i])
            out[st] = (val[i], clk[i])
        return out


class DPModel:
    """Arrays fed to the kernels for one instance and start."""

    def __init__(self, inst: Instance, start: Start | None = None):
        self.inst = inst
        start = start or Start()
        n = inst.n_items
        self.n = n
        T = inst.time_matrix()
        full = np.zeros((n + 2, n + 2))
        full[: n + 1, : n + 1] = T
        pos = start.position
        if pos is None or pos == inst.depot:
            full[n + 1, :] = full[n, :]
            full[:, n + 1] = full[:, n]
            full[n + 1, n + 1] = 0.0
            self.start_at_depot = True
        else:
            locs = [it.location for it in inst.items] + [inst.depot]
            for i, loc in enumerate(locs):
                full[n + 1, i] = full[i, n + 1] = inst.dist(pos, loc) / inst.speed
            self.start_at_depot = False
        self.T = full
        self.item_release = [inst.release_of_item(s) for s in range(n)]
        self.order_items = [sum(1 << it.item_id for it in o.items) for o in inst.orders]
        self.order_release = [o.release for o in inst.orders]
        self.order_size = [len(o.items) for o in inst.orders]
        self.tp = inst.pick_time
        self.cap = inst.capacity
        self.lw = inst.distances.max_distance_bound() / inst.speed
        self.d3 = [(inst.single_order_walk_bound(j) + inst.distances.max_distance_bound())
                   / inst.speed + len(o.items) * inst.pick_time
                   for j, o in enumerate(inst.orders)]
        self.start = start
        self.start_m = len(start.open_orders)
        self.start_bm = sum(1 << s for s in start.batch_items)
        pend = range(inst.n_orders) if start.pending is None else start.pending
        self.start_pm = sum(1 << j for j in pend)
        self.start_clock = float(start.clock)

    def to_state(self, last, m, bm, pm) -> State:
        return State(NO_ITEM if last == self.n + 1 else last, m,
                     frozenset(i for i in range(self.n) if bm >> i & 1),
                     frozenset(j for j in range(len(self.order_items)) if pm >> j & 1))

    def masks(self, st: State):
        last = self.n + 1 if st.last == NO_ITEM else st.last
        return (last, st.open_count, sum(1 << s for s in st.batch_items),
                sum(1 << j for j in st.pending))

    def position(self, last: int, m: int):
        if last == self.n + 1:
            return self.n + 1, self.start_at_depot
        if m == 0:
            return self.n, True
        return last, False

    def run(self, objective: int, dominance: bool, fifo: bool, budget: int | None,
            record: bool) -> dict:
        try:
            return kernels.dp_solve(
                self.T, self.item_release, self.order_items, self.order_release,
                self.order_size, self.tp, self.cap, objective, dominance, fifo, self.lw,
                self.d3, self.n + 1, self.start_m, self.start_bm, self.start_pm,
                self.start_clock, self.start_at_depot,
                state_budget() if budget is None else budget, record)
        except _pykernels.BudgetExceeded as exc:
            raise MemoryBudgetExceeded(exc.stage, exc.count) from None


def initial_state(inst: Instance) -> State:
    return State(NO_ITEM, 0, frozenset(), frozenset(range(inst.n_orders)))


def _row(m, nb, cap, from_batch, closes):
    if from_batch:
        if m == cap:
            return 13 if nb == 1 else 9
        if nb > 1:
            return 8
        return 12 if closes else 11
    if m == 0:
        return 2 if closes else 1
    if nb == 0:
        if m < cap - 1:
            return 4 if closes else 3
        return 6 if closes else 5
    return 10 if nb == 1 else 7


def expand(inst: Instance, state: State, value: float, dominance: bool = True,
           fifo_order_start: bool = False, model: DPModel | None = None) -> list:
    """Applicable transitions of ``state`` at clock ``value``.

    Batch-item moves come first, then pending orders in release order. Moves
    that would leave an open batch with no item to pick and no pending order
    to add are omitted, as they cannot reach the terminal state. With
    ``dominance`` the scan over pending orders stops at the first order whose
    release time reaches the applicable threshold.
    """
    model = model or DPModel(inst)
    last, m, bm, pm = model.masks(state)
    pos, at_depot = model.position(last, m)
    succ = _pykernels.expand_state(last, m, bm, pm, value, pos, at_depot, model.n, model.cap,
                                   model.T, model.item_release, model.order_items,
                                   model.order_release, model.order_size, model.tp,
                                   dominance, fifo_order_start, model.lw, model.d3)
    nb = bin(bm).count("1")
    out = []
    for s, nm, nbm, npm, closes in succ:
        from_batch = bool(bm >> s & 1)
        row = _row(m, nb, model.cap, from_batch, closes)
        if from_batch:
            action = "close" if closes else "continue"
            order = None
        else:
            order = inst.items[s].order_id
            if m == 0:
                action = "open_close" if closes else "open"
            else:
                action = "extend_close" if closes else "extend"
        out.append((Transition(s, action, order, row), model.to_state(s, nm, nbm, npm)))
    return out


def transition_cost(inst: Instance, state: State, value: float, transition: Transition,
                    model: DPModel | None = None) -> float:
    """Walk (or wait for the release), pick, and return to the depot when closing."""
    model = model or DPModel(inst)
    last, m, _, _ = model.masks(state)
    pos, _ = model.position(last, m)
    s = transition.next_item
    g = max(model.T[pos, s], model.item_release[s] - value) + model.tp
    if transition.closes:
        g += model.T[s, model.n]
    return float(g)


def decode_path(inst: Instance, path: Iterable, open_orders: Iterable[int] = ()) -> Solution:
    """Batches and pick sequences of a DP path ``[(item, closes), ...]``."""
    batches = []
    seqs = []
    cur_orders = list(open_orders)
    cur_items = []
    for s, closes in path:
        o = inst.items[s].order_id
        if o not in cur_orders:
            cur_orders.append(o)
        cur_items.append(s)
        if closes:
            batches.append(cur_orders)
            seqs.append(cur_items)
            cur_orders, cur_items = [], []
    if cur_items:
        batches.append(cur_orders)
        seqs.append(cur_items)
    return Solution.of(batches, seqs)


def encode_solution(inst: Instance, sol: Solution) -> list:
    """State sequence visited by a solution, from the initial state on."""
    st = initial_state(inst)
    out = [st]
    for orders, seq in zip(sol.batches, sol.item_sequence):
        m = 0
        open_items = set()
        pending = set(st.pending)
        for i, s in enumerate(seq):
            o = inst.items[s].order_id
            if o in pending:
                pending.discard(o)
                m += 1
                open_items |= {it.item_id for it in inst.orders[o].items}
            open_items.discard(s)
            if i == len(seq) - 1:
                st = State(s, 0, frozenset(), frozenset(pending))
            else:
                st = State(s, m, frozenset(open_items), frozenset(pending))
            out.append(st)
    return out


def stats_of(res: dict) -> dict:
    return {k: res[k] for k in ("states_expanded", "transitions", "peak_states", "stored_states")}


def solve_makespan(inst: Instance, dominance: bool = True, fifo_order_start: bool = False,
                   budget: int | None = None, record: bool = False,
                   start: Start | None = None) -> DPResult:
    """Minimum makespan and an optimal solution."""
    model = DPModel(inst, start)
    res = model.run(kernels.MAKESPAN, dominance, fifo_order_start, budget, record)
    if not res["feasible"]:
        raise RuntimeError("no feasible completion from the given start")
    sol = decode_path(inst, res["path"], model.start.open_orders)
    return DPResult(res["value"], res["clock"], sol, res["path"], stats_of(res),
                    res.get("arena"), model)


def write_trace(result: DPResult, path, with_label: bool = False) -> None:
    """Expanded states as JSON lines (needs ``record=True``)."""
    k_last, k_m, k_bm, k_pm, val, clk, parent = result.arena
    model = result.model
    with open(path, "w") as fh:
        for i in range(len(k_last)):
            st = model.to_state(k_last[i], k_m[i], k_bm[i], k_pm[i])
            row = {"id": i, "last": st.last, "open_count": st.open_count,
                   "batch_items": sorted(st.batch_items), "pending": sorted(st.pending),
                   "omega": clk[i], "parent": parent[i]}
            if with_label:
                row["comp_plus"] = val[i]
            fh.write(json.dumps(row) + "\n")


def check_solution_value(inst: Instance, result: DPResult) -> float:
    """Makespan of the decoded solution's own earliest-pick schedule."""
    return reconstruct(inst, result.solution).makespan

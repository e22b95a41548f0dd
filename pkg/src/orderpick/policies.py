"""Event-driven simulation of online picking policies.

Orders become known at their release times. The simulated picker reacts at
order arrivals (while it is idle or relocating), at pick completions and at
depot returns. Arrivals that occur while the picker walks or picks are seen
at the next pick completion or depot return.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

from . import kernels
from .dp_core import Start, solve_makespan
from .dp_turnover import solve_turnover
from .instance import Instance
from .routing import optimal_route, s_shape_route
from .schedule import Solution, savings, validate
from .warehouse import DerivedDistances, point_along

ROUTING = ("s_shape", "optimal")
BATCHING = ("fifo", "optimal")
WAITING = ("none", "vtw")
SELECTION = ("fifo", "largest_then_savings")
RELOCATION = ("none", "center")


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    routing: str = "optimal"
    batching: str = "optimal"
    waiting: str = "none"
    vtw_orders: int = 2  # queue length that ends a hold when waiting = "vtw"
    intervention: bool = True
    batch_selection: str = "fifo"
    relocation: str = "none"
    name: str = ""

    def __post_init__(self):
        for value, allowed, what in ((self.routing, ROUTING, "routing"),
                                     (self.batching, BATCHING, "batching"),
                                     (self.waiting, WAITING, "waiting"),
                                     (self.batch_selection, SELECTION, "batch_selection"),
                                     (self.relocation, RELOCATION, "relocation")):
            if value not in allowed:
                raise PolicyError(f"{what} must be one of {allowed}, got {value!r}")
        if self.vtw_orders < 1:
            raise PolicyError("vtw_orders must be >= 1")
        if self.intervention and self.routing == "s_shape":
            raise PolicyError("intervention re-routes the open batch and needs optimal routing")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        wait = f"vtw{self.vtw_orders}" if self.waiting == "vtw" else "nowait"
        parts = [self.routing, self.batching, wait, "interv" if self.intervention else "frozen"]
        if self.batch_selection != "fifo":
            parts.append(self.batch_selection)
        if self.relocation != "none":
            parts.append(f"reloc-{self.relocation}")
        return "/".join(parts)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(doc: dict) -> "PolicyConfig":
        return PolicyConfig(**doc)


VTWB = PolicyConfig("s_shape", "fifo", "vtw", 2, False, "fifo", "none", "VTWB")
REOPT = PolicyConfig("optimal", "optimal", "none", 2, True, "fifo", "none", "Reopt")
REOPT_STAR = replace(REOPT, batch_selection="largest_then_savings", relocation="center",
                     name="Reopt*")
FIFO = PolicyConfig("optimal", "fifo", "none", 2, False, "fifo", "none", "FIFO")
PRESETS = {"VTWB": VTWB, "Reopt": REOPT, "Reopt*": REOPT_STAR, "FIFO": FIFO}

# Each step switches on one more feature, ending with the enhanced policy.
LADDER = (
    VTWB,
    replace(VTWB, routing="optimal", name="+opt-routing"),
    replace(VTWB, routing="optimal", batching="optimal", name="+opt-batching"),
    replace(VTWB, routing="optimal", batching="optimal", intervention=True,
            name="+intervention"),
    replace(REOPT, name="+no-wait"),
    REOPT_STAR,
)


def resolve_config(spec) -> PolicyConfig:
    """Preset name or field dictionary."""
    if isinstance(spec, PolicyConfig):
        return spec
    if isinstance(spec, str):
        if spec not in PRESETS:
            ladder = {c.name: c for c in LADDER}
            if spec in ladder:
                return ladder[spec]
            raise PolicyError(f"unknown policy preset {spec!r}")
        return PRESETS[spec]
    return PolicyConfig.from_dict(dict(spec))


@dataclass
class PolicyTrace:
    events: list  # dicts with keys t, kind and event specific fields, time ordered
    completion: list  # per order
    batches: list  # dicts: orders, items, start, return, position, assigned
    hold: list  # per order time spent queued while the picker held at the depot
    makespan: float
    avg_turnover: float

    def objective(self, kind: str) -> float:
        if kind == "makespan":
            return self.makespan
        if kind == "turnover":
            return self.avg_turnover
        raise ValueError(f"unknown objective {kind!r}")

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev) + "\n")


def gap(alg_value: float, star_value: float) -> float:
    """Relative excess of a policy value over the complete-information value."""
    if not star_value > 0:
        raise ValueError("reference value must be positive")
    return (alg_value - star_value) / star_value


class _Simulator:
    def __init__(self, inst: Instance, cfg: PolicyConfig, objective: str, budget=None):
        if objective not in ("makespan", "turnover"):
            raise ValueError(f"unknown objective {objective!r}")
        if cfg.routing == "s_shape" and not isinstance(inst.distances, DerivedDistances):
            raise PolicyError("S-shape routing needs a rectangular layout")
        self.inst = inst
        self.cfg = cfg
        self.objective = objective
        self.budget = budget
        self.relocate = (cfg.relocation == "center"
                         and isinstance(inst.distances, DerivedDistances))
        self.t = 0.0
        self.pos = inst.depot
        self.next_order = 0
        self.queue = []
        self.fresh = False  # orders revealed since the last plan
        self.events = []
        self.seq = 0
        self.completion = [math.nan] * inst.n_orders
        self.hold = [0.0] * inst.n_orders
        self.batches = []
        self.active = None

    # ------------------------------------------------------------ helpers
    def log(self, t, kind, **info):
        self.events.append({"t": float(t), "kind": kind, **info, "_seq": self.seq})
        self.seq += 1

    def reveal(self):
        orders = self.inst.orders
        while self.next_order < len(orders) and orders[self.next_order].release <= self.t:
            o = orders[self.next_order]
            self.queue.append(o.order_id)
            self.log(o.release, "arrival", order=o.order_id)
            self.next_order += 1
            self.fresh = True

    def arrivals_left(self) -> bool:
        return self.next_order < self.inst.n_orders

    def items_of(self, orders):
        return [it.item_id for o in orders for it in self.inst.orders[o].items]

    def start_of(self, **kw) -> Start:
        pos = None if self.pos == self.inst.depot else self.pos
        return Start(position=pos, clock=self.t, **kw)

    def route(self, items):
        if self.cfg.routing == "s_shape":
            r = s_shape_route(self.inst, items, self.pos, self.t)
        else:
            r = optimal_route(self.inst, items, self.pos, self.t)
        return list(r.visit_order)

    def plan(self, start: Start):
        """Offline plan over the known orders: (value, solution)."""
        if self.objective == "makespan":
            res = solve_makespan(self.inst, start=start, budget=self.budget)
            return res.value, res.solution
        res = solve_turnover(self.inst, start=start, budget=self.budget)
        return res.label, res.solution

    # ------------------------------------------------------------- batches
    def choose_batch(self):
        cap = self.inst.capacity
        if self.cfg.batching == "fifo":
            return list(self.queue[:cap])
        _, sol = self.plan(self.start_of(pending=tuple(self.queue)))
        batches = [list(b) for b in sol.batches]
        if self.objective == "turnover":
            return batches[0]
        rel = self.inst.orders
        if self.cfg.batch_selection == "fifo":
            first = min(self.queue)
            return next(b for b in batches if first in b)

        def key(b):
            psi = savings(self.inst, b) if len(b) > 1 else 0.0
            return (-len(b), -psi, min(rel[o].release for o in b))

        return min(batches, key=key)

    def start_batch(self):
        orders = self.choose_batch()
        for o in orders:
            self.queue.remove(o)
        items = self.route(self.items_of(orders))
        self.fresh = False
        self.active = {"orders": list(orders), "route": items, "picked": [],
                       "start": self.t, "position": asdict(self.pos),
                       "assigned": {o: self.t for o in orders}}
        self.log(self.t, "depart", batch=len(self.batches), orders=list(orders))

    def step(self):
        b = self.active
        inst = self.inst
        if b["route"]:
            s = b["route"].pop(0)
            loc = inst.items[s].location
            walk = inst.dist(self.pos, loc) / inst.speed
            arrive = self.t + walk
            wait = max(0.0, inst.release_of_item(s) - arrive)
            self.log(self.t, "walk", item=s, duration=walk)
            if wait > 0:
                self.log(arrive, "wait", item=s, duration=wait, reason="release")
            self.log(arrive + wait, "pick", item=s, order=inst.items[s].order_id,
                     duration=inst.pick_time)
            self.t = arrive + wait + inst.pick_time
            self.pos = loc
            b["picked"].append(s)
            self.reveal()
            if self.cfg.intervention and self.fresh and self.queue:
                self.intervene()
            return
        walk = inst.dist(self.pos, inst.depot) / inst.speed
        self.log(self.t, "return_depot", batch=len(self.batches), duration=walk)
        self.t += walk
        self.pos = inst.depot
        for o in b["orders"]:
            self.completion[o] = self.t
            self.log(self.t, "complete", order=o)
        self.batches.append({"orders": b["orders"], "items": b["picked"], "start": b["start"],
                             "return": self.t, "position": b["position"],
                             "assigned": b["assigned"]})
        self.active = None
        self.reveal()

    def intervene(self):
        """Re-plan the open batch after new arrivals."""
        b = self.active
        inst = self.inst
        picked = set(b["picked"])
        commenced = [o for o in b["orders"]
                     if any(it.item_id in picked for it in inst.orders[o].items)]
        waiting = [o for o in b["orders"] if o not in commenced]
        self.fresh = False
        if self.cfg.batching == "fifo":
            room = inst.capacity - len(b["orders"])
            added = self.queue[:max(0, room)]
            if not added:
                return
            for o in added:
                self.queue.remove(o)
                b["orders"].append(o)
                b["assigned"][o] = self.t
                self.log(self.t, "intervene", order=o, batch=len(self.batches))
            left = [s for s in self.items_of(b["orders"]) if s not in picked]
            b["route"] = self.route(left)
            return
        left = [s for s in self.items_of(commenced) if s not in picked]
        pending = tuple(sorted(self.queue + waiting))
        start = self.start_of(open_orders=tuple(commenced), batch_items=tuple(left),
                              pending=pending)
        extend = None
        if len(commenced) < inst.capacity or left:
            try:
                extend = self.plan(start)
            except RuntimeError:
                extend = None
        if not left:
            # the open batch is done: compare closing it now with extending it
            back = inst.dist(self.pos, inst.depot) / inst.speed
            home = Start(clock=self.t + back, pending=pending)
            val, _ = self.plan(home)
            if self.objective == "turnover":
                val += len(commenced) * (self.t + back)
            if extend is None or not extend[0] < val - kernels.EPS:
                self.shed(waiting)
                b["route"] = []
                return
        _, sol = extend
        first = sol.item_sequence[0]
        keep = [o for o in sol.batches[0]]
        route = [s for s in first if s not in picked]
        self.shed([o for o in waiting if o not in keep])
        for o in keep:
            if o not in b["orders"]:
                self.queue.remove(o)
                b["orders"].append(o)
                b["assigned"][o] = self.t
                self.log(self.t, "intervene", order=o, batch=len(self.batches))
        b["route"] = route

    def shed(self, orders):
        b = self.active
        for o in orders:
            if o in b["orders"]:
                b["orders"].remove(o)
                b["assigned"].pop(o, None)
                self.queue.append(o)
                self.log(self.t, "shed", order=o, batch=len(self.batches))
        self.queue.sort()

    # ----------------------------------------------------------- idle time
    def idle_until_arrival(self):
        ta = self.inst.orders[self.next_order].release
        if self.relocate:
            lay = self.inst.distances.layout
            target = lay.center()
            d = self.inst.dist(self.pos, target)
            if d > 0:
                need = d / self.inst.speed
                if self.t + need <= ta:
                    self.log(self.t, "relocate", duration=need, aborted=False)
                    self.t += need
                    self.pos = target
                else:
                    self.log(self.t, "relocate", duration=ta - self.t, aborted=True)
                    self.pos = point_along(lay, self.pos, target, (ta - self.t) * self.inst.speed)
                    self.t = ta
        if ta > self.t:
            self.log(self.t, "idle", duration=ta - self.t)
            self.t = ta
        self.reveal()

    def hold_at_depot(self):
        ta = self.inst.orders[self.next_order].release
        self.log(self.t, "wait", duration=ta - self.t, reason="vtw", orders=list(self.queue))
        for o in self.queue:
            self.hold[o] += ta - self.t
        self.t = ta
        self.reveal()

    # ----------------------------------------------------------------- run
    def run(self) -> tuple:
        self.reveal()
        n = self.inst.n_orders
        while sum(1 for c in self.completion if not math.isnan(c)) < n:
            if self.active is not None:
                self.step()
            elif not self.queue:
                self.idle_until_arrival()
            elif (self.cfg.waiting == "vtw" and len(self.queue) < self.cfg.vtw_orders
                  and self.arrivals_left()):
                self.hold_at_depot()
            else:
                self.start_batch()
        self.events.sort(key=lambda e: (e["t"], e["_seq"]))
        for e in self.events:
            del e["_seq"]
        sol = Solution.of([b["orders"] for b in self.batches], [b["items"] for b in self.batches])
        bad = validate(self.inst, sol)
        if bad:
            raise RuntimeError("simulation produced an invalid solution: " + "; ".join(bad))
        mk = max(self.completion)
        turn = sum(c - o.release for c, o in zip(self.completion, self.inst.orders)) / n
        trace = PolicyTrace(self.events, list(self.completion), self.batches, self.hold, mk, turn)
        return trace, sol


def simulate(inst: Instance, config, objective: str = "makespan",
             budget: int | None = None) -> tuple:
    """Run one online policy; returns ``(PolicyTrace, Solution)``."""
    return _Simulator(inst, resolve_config(config), objective, budget).run()


def replay(inst: Instance, trace: PolicyTrace) -> dict:
    """Objectives recomputed from the event log alone."""
    done = {}
    last = -math.inf
    for ev in trace.events:
        if ev["t"] < last - kernels.EPS:
            raise ValueError("events are not time ordered")
        last = ev["t"]
        if ev["kind"] == "complete":
            if ev["order"] in done:
                raise ValueError(f"order {ev['order']} completed twice")
            done[ev["order"]] = ev["t"]
    if sorted(done) != list(range(inst.n_orders)):
        raise ValueError("not every order was completed")
    mk = max(done.values())
    turn = sum(done[o.order_id] - o.release for o in inst.orders) / inst.n_orders
    return {"makespan": mk, "turnover": turn}


def reference_value(inst: Instance, objective: str, budget: int | None = None) -> float:
    """Complete-information value used as the gap reference."""
    if objective == "makespan":
        return solve_makespan(inst, budget=budget).value
    return solve_turnover(inst, budget=budget).avg_turnover


__all__ = ["PolicyConfig", "PolicyTrace", "PolicyError", "VTWB", "REOPT", "REOPT_STAR", "FIFO",
           "LADDER", "PRESETS", "simulate", "replay", "gap", "reference_value", "resolve_config"]

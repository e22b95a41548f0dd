"""Batch tours: exact subset-DP routing with release times, and S-shape."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import kernels
from .instance import Instance
from .warehouse import DerivedDistances, Location

MAX_ROUTE_ITEMS = 15


@dataclass(frozen=True)
class Route:
    start: Location
    visit_order: tuple
    legs: tuple  # walking distance before each pick, then back to the depot
    finish: float  # depot arrival when leaving ``start`` at the planning clock
    travel: float  # walking time of the whole route

    @property
    def end(self) -> str:
        return "depot"


def _walk_times(inst, start, order):
    locs = [start] + [inst.items[s].location for s in order] + [inst.depot]
    return tuple(inst.dist(a, b) for a, b in zip(locs, locs[1:]))


def execute_route(inst: Instance, order: Sequence[int], legs: Sequence[float], clock: float) -> float:
    """Depot arrival time of a route started at ``clock`` (waits for releases)."""
    t = clock
    for s, d in zip(order, legs):
        t = max(t + d / inst.speed, inst.release_of_item(s)) + inst.pick_time
    return t + legs[-1] / inst.speed


def optimal_route(inst: Instance, items: Sequence[int], start: Location | None = None,
                  clock: float = 0.0) -> Route:
    """Visit order minimizing the depot return time from ``start`` at ``clock``."""
    items = list(items)
    if len(items) > MAX_ROUTE_ITEMS:
        raise ValueError(f"exact routing limited to {MAX_ROUTE_ITEMS} items, got {len(items)}")
    start = inst.depot if start is None else start
    locs = [inst.items[s].location for s in items] + [inst.depot, start]
    m = len(items)
    T = inst.distances.matrix(locs) / inst.speed
    rel = [inst.release_of_item(s) for s in items]
    fin, order = kernels.held_karp(T, m + 1, m, list(range(m)), rel, inst.pick_time, clock)
    visit = tuple(items[i] for i in order)
    legs = _walk_times(inst, start, visit)
    return Route(start, visit, legs, float(fin), sum(legs) / inst.speed)


def s_shape_route(inst: Instance, items: Sequence[int], start: Location | None = None,
                  clock: float = 0.0) -> Route:
    """Per-block serpentine.

    Blocks are served farthest from the depot first (upper block on ties).
    Inside a block, occupied sub-aisles are swept in x order, alternating the
    direction between blocks; every occupied sub-aisle is entered on the
    cross-aisle where the picker stands and traversed completely to the other
    one. The picker then returns to the depot on a shortest path.
    """
    if not isinstance(inst.distances, DerivedDistances):
        raise ValueError("S-shape routing needs a rectangular layout")
    lay = inst.distances.layout
    start = inst.depot if start is None else start
    items = list(items)
    if not items:
        d = inst.dist(start, inst.depot)
        return Route(start, (), (d,), clock + d / inst.speed, d / inst.speed)
    depot_y = lay.cross_y[lay.depot_cross]
    blocks = {}
    for s in items:
        loc = inst.items[s].location
        b = lay.block_of(loc.y)
        blocks.setdefault(b, {}).setdefault(loc.aisle, []).append(s)

    def block_key(b):
        mid = (lay.cross_y[b] + lay.cross_y[b + 1]) / 2
        return (-abs(mid - depot_y), -b)

    order = []
    legs = []
    pos = start  # last waypoint
    pending_walk = 0.0  # walked since the last pick
    for rank, b in enumerate(sorted(blocks, key=block_key)):
        aisles = sorted(blocks[b], reverse=bool(rank % 2))
        lo, hi = b, b + 1
        first = aisles[0]
        d_lo = inst.dist(pos, Location.on_cross(lo, lay.aisle_x[first]))
        d_hi = inst.dist(pos, Location.on_cross(hi, lay.aisle_x[first]))
        side = lo if d_lo < d_hi else hi
        for a in aisles:
            entry = Location.on_cross(side, lay.aisle_x[a])
            pending_walk += inst.dist(pos, entry)
            pos = entry
            up = side == lo
            seq = sorted(blocks[b][a], key=lambda s: (inst.items[s].location.y, s), reverse=not up)
            for s in seq:
                loc = inst.items[s].location
                pending_walk += inst.dist(pos, loc)
                pos = loc
                legs.append(pending_walk)
                order.append(s)
                pending_walk = 0.0
            side = hi if up else lo
            exit_ = Location.on_cross(side, lay.aisle_x[a])
            pending_walk += inst.dist(pos, exit_)
            pos = exit_
    pending_walk += inst.dist(pos, inst.depot)
    legs.append(pending_walk)
    legs = tuple(legs)
    finish = execute_route(inst, order, legs, clock)
    return Route(start, tuple(order), legs, finish, sum(legs) / inst.speed)


def subaisle_entries(inst: Instance, route: Route) -> dict:
    """Number of separate visits to each (aisle, block) sub-aisle along a visit order."""
    lay = inst.distances.layout
    out = {}
    prev = None
    for s in route.visit_order:
        loc = inst.items[s].location
        key = (loc.aisle, lay.block_of(loc.y))
        if key != prev:
            out[key] = out.get(key, 0) + 1
        prev = key
    return out


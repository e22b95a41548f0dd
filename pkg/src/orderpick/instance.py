"""Problem instances: items, orders, picker parameters, generation and JSON I/O."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .warehouse import (AISLE, DEPOT, NODE, DerivedDistances, DistanceProvider,
                        ExplicitDistances, LayoutError, Location, WarehouseLayout,
                        default_layout, metric_close, violates_triangle)

SCHEMA_VERSION = 1
SHIFT_SECONDS = 8 * 3600.0


class InstanceError(ValueError):
    """Base class for instance load/validation failures."""


class MalformedInstance(InstanceError):
    pass


class UnknownSchemaVersion(InstanceError):
    pass


class InvalidInstance(InstanceError):
    pass


@dataclass(frozen=True)
class Item:
    item_id: int
    order_id: int
    location: Location


@dataclass(frozen=True)
class Order:
    order_id: int
    release: float
    items: tuple


@dataclass(frozen=True, eq=False)
class Instance:
    distances: DistanceProvider
    orders: tuple
    speed: float = 1.0
    pick_time: float = 0.0
    capacity: int = 2
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.speed > 0:
            raise InvalidInstance("picker.v must be positive")
        if self.pick_time < 0:
            raise InvalidInstance("picker.t_p must be nonnegative")
        if self.capacity < 1:
            raise InvalidInstance("picker.c must be >= 1")
        if not self.orders:
            raise InvalidInstance("orders: at least one order is required")
        expect = 0
        for j, o in enumerate(self.orders):
            if o.order_id != j:
                raise InvalidInstance(f"orders[{j}].id must equal its position")
            if o.release < 0:
                raise InvalidInstance(f"orders[{j}].release must be nonnegative")
            if not o.items:
                raise InvalidInstance(f"orders[{j}].items must be nonempty")
            if j and o.release < self.orders[j - 1].release:
                raise InvalidInstance("orders not sorted by release time")
            for it in o.items:
                if it.item_id != expect or it.order_id != j:
                    raise InvalidInstance(f"orders[{j}].items: ids must run 0..n-1 in order")
                expect += 1
                try:
                    if isinstance(self.distances, DerivedDistances):
                        self.distances.layout.check_location(it.location)
                    else:
                        self.distances.distance(it.location, it.location)
                except LayoutError as exc:
                    raise InvalidInstance(f"item {it.item_id} location: {exc}") from None

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.distances == other.distances and self.orders == other.orders
                and self.speed == other.speed and self.pick_time == other.pick_time
                and self.capacity == other.capacity)

    __hash__ = object.__hash__

    @property
    def items(self) -> list:
        if "items" not in self._cache:
            self._cache["items"] = [it for o in self.orders for it in o.items]
        return self._cache["items"]

    @property
    def n_orders(self) -> int:
        return len(self.orders)

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def depot(self) -> Location:
        return self.distances.depot

    def release_of_item(self, s: int) -> float:
        return self.orders[self.items[s].order_id].release

    def dist(self, a: Location, b: Location) -> float:
        return self.distances.distance(a, b)

    def node_matrix(self) -> np.ndarray:
        """Distances between items 0..n-1 and the depot at index n."""
        if "node_matrix" not in self._cache:
            locs = [it.location for it in self.items] + [self.depot]
            self._cache["node_matrix"] = self.distances.matrix(locs)
        return self._cache["node_matrix"]

    def time_matrix(self) -> np.ndarray:
        return self.node_matrix() / self.speed

    def aisles_of(self, order_id: int) -> int:
        return len({it.location.aisle for it in self.orders[order_id].items})

    def single_order_walk_bound(self, order_id: int) -> float:
        """Upper bound on the walking distance of a single-order tour."""
        if isinstance(self.distances, DerivedDistances):
            lay = self.distances.layout
            return 2 * lay.L + (self.aisles_of(order_id) + 1) * lay.W
        nm = self.node_matrix()
        n = self.n_items
        return float(sum(2 * nm[n, it.item_id] for it in self.orders[order_id].items))

    def replace(self, orders=None, speed=None, pick_time=None, capacity=None) -> "Instance":
        return Instance(self.distances, tuple(orders) if orders is not None else self.orders,
                        self.speed if speed is None else speed,
                        self.pick_time if pick_time is None else pick_time,
                        self.capacity if capacity is None else capacity)

    def with_releases(self, releases: Sequence[float]) -> "Instance":
        orders = tuple(Order(o.order_id, float(r), o.items) for o, r in zip(self.orders, releases))
        return self.replace(orders=orders)

    def with_zero_releases(self) -> "Instance":
        return self.with_releases([0.0] * self.n_orders)


def build_instance(distances: DistanceProvider, orders: Sequence[tuple], speed=1.0,
                   pick_time=0.0, capacity=2) -> Instance:
    """Build from ``[(release, [location, ...]), ...]`` sorted by release."""
    out = []
    k = 0
    for j, (rel, locs) in enumerate(orders):
        items = []
        for loc in locs:
            items.append(Item(k, j, loc))
            k += 1
        out.append(Order(j, float(rel), tuple(items)))
    return Instance(distances, tuple(out), float(speed), float(pick_time), int(capacity))


@dataclass(frozen=True)
class GeneratorParams:
    layout: WarehouseLayout = field(default_factory=default_layout)
    n_orders: int = 10
    arrival_rate: float = 200.0  # orders per 8 hour shift
    max_order_size: int = 2
    seed: int = 0
    speed: float = 0.8
    pick_time: float = 10.0
    capacity: int = 2
    slot_pitch: float = 1.0


def generate(params: GeneratorParams) -> Instance:
    """Poisson arrivals, uniform order sizes, uniform slot positions."""
    if not params.arrival_rate > 0:
        raise ValueError("arrival_rate must be positive")
    if params.max_order_size < 1:
        raise ValueError("max_order_size must be >= 1")
    if params.n_orders < 1:
        raise ValueError("n_orders must be >= 1")
    rng = np.random.default_rng(params.seed)
    lay = params.layout
    ys = lay.slot_positions(params.slot_pitch)
    gaps = rng.exponential(SHIFT_SECONDS / params.arrival_rate, size=params.n_orders)
    releases = np.cumsum(gaps)
    sizes = rng.integers(1, params.max_order_size + 1, size=params.n_orders)
    orders = []
    for j in range(params.n_orders):
        aisles = rng.integers(0, lay.num_aisles, size=sizes[j])
        slots = rng.integers(0, len(ys), size=sizes[j])
        locs = [Location.in_aisle(int(a), ys[int(s)]) for a, s in zip(aisles, slots)]
        orders.append((round(float(releases[j]), 6), locs))
    return build_instance(DerivedDistances(lay), orders, params.speed, params.pick_time,
                          params.capacity)


# ---------------------------------------------------------------- JSON I/O

def _layout_to_json(lay: WarehouseLayout) -> dict:
    return {
        "num_aisles": lay.num_aisles,
        "num_cross_aisles": lay.num_cross_aisles,
        "aisle_length": lay.aisle_length,
        "cross_aisle_length": lay.cross_aisle_length,
        "aisle_x": list(lay.aisle_x),
        "cross_y": list(lay.cross_y),
        "depot": {"cross": lay.depot_cross, "x": lay.depot_x},
        "slot_margin": lay.slot_margin,
    }


def to_dict(inst: Instance) -> dict:
    doc = {"schema_version": SCHEMA_VERSION}
    explicit = isinstance(inst.distances, ExplicitDistances)
    if explicit:
        dp = inst.distances
        doc["nodes"] = dp.names
        doc["depot"] = dp.names[dp.depot_index]
        doc["matrix"] = dp.mat.tolist()
    else:
        doc["layout"] = _layout_to_json(inst.distances.layout)
    doc["picker"] = {"v": inst.speed, "t_p": inst.pick_time, "c": inst.capacity}
    orders = []
    for o in inst.orders:
        items = []
        for it in o.items:
            if explicit:
                items.append({"id": it.item_id, "node": inst.distances.names[it.location.node]})
            else:
                items.append({"id": it.item_id, "aisle": it.location.aisle, "y": it.location.y})
        orders.append({"id": o.order_id, "release": o.release, "items": items})
    doc["orders"] = orders
    return doc


def save(inst: Instance, path) -> None:
    text = json.dumps(to_dict(inst), indent=1)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def _need(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise MalformedInstance(f"missing field {where}{key}")
    return obj[key]


def from_dict(doc, metric_close_flag: bool = False) -> Instance:
    if not isinstance(doc, dict):
        raise MalformedInstance("document must be a JSON object")
    ver = _need(doc, "schema_version", "")
    if ver != SCHEMA_VERSION:
        raise UnknownSchemaVersion(f"schema_version {ver!r} not supported (expected {SCHEMA_VERSION})")
    picker = _need(doc, "picker", "")
    try:
        speed = float(_need(picker, "v", "picker."))
        tp = float(_need(picker, "t_p", "picker."))
        cap = int(_need(picker, "c", "picker."))
    except (TypeError, ValueError) as exc:
        raise MalformedInstance(f"picker: {exc}") from None
    raw_orders = _need(doc, "orders", "")
    if not isinstance(raw_orders, list):
        raise MalformedInstance("orders must be a list")

    if "matrix" in doc:
        names = _need(doc, "nodes", "")
        if not isinstance(names, list) or len(set(names)) != len(names):
            raise MalformedInstance("nodes must be a list of distinct names")
        depot_name = doc.get("depot", names[0] if names else None)
        if depot_name not in names:
            raise InvalidInstance(f"depot {depot_name!r} is not a node")
        try:
            raw = np.array([[np.nan if v is None else float(v) for v in row]
                            for row in doc["matrix"]], dtype=float)
        except (TypeError, ValueError) as exc:
            raise MalformedInstance(f"matrix: {exc}") from None
        if raw.shape != (len(names), len(names)):
            raise MalformedInstance("matrix shape does not match nodes")
        try:
            if np.isnan(raw).any():
                mat = metric_close(raw)
            else:
                if violates_triangle(raw):
                    if not (metric_close_flag or doc.get("metric_close", False)):
                        raise InvalidInstance("matrix violates the triangle inequality")
                    mat = metric_close(raw)
                else:
                    mat = raw
            provider = ExplicitDistances(names, mat, names.index(depot_name))
        except LayoutError as exc:
            raise InvalidInstance(f"matrix: {exc}") from None
        index = {nm: i for i, nm in enumerate(names)}

        def loc_of(item, where):
            node = _need(item, "node", where)
            if node not in index:
                raise InvalidInstance(f"{where}node {node!r} is not in nodes")
            return Location.at_node(index[node])
    else:
        lj = _need(doc, "layout", "")
        try:
            dep = _need(lj, "depot", "layout.")
            lay = WarehouseLayout(
                int(_need(lj, "num_aisles", "layout.")),
                int(_need(lj, "num_cross_aisles", "layout.")),
                float(_need(lj, "aisle_length", "layout.")),
                float(_need(lj, "cross_aisle_length", "layout.")),
                tuple(float(x) for x in _need(lj, "aisle_x", "layout.")),
                tuple(float(y) for y in _need(lj, "cross_y", "layout.")),
                int(_need(dep, "cross", "layout.depot.")),
                float(_need(dep, "x", "layout.depot.")),
                float(lj.get("slot_margin", 0.0)),
            )
        except LayoutError as exc:
            raise InvalidInstance(f"layout: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise MalformedInstance(f"layout: {exc}") from None
        provider = DerivedDistances(lay)

        def loc_of(item, where):
            try:
                return Location.in_aisle(int(_need(item, "aisle", where)), float(_need(item, "y", where)))
            except (TypeError, ValueError) as exc:
                raise MalformedInstance(f"{where}: {exc}") from None

    orders = []
    for j, ro in enumerate(raw_orders):
        where = f"orders[{j}]."
        try:
            oid = int(_need(ro, "id", where))
            rel = float(_need(ro, "release", where))
        except (TypeError, ValueError) as exc:
            raise MalformedInstance(f"{where}: {exc}") from None
        ritems = _need(ro, "items", where)
        if not isinstance(ritems, list):
            raise MalformedInstance(f"{where}items must be a list")
        items = []
        for k, ri in enumerate(ritems):
            w = f"{where}items[{k}]."
            try:
                iid = int(_need(ri, "id", w))
            except (TypeError, ValueError) as exc:
                raise MalformedInstance(f"{w}: {exc}") from None
            items.append(Item(iid, oid, loc_of(ri, w)))
        orders.append(Order(oid, rel, tuple(items)))
    return Instance(provider, tuple(orders), speed, tp, cap)


def load(path, metric_close_flag: bool = False) -> Instance:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInstance(f"{path}: not valid JSON ({exc})") from None
    return from_dict(doc, metric_close_flag)


def golden_path(name: str) -> str:
    """Path of a bundled instance, e.g. ``golden_path("i1")``."""
    if not name.endswith(".json"):
        name += ".json"
    return os.path.join(os.path.dirname(__file__), "data", name)


def example_matrix_instance(r3: float = 0.0) -> Instance:
    """Three single-item orders on a five-entry partial matrix (v = 1, c = 2, t_p = 0)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "nodes": ["ld", "s1", "s2", "s3"],
        "depot": "ld",
        "matrix": [[0, 3, 5, 2], [3, 0, 4, None], [5, 4, 0, 7], [2, None, 7, 0]],
        "picker": {"v": 1, "t_p": 0, "c": 2},
        "orders": [
            {"id": 0, "release": 0, "items": [{"id": 0, "node": "s1"}]},
            {"id": 1, "release": 0, "items": [{"id": 1, "node": "s2"}]},
            {"id": 2, "release": r3, "items": [{"id": 2, "node": "s3"}]},
        ],
    }
    return from_dict(doc)

"""Warehouse geometry and shortest walking distances.

Two distance sources are supported: a rectangular layout with vertical
aisles joined by horizontal cross-aisles (distances derived from the
geometry), and an explicit node-to-node matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEPOT = "depot"
AISLE = "aisle"
CROSS = "cross"
NODE = "node"


class LayoutError(ValueError):
    """Raised for inconsistent layouts, locations or matrices."""


@dataclass(frozen=True)
class Location:
    """A point the picker can stand on.

    ``aisle`` locations sit in vertical aisle ``aisle`` at height ``y``.
    ``cross`` and ``depot`` locations sit on cross-aisle ``cross`` at
    horizontal coordinate ``x``. ``node`` locations index an explicit matrix.
    """

    kind: str
    aisle: int = -1
    y: float = 0.0
    cross: int = -1
    x: float = 0.0
    node: int = -1

    @staticmethod
    def in_aisle(aisle: int, y: float) -> "Location":
        return Location(AISLE, aisle=int(aisle), y=float(y))

    @staticmethod
    def on_cross(cross: int, x: float) -> "Location":
        return Location(CROSS, cross=int(cross), x=float(x))

    @staticmethod
    def at_node(node: int) -> "Location":
        return Location(NODE, node=int(node))


@dataclass(frozen=True)
class WarehouseLayout:
    num_aisles: int
    num_cross_aisles: int
    aisle_length: float  # W, vertical extent
    cross_aisle_length: float  # L, horizontal extent
    aisle_x: tuple
    cross_y: tuple
    depot_cross: int
    depot_x: float
    slot_margin: float = 0.0  # half width of a cross-aisle, no slots inside it

    def __post_init__(self):
        if self.num_aisles < 1:
            raise LayoutError("num_aisles must be >= 1")
        if self.num_cross_aisles < 2:
            raise LayoutError("num_cross_aisles must be >= 2")
        if len(self.aisle_x) != self.num_aisles:
            raise LayoutError("aisle_x length does not match num_aisles")
        if len(self.cross_y) != self.num_cross_aisles:
            raise LayoutError("cross_y length does not match num_cross_aisles")
        ys = list(self.cross_y)
        if any(b <= a for a, b in zip(ys, ys[1:])):
            raise LayoutError("cross_y must be strictly increasing")
        if ys[0] != 0 or ys[-1] != self.aisle_length:
            raise LayoutError("outer cross-aisles must sit at 0 and aisle_length")
        xs = list(self.aisle_x)
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise LayoutError("aisle_x must be strictly increasing")
        if xs[0] < 0 or xs[-1] > self.cross_aisle_length:
            raise LayoutError("aisle_x outside [0, cross_aisle_length]")
        if not 0 <= self.depot_cross < self.num_cross_aisles:
            raise LayoutError("depot_cross out of range")
        if not 0 <= self.depot_x <= self.cross_aisle_length:
            raise LayoutError("depot_x outside [0, cross_aisle_length]")

    @property
    def depot(self) -> Location:
        return Location(DEPOT, cross=self.depot_cross, x=self.depot_x)

    @property
    def L(self) -> float:
        return self.cross_aisle_length

    @property
    def W(self) -> float:
        return self.aisle_length

    def check_location(self, loc: Location) -> None:
        if loc.kind == AISLE:
            if not 0 <= loc.aisle < self.num_aisles:
                raise LayoutError(f"aisle index {loc.aisle} out of range")
            if not 0 <= loc.y <= self.aisle_length:
                raise LayoutError(f"y={loc.y} outside aisle")
        elif loc.kind in (CROSS, DEPOT):
            if not 0 <= loc.cross < self.num_cross_aisles:
                raise LayoutError(f"cross index {loc.cross} out of range")
            if not 0 <= loc.x <= self.cross_aisle_length:
                raise LayoutError(f"x={loc.x} outside cross-aisle")
        else:
            raise LayoutError(f"location kind {loc.kind!r} not valid for a layout")

    def block_of(self, y: float) -> int:
        """Index of the block (between cross-aisles b and b+1) containing y."""
        for b in range(self.num_cross_aisles - 1):
            if y <= self.cross_y[b + 1]:
                return b
        return self.num_cross_aisles - 2

    def slot_positions(self, pitch: float = 1.0) -> list:
        """Admissible picking heights along one aisle, excluding cross-aisles."""
        out = []
        for lo, hi in zip(self.cross_y, self.cross_y[1:]):
            start = lo + self.slot_margin
            stop = hi - self.slot_margin
            n = int(math.floor((stop - start) / pitch + 1e-9))
            for i in range(n):
                y = start + (i + 0.5) * pitch
                if lo < y < hi:
                    out.append(round(y, 9))
        return out

    def center(self) -> Location:
        """Midpoint of the aisle grid snapped onto the closest cross-aisle."""
        mid_y = self.aisle_length / 2
        cross = min(range(self.num_cross_aisles), key=lambda c: (abs(self.cross_y[c] - mid_y), c))
        return Location.on_cross(cross, self.cross_aisle_length / 2)


def default_layout() -> WarehouseLayout:
    """Two-block layout with 10 aisles and 3 cross-aisles, depot at the left
    end of the middle cross-aisle.

    Coordinates are aisle and cross-aisle centerlines in metres: aisles are
    5 m apart starting 2.5 m from the left wall (L = 50), cross-aisles are
    33 m apart (W = 66). Slots start 1.5 m away from a cross-aisle centerline.
    """
    xs = tuple(2.5 + 5.0 * i for i in range(10))
    return WarehouseLayout(
        num_aisles=10,
        num_cross_aisles=3,
        aisle_length=66.0,
        cross_aisle_length=50.0,
        aisle_x=xs,
        cross_y=(0.0, 33.0, 66.0),
        depot_cross=1,
        depot_x=0.0,
        slot_margin=1.5,
    )


def make_layout(num_aisles: int, num_cross_aisles: int, aisle_length: float,
                aisle_spacing: float = 5.0, depot_cross: int | None = None,
                depot_x: float = 0.0, slot_margin: float = 0.0) -> WarehouseLayout:
    """Evenly spaced layout; the depot defaults to the middle cross-aisle."""
    if num_cross_aisles < 2:
        raise LayoutError("num_cross_aisles must be >= 2")
    xs = tuple(aisle_spacing / 2 + aisle_spacing * i for i in range(num_aisles))
    ys = tuple(aisle_length * b / (num_cross_aisles - 1) for b in range(num_cross_aisles))
    if depot_cross is None:
        depot_cross = (num_cross_aisles - 1) // 2
    return WarehouseLayout(num_aisles, num_cross_aisles, float(aisle_length),
                           aisle_spacing * num_aisles, xs, ys, depot_cross,
                           float(depot_x), slot_margin)


def _layout_distance(lay: WarehouseLayout, p: Location, q: Location) -> float:
    if p.kind == AISLE and q.kind == AISLE:
        if p.aisle == q.aisle:
            return abs(p.y - q.y)
        dx = abs(lay.aisle_x[p.aisle] - lay.aisle_x[q.aisle])
        return dx + min(abs(p.y - cy) + abs(cy - q.y) for cy in lay.cross_y)
    if p.kind == AISLE:
        p, q = q, p
    if q.kind == AISLE:
        # p lies on a cross-aisle
        return abs(p.x - lay.aisle_x[q.aisle]) + abs(lay.cross_y[p.cross] - q.y)
    if p.cross == q.cross:
        return abs(p.x - q.x)
    dy = abs(lay.cross_y[p.cross] - lay.cross_y[q.cross])
    return dy + min(abs(p.x - xa) + abs(xa - q.x) for xa in lay.aisle_x)


class DistanceProvider:
    """Common interface: ``distance(a, b)`` and the depot location."""

    depot: Location

    def distance(self, a: Location, b: Location) -> float:
        raise NotImplementedError

    def max_distance_bound(self) -> float:
        """An upper bound on the distance between any two locations."""
        raise NotImplementedError

    def matrix(self, locs: Sequence[Location]) -> np.ndarray:
        n = len(locs)
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = out[j, i] = self.distance(locs[i], locs[j])
        return out


class DerivedDistances(DistanceProvider):
    def __init__(self, layout: WarehouseLayout):
        self.layout = layout
        self.depot = layout.depot

    def distance(self, a: Location, b: Location) -> float:
        self.layout.check_location(a)
        self.layout.check_location(b)
        return _layout_distance(self.layout, a, b)

    def max_distance_bound(self) -> float:
        return self.layout.L + self.layout.W

    def __eq__(self, other):
        return isinstance(other, DerivedDistances) and other.layout == self.layout


class ExplicitDistances(DistanceProvider):
    """Distances read from a full symmetric matrix over named nodes."""

    def __init__(self, names: Sequence[str], matrix, depot: int = 0):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(names):
            raise LayoutError("matrix must be square and match the node list")
        if np.isnan(m).any():
            raise LayoutError("matrix has absent entries; run metric_close first")
        if (m < 0).any():
            raise LayoutError("matrix has negative entries")
        if not np.allclose(m, m.T, atol=1e-12):
            raise LayoutError("matrix is not symmetric")
        if np.abs(np.diag(m)).max(initial=0) > 0:
            raise LayoutError("matrix diagonal must be zero")
        self.names = list(names)
        self.mat = m
        self.depot_index = int(depot)
        self.depot = Location(DEPOT, node=int(depot))

    def _index(self, loc: Location) -> int:
        if loc.kind not in (NODE, DEPOT) or not 0 <= loc.node < len(self.names):
            raise LayoutError(f"unknown location {loc!r} for explicit matrix")
        return loc.node

    def distance(self, a: Location, b: Location) -> float:
        return float(self.mat[self._index(a), self._index(b)])

    def max_distance_bound(self) -> float:
        return float(self.mat.max(initial=0.0))

    def __eq__(self, other):
        return (isinstance(other, ExplicitDistances) and other.names == self.names
                and other.depot_index == self.depot_index
                and np.array_equal(other.mat, self.mat))


def metric_close(matrix) -> np.ndarray:
    """All-pairs shortest-path completion of a symmetric length matrix.

    Absent entries are NaN (or None). The result satisfies the triangle
    inequality; entries above the shortest path are lowered to it.
    """
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LayoutError("matrix must be square")
    present = ~np.isnan(m)
    if (m[present] < 0).any():
        raise LayoutError("negative matrix entry")
    m[~present] = np.inf
    np.fill_diagonal(m, 0.0)
    m = np.minimum(m, m.T)
    n = m.shape[0]
    for k in range(n):
        m = np.minimum(m, m[:, k:k + 1] + m[k:k + 1, :])
    if np.isinf(m).any():
        raise LayoutError("matrix graph is disconnected")
    return m


def violates_triangle(matrix, tol: float = 1e-9) -> bool:
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    for k in range(n):
        if (m > m[:, k:k + 1] + m[k:k + 1, :] + tol).any():
            return True
    return False


def rectilinear_path(lay: WarehouseLayout, a: Location, b: Location) -> list:
    """Corner points (x, y) of one shortest walk from a to b."""

    def xy(p):
        if p.kind == AISLE:
            return (lay.aisle_x[p.aisle], p.y)
        return (p.x, lay.cross_y[p.cross])

    pa, pb = xy(a), xy(b)
    if a.kind == AISLE and b.kind == AISLE:
        if a.aisle == b.aisle:
            return [pa, pb]
        cy = min(lay.cross_y, key=lambda c: abs(a.y - c) + abs(c - b.y))
        return [pa, (pa[0], cy), (pb[0], cy), pb]
    if a.kind == AISLE:
        return [pa, (pa[0], pb[1]), pb]
    if b.kind == AISLE:
        return [pa, (pb[0], pa[1]), pb]
    if a.cross == b.cross:
        return [pa, pb]
    xa = min(lay.aisle_x, key=lambda x: abs(pa[0] - x) + abs(x - pb[0]))
    return [pa, (xa, pa[1]), (xa, pb[1]), pb]


def point_along(lay: WarehouseLayout, a: Location, b: Location, dist: float) -> Location:
    """Location reached after walking ``dist`` from a toward b on a shortest path."""
    pts = rectilinear_path(lay, a, b)
    left = max(0.0, dist)
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        seg = abs(x1 - x0) + abs(y1 - y0)
        if seg <= 0:
            continue
        if left < seg:
            t = left / seg
            x, y = x0 + (x1 - x0) * t, y0 + (y1 - y0) * t
            if x0 == x1:
                return Location.in_aisle(lay.aisle_x.index(x0), y)
            return Location.on_cross(lay.cross_y.index(y0), x)
        left -= seg
    return b

import itertools
import random

import pytest

from oracles import tour_by_permutation
from orderpick.instance import GeneratorParams, generate, golden_path, load
from orderpick.routing import (MAX_ROUTE_ITEMS, execute_route, optimal_route, s_shape_route,
                               subaisle_entries)
from orderpick.warehouse import Location


def _warehouse(seed, n_orders=8, max_size=3):
    return generate(GeneratorParams(n_orders=n_orders, max_order_size=max_size, seed=seed))


def test_first_worked_instance_route():
    inst = load(golden_path("i1"))
    r = optimal_route(inst, [0, 1])
    # 3 + 4 + 5 either way round; both orders are optimal
    assert r.finish == 12.0
    assert sorted(r.visit_order) == [0, 1]
    assert execute_route(inst, (0, 1), (3.0, 4.0, 5.0), 0.0) == 12.0


def test_single_item_out_and_back():
    inst = _warehouse(0).with_zero_releases()
    r = optimal_route(inst, [3])
    d = inst.dist(inst.depot, inst.items[3].location)
    assert r.finish == pytest.approx(2 * d / inst.speed + inst.pick_time)
    assert r.legs == pytest.approx((d, d))


def test_released_items_match_permutation_search():
    rng = random.Random(0)
    for seed in range(20):
        inst = _warehouse(seed).with_zero_releases()
        items = rng.sample(range(inst.n_items), min(5, inst.n_items))
        r = optimal_route(inst, items, clock=100.0)
        assert r.finish - 100.0 == pytest.approx(tour_by_permutation(inst, items))


def test_release_aware_routing_matches_enumeration():
    rng = random.Random(1)
    for seed in range(20):
        inst = _warehouse(seed)
        items = rng.sample(range(inst.n_items), min(5, inst.n_items))
        start = Location.in_aisle(rng.randrange(10), 20.0)
        r = optimal_route(inst, items, start=start, clock=0.0)
        best = min(execute_route(inst, p, [inst.dist(a, b) for a, b in zip(
            [start] + [inst.items[s].location for s in p],
            [inst.items[s].location for s in p] + [inst.depot])], 0.0)
            for p in itertools.permutations(items))
        assert r.finish == pytest.approx(best)
        assert execute_route(inst, r.visit_order, r.legs, 0.0) == pytest.approx(r.finish)


def test_s_shape_visits_each_item_once_and_each_subaisle_once():
    rng = random.Random(2)
    for seed in range(50):
        inst = _warehouse(seed, n_orders=12)
        items = rng.sample(range(inst.n_items), rng.randint(1, min(12, inst.n_items)))
        r = s_shape_route(inst, items)
        assert sorted(r.visit_order) == sorted(items)
        assert all(v == 1 for v in subaisle_entries(inst, r).values())
        assert sum(r.legs) / inst.speed == pytest.approx(r.travel)


def test_optimal_never_longer_than_s_shape():
    rng = random.Random(3)
    for seed in range(40):
        inst = _warehouse(seed).with_zero_releases()
        items = rng.sample(range(inst.n_items), min(7, inst.n_items))
        assert optimal_route(inst, items).travel <= s_shape_route(inst, items).travel + 1e-9


def test_s_shape_respects_releases():
    inst = _warehouse(5)
    items = list(range(inst.n_items))[:6]
    r = s_shape_route(inst, items)
    t = 0.0
    for s, d in zip(r.visit_order, r.legs):
        t = max(t + d / inst.speed, inst.release_of_item(s)) + inst.pick_time
        assert t - inst.pick_time >= inst.release_of_item(s) - 1e-9
    assert r.finish == pytest.approx(t + r.legs[-1] / inst.speed)


def test_s_shape_single_aisle_sweeps_in_order():
    inst = _warehouse(0)
    same = [it.item_id for it in inst.items if it.location.aisle == inst.items[0].location.aisle]
    r = s_shape_route(inst, same)
    ys = [inst.items[s].location.y for s in r.visit_order]
    blocks = [inst.distances.layout.block_of(y) for y in ys]
    for b in set(blocks):
        seg = [y for y, bb in zip(ys, blocks) if bb == b]
        assert seg == sorted(seg) or seg == sorted(seg, reverse=True)


def test_s_shape_empty_route():
    inst = _warehouse(0)
    r = s_shape_route(inst, [])
    assert r.visit_order == () and r.travel == 0.0


def test_s_shape_needs_a_layout():
    with pytest.raises(ValueError):
        s_shape_route(load(golden_path("i1")), [0])


def test_route_size_limit():
    inst = _warehouse(0, n_orders=20, max_size=4)
    with pytest.raises(ValueError):
        optimal_route(inst, list(range(MAX_ROUTE_ITEMS + 1)))

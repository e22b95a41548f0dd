import math
from dataclasses import replace

import pytest

from orderpick.instance import GeneratorParams, Item, Order, generate, golden_path, load
from orderpick.policies import (FIFO, LADDER, PRESETS, REOPT, REOPT_STAR, VTWB, PolicyConfig,
                                PolicyError, gap, reference_value, replay, resolve_config,
                                simulate)
from orderpick.schedule import chi, validate
from orderpick.warehouse import Location

ALL = list(LADDER) + [FIFO, replace(FIFO, intervention=True, name="FIFO+i")]


def _inst(seed, n=8):
    return generate(GeneratorParams(n_orders=n, seed=seed))


def test_single_order_is_picked_at_release():
    inst = _inst(0, n=1)
    r = inst.orders[0].release
    for cfg in (REOPT, FIFO):
        trace, _ = simulate(inst, cfg)
        assert trace.makespan == pytest.approx(r + chi(inst, 0))
    vtwb, _ = simulate(inst, VTWB)
    assert vtwb.makespan >= r + chi(inst, 0) - 1e-9


def test_online_never_beats_complete_information():
    for seed in range(8):
        inst = _inst(seed, n=6)
        star = reference_value(inst, "makespan")
        for cfg in ALL:
            trace, sol = simulate(inst, cfg)
            assert validate(inst, sol) == []
            assert trace.makespan >= star - 1e-9, (seed, cfg.label)


def test_turnover_policies_produce_valid_solutions():
    for seed in range(8):
        inst = _inst(seed, n=6)
        for cfg in ALL:
            trace, sol = simulate(inst, cfg, "turnover")
            assert validate(inst, sol) == []
            assert trace.avg_turnover > 0


def test_replay_matches_trace():
    for seed in range(6):
        inst = _inst(seed)
        for cfg in ALL:
            for objective in ("makespan", "turnover"):
                trace, _ = simulate(inst, cfg, objective)
                rep = replay(inst, trace)
                assert rep["makespan"] == pytest.approx(trace.makespan)
                assert rep["turnover"] == pytest.approx(trace.avg_turnover)


def _moved(inst, k):
    """Same instance with order k's items moved elsewhere."""
    orders = list(inst.orders)
    o = orders[k]
    items = tuple(Item(it.item_id, k, Location.in_aisle((it.location.aisle + 5) % 10,
                                                        66.0 - it.location.y))
                  for it in o.items)
    orders[k] = Order(k, o.release, items)
    return inst.replace(orders=orders)


def test_decisions_ignore_unreleased_orders():
    for seed in range(6):
        inst = _inst(seed)
        for k in (3, 6):
            r = inst.orders[k].release
            other = _moved(inst, k)
            for cfg in (VTWB, REOPT, REOPT_STAR):
                a, _ = simulate(inst, cfg)
                b, _ = simulate(other, cfg)
                before_a = [e for e in a.events if e["t"] < r - 1e-9]
                before_b = [e for e in b.events if e["t"] < r - 1e-9]
                assert before_a == before_b, (seed, k, cfg.label)


def test_orders_join_batches_only_after_release():
    for seed in range(6):
        inst = _inst(seed)
        for cfg in ALL:
            trace, _ = simulate(inst, cfg)
            for b in trace.batches:
                for o, t in b["assigned"].items():
                    assert t >= inst.orders[o].release - 1e-9


def test_returned_batches_are_frozen_and_commenced_orders_stay():
    for seed in range(6):
        inst = _inst(seed, n=10)
        trace, _ = simulate(inst, REOPT)
        returns = [b["return"] for b in trace.batches]
        assert returns == sorted(returns)
        picked_at = {}
        for e in trace.events:
            if e["kind"] == "pick":
                picked_at.setdefault(e["order"], e["t"])
            if e["kind"] == "shed":
                assert e["order"] not in picked_at or picked_at[e["order"]] > e["t"]
        for b in trace.batches:
            items = sorted(it.item_id for o in b["orders"] for it in inst.orders[o].items)
            assert sorted(b["items"]) == items


def test_vtw_holds_a_lonely_order():
    inst = _inst(1, n=4)
    trace, _ = simulate(inst, VTWB)
    holds = [e for e in trace.events if e["kind"] == "wait" and e.get("reason") == "vtw"]
    assert holds
    assert trace.hold[0] > 0
    assert trace.hold[0] == pytest.approx(inst.orders[1].release - inst.orders[0].release)


def test_center_relocation():
    inst = _inst(2, n=6)
    trace, _ = simulate(inst, REOPT_STAR)
    moves = [e for e in trace.events if e["kind"] == "relocate"]
    assert moves
    plain, _ = simulate(inst, REOPT)
    assert not [e for e in plain.events if e["kind"] == "relocate"]


def test_relocation_ignored_without_a_layout():
    inst = load(golden_path("i2"))
    trace, sol = simulate(inst, REOPT_STAR)
    assert validate(inst, sol) == []
    assert not [e for e in trace.events if e["kind"] == "relocate"]


def test_simulation_is_deterministic():
    inst = _inst(3)
    a, _ = simulate(inst, REOPT_STAR, "turnover")
    b, _ = simulate(inst, REOPT_STAR, "turnover")
    assert a.events == b.events


def test_gap():
    assert gap(110.0, 100.0) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        gap(1.0, 0.0)


def test_config_validation():
    with pytest.raises(PolicyError):
        PolicyConfig(routing="s_shape", intervention=True)
    with pytest.raises(PolicyError):
        PolicyConfig(batching="random")
    with pytest.raises(PolicyError):
        PolicyConfig(vtw_orders=0)
    with pytest.raises(PolicyError):
        resolve_config("nope")


def test_config_resolution():
    assert resolve_config("Reopt*") is REOPT_STAR
    assert resolve_config("+opt-batching") == LADDER[2]
    assert resolve_config(REOPT.to_dict()) == REOPT
    assert PolicyConfig.from_dict(VTWB.to_dict()) == VTWB
    assert set(PRESETS) == {"VTWB", "Reopt", "Reopt*", "FIFO"}
    assert [c.label for c in LADDER][0] == "VTWB" and LADDER[-1].label == "Reopt*"


def test_ladder_steps_change_one_setting():
    fields = ("routing", "batching", "waiting", "intervention", "batch_selection", "relocation")
    for a, b in zip(LADDER[:-2], LADDER[1:-1]):
        diff = [f for f in fields if getattr(a, f) != getattr(b, f)]
        assert len(diff) == 1, diff


def test_unknown_objective():
    with pytest.raises(ValueError):
        simulate(_inst(0), REOPT, "throughput")


def test_completions_are_finite():
    inst = _inst(4, n=12)
    trace, _ = simulate(inst, REOPT_STAR)
    assert all(math.isfinite(c) for c in trace.completion)

import json

import numpy as np
import pytest

from orderpick.instance import (SHIFT_SECONDS, GeneratorParams, InvalidInstance, MalformedInstance,
                                UnknownSchemaVersion, example_matrix_instance, from_dict, generate,
                                golden_path, load, save, to_dict)
from orderpick.warehouse import Location, default_layout


@pytest.fixture(scope="module")
def big():
    return generate(GeneratorParams(n_orders=100_000, seed=1))


def test_mean_order_size_two(big):
    sizes = [len(o.items) for o in big.orders]
    assert abs(np.mean(sizes) - 1.5) <= 0.01


def test_mean_order_size_four():
    inst = generate(GeneratorParams(n_orders=100_000, max_order_size=4, seed=2))
    assert abs(np.mean([len(o.items) for o in inst.orders]) - 2.5) <= 0.02


def test_interarrival_mean(big):
    rel = np.array([o.release for o in big.orders])
    gaps = np.diff(np.concatenate([[0.0], rel]))
    expected = SHIFT_SECONDS / 200.0
    assert abs(gaps.mean() - expected) / expected <= 0.02


def test_items_sit_on_slots(big):
    lay = default_layout()
    ys = set(lay.slot_positions())
    for it in big.items[:5000]:
        assert it.location.y in ys
        assert 0 <= it.location.aisle < lay.num_aisles


def test_generator_is_deterministic():
    a = generate(GeneratorParams(n_orders=30, seed=5))
    b = generate(GeneratorParams(n_orders=30, seed=5))
    c = generate(GeneratorParams(n_orders=30, seed=6))
    assert a == b
    assert a != c


def test_json_round_trip(tmp_path):
    inst = generate(GeneratorParams(n_orders=12, seed=3))
    path = tmp_path / "inst.json"
    save(inst, path)
    assert load(path) == inst
    mat = example_matrix_instance(r3=5.0)
    assert from_dict(json.loads(json.dumps(to_dict(mat)))) == mat


def test_first_golden_instance():
    inst = load(golden_path("i1"))
    assert inst.n_orders == 3 and inst.n_items == 3
    assert inst.capacity == 2 and inst.speed == 1.0 and inst.pick_time == 0.0
    assert [o.release for o in inst.orders] == [0.0, 0.0, 0.0]
    # the partial matrix is completed by the shortest detour s1-s3 via the depot
    assert inst.time_matrix()[0, 2] == 5.0


def test_second_golden_instance_releases():
    inst = load(golden_path("i2"))
    assert [o.release for o in inst.orders] == [0.0, 0.0, 17.0]


def _doc():
    return to_dict(example_matrix_instance())


def test_unsorted_orders_are_rejected():
    doc = _doc()
    doc["orders"][2]["release"] = 0
    doc["orders"][1]["release"] = 4
    with pytest.raises(InvalidInstance, match="sorted"):
        from_dict(doc)


def test_unknown_schema_version():
    doc = _doc()
    doc["schema_version"] = 99
    with pytest.raises(UnknownSchemaVersion):
        from_dict(doc)


def test_missing_field_is_malformed():
    doc = _doc()
    del doc["picker"]["c"]
    with pytest.raises(MalformedInstance, match="picker.c"):
        from_dict(doc)


def test_triangle_violation_needs_flag():
    doc = _doc()
    doc["matrix"] = [[0, 3, 5, 2], [3, 0, 40, 5], [5, 40, 0, 7], [2, 5, 7, 0]]
    with pytest.raises(InvalidInstance, match="triangle"):
        from_dict(doc)
    inst = from_dict(doc, metric_close_flag=True)
    assert inst.node_matrix()[0, 1] == 8.0


@pytest.mark.parametrize("field,value", [("v", 0), ("c", 0), ("t_p", -1)])
def test_invalid_picker(field, value):
    doc = _doc()
    doc["picker"][field] = value
    with pytest.raises(InvalidInstance):
        from_dict(doc)


def test_unknown_node_is_invalid():
    doc = _doc()
    doc["orders"][0]["items"][0]["node"] = "nowhere"
    with pytest.raises(InvalidInstance):
        from_dict(doc)


def test_location_outside_layout_is_invalid():
    inst = generate(GeneratorParams(n_orders=2, seed=0))
    doc = to_dict(inst)
    doc["orders"][0]["items"][0]["aisle"] = 99
    with pytest.raises(InvalidInstance):
        from_dict(doc)


def test_with_zero_releases_keeps_items():
    inst = generate(GeneratorParams(n_orders=5, seed=0))
    zero = inst.with_zero_releases()
    assert all(o.release == 0 for o in zero.orders)
    assert zero.items == inst.items
    assert isinstance(zero.items[0].location, Location)


@pytest.mark.parametrize("kwargs", [dict(arrival_rate=0), dict(max_order_size=0),
                                    dict(n_orders=0)])
def test_invalid_generator_params(kwargs):
    with pytest.raises(ValueError):
        generate(GeneratorParams(**kwargs))

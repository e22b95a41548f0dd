import random

import numpy as np
import pytest

from oracles import random_instance
from orderpick import kernels
from orderpick.dp_core import DPModel
from orderpick.instance import GeneratorParams, generate

BACKENDS = kernels.backends()
needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")


def _dp_args(model, objective, dominance, fifo):
    return (model.T, model.item_release, model.order_items, model.order_release,
            model.order_size, model.tp, model.cap, objective, dominance, fifo, model.lw,
            model.d3, model.n + 1, model.start_m, model.start_bm, model.start_pm,
            model.start_clock, model.start_at_depot, 10**7, False)


@needs_compiled
@pytest.mark.parametrize("objective", [kernels.MAKESPAN, kernels.TURNOVER])
def test_dp_backends_agree(objective):
    py_dp, c_dp = BACKENDS["python"][1], BACKENDS["compiled"][1]
    for seed in range(60):
        inst = random_instance(seed)
        model = DPModel(inst)
        for dominance, fifo in ((True, False), (False, False), (True, True)):
            args = _dp_args(model, objective, dominance, fifo)
            a = py_dp(model.T.tolist(), *args[1:])
            b = c_dp(*args)
            assert a["value"] == pytest.approx(b["value"], abs=1e-9)
            assert a["clock"] == pytest.approx(b["clock"], abs=1e-9)
            for key in ("states_expanded", "transitions", "stored_states"):
                assert a[key] == b[key]


@needs_compiled
def test_dp_backends_agree_on_generated_instances():
    py_dp, c_dp = BACKENDS["python"][1], BACKENDS["compiled"][1]
    for seed in range(5):
        model = DPModel(generate(GeneratorParams(n_orders=6, seed=seed)))
        args = _dp_args(model, kernels.MAKESPAN, True, False)
        a = py_dp(model.T.tolist(), *args[1:])
        b = c_dp(*args)
        assert a["value"] == pytest.approx(b["value"], abs=1e-9)
        assert a["path"] == b["path"]


@needs_compiled
def test_held_karp_backends_agree():
    py_hk, c_hk = BACKENDS["python"][0], BACKENDS["compiled"][0]
    rng = random.Random(0)
    for _ in range(100):
        m = rng.randint(1, 8)
        pts = np.array([[rng.uniform(0, 50), rng.uniform(0, 50)] for _ in range(m + 1)])
        T = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
        rel = [rng.choice([0.0, rng.uniform(0, 100)]) for _ in range(m)]
        tp = rng.choice([0.0, 2.0])
        clock = rng.uniform(0, 20)
        fa, oa = py_hk(T.tolist(), m, m, list(range(m)), rel, tp, clock)
        fb, ob = c_hk(T, m, m, list(range(m)), rel, tp, clock)
        assert fa == pytest.approx(fb, abs=1e-9)
        assert sorted(oa) == sorted(ob) == list(range(m))

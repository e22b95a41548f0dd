"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--orders 6 8 10] [--repeat 3]
"""

import argparse
import random
import time

import numpy as np

from orderpick import kernels
from orderpick.dp_core import DPModel, state_budget
from orderpick.instance import GeneratorParams, generate


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def dp_call(dp, model, as_list):
    T = model.T.tolist() if as_list else model.T
    return lambda: dp(T, model.item_release, model.order_items, model.order_release,
                      model.order_size, model.tp, model.cap, kernels.MAKESPAN, True, False,
                      model.lw, model.d3, model.n + 1, model.start_m, model.start_bm,
                      model.start_pm, model.start_clock, model.start_at_depot,
                      state_budget(), False)


def hk_call(hk, m, rng, as_list):
    pts = np.array([[rng.uniform(0, 50), rng.uniform(0, 50)] for _ in range(m + 1)])
    T = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    rel = [rng.uniform(0, 60) for _ in range(m)]
    T = T.tolist() if as_list else T
    return lambda: hk(T, m, m, list(range(m)), rel, 1.0, 0.0)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--orders", type=int, nargs="+", default=[6, 8, 10])
    p.add_argument("--tour-sizes", type=int, nargs="+", default=[8, 10, 12])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    found = kernels.backends()
    names = list(found)
    print(f"backends: {', '.join(names)}")
    print(f"{'kernel':10s} {'size':>5s} " + " ".join(f"{n + ' s':>12s}" for n in names)
          + ("  speedup" if len(names) == 2 else ""))
    for n in args.orders:
        model = DPModel(generate(GeneratorParams(n_orders=n, seed=args.seed)))
        times = [best_of(dp_call(found[k][1], model, k == "python"), args.repeat) for k in names]
        _row("dp_solve", n, times)
    for m in args.tour_sizes:
        times = [best_of(hk_call(found[k][0], m, random.Random(args.seed), k == "python"),
                         args.repeat) for k in names]
        _row("held_karp", m, times)


def _row(kernel, size, times):
    line = f"{kernel:10s} {size:5d} " + " ".join(f"{t:12.4f}" for t in times)
    if len(times) == 2:
        line += f"  {times[0] / times[1]:7.1f}x"
    print(line)


if __name__ == "__main__":
    main()

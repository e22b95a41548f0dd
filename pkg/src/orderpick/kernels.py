"""Select the compiled kernels when available, else the pure-Python ones.

Set ``ORDERPICK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels
from ._pykernels import EPS, MAKESPAN, TURNOVER, BudgetExceeded  # noqa: F401


def _as_rows(T):
    return T.tolist() if hasattr(T, "tolist") else T


def _py_held_karp(T, start, end, nodes, release, tp, clock):
    return _pykernels.held_karp(_as_rows(T), start, end, list(nodes), list(release), tp, clock)


def _py_dp_solve(T, *args):
    return _pykernels.dp_solve(_as_rows(T), *args)


BACKEND = "python"
held_karp = _py_held_karp
dp_solve = _py_dp_solve

if os.environ.get("ORDERPICK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        _kernels = None
    if _kernels is not None:
        BACKEND = "compiled"

        def held_karp(T, start, end, nodes, release, tp, clock):
            if len(nodes) > 24:
                return _py_held_karp(T, start, end, nodes, release, tp, clock)
            return _kernels.held_karp(T, start, end, nodes, release, tp, clock)

        def dp_solve(T, item_release, order_items, *args):
            # bitmask keys are 64 bits wide in the compiled kernel
            if len(item_release) > 64 or len(order_items) > 64:
                return _py_dp_solve(T, item_release, order_items, *args)
            return _kernels.dp_solve(T, item_release, order_items, *args)


def backends() -> dict:
    """Both implementations keyed by name (compiled only if built)."""
    out = {"python": (_py_held_karp, _py_dp_solve)}
    try:
        from . import _kernels as k
        out["compiled"] = (k.held_karp, k.dp_solve)
    except ImportError:
        pass
    return out

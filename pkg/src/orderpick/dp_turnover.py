"""Forward DP for the average-turnover objective.

Each state keeps one label: the forward-looking completion value (every
transition is charged its duration times the number of orders still open)
together with the clock along the same path. The result is optimal whenever
the decoded schedule contains no waiting; otherwise it is a heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .dp_core import DPModel, DPResult, Start, State, Transition, decode_path, stats_of, transition_cost
from .instance import Instance
from .schedule import avg_turnover, completion_sum, reconstruct

EXACT = "exact"
HEURISTIC = "heuristic"


@dataclass
class TurnoverResult:
    avg_turnover: float
    completion_sum: float  # sum of order completion times of the decoded schedule
    label: float  # forward completion value of the terminal state
    exactness: str
    dp: DPResult

    @property
    def solution(self):
        return self.dp.solution

    @property
    def stats(self):
        return self.dp.stats


def transition_turnover_cost(inst: Instance, state: State, clock: float, transition: Transition,
                             model: DPModel | None = None) -> float:
    """Transition duration times the number of orders not yet completed."""
    g = transition_cost(inst, state, clock, transition, model)
    return g * (state.open_count + len(state.pending))


def solve_turnover(inst: Instance, dominance: bool = False, fifo_order_start: bool = False,
                   budget: int | None = None, record: bool = False,
                   start: Start | None = None) -> TurnoverResult:
    """Heuristic minimum average turnover.

    The returned objective is recomputed from the decoded schedule. Release
    time pruning is off by default: its thresholds are only proven for the
    minimal clock of a state, while a stored label may carry a later clock.
    """
    model = DPModel(inst, start)
    res = model.run(kernels.TURNOVER, dominance, fifo_order_start, budget, record)
    if not res["feasible"]:
        raise RuntimeError("no feasible completion from the given start")
    sol = decode_path(inst, res["path"], model.start.open_orders)
    dp = DPResult(res["value"], res["clock"], sol, res["path"], stats_of(res),
                  res.get("arena"), model)
    if start is not None and (start.open_orders or start.pending is not None or start.clock
                              or start.position is not None):
        # partial runs are evaluated by the caller
        return TurnoverResult(float("nan"), float("nan"), res["value"], HEURISTIC, dp)
    sched = reconstruct(inst, sol)
    waits = sched.total_wait
    return TurnoverResult(avg_turnover(inst, sched, sol), completion_sum(inst, sched, sol),
                          res["value"], EXACT if waits <= kernels.EPS else HEURISTIC, dp)

"""Three-index MIP models (makespan and turnover) in LP text format.

Variables: ``y_k{k}_{i}_{l}`` arc i -> l in batch k (``d`` is the depot,
``s{n}`` item n, 1-based), ``x_k{k}_o{j}`` order j in batch k, ``t_s{n}``
item completion, ``tld_k{k}`` depot departure of batch k (k = 1..K+1),
``tord_o{j}`` order completion (turnover), ``z`` the makespan.
Rows are named after the constraint family they belong to (``eq18_s3``,
``eq26_s2_i1`` and so on).
"""

from __future__ import annotations

import math
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field

from .instance import Instance
from .schedule import Solution, reconstruct, validate
from .warehouse import DerivedDistances

CONST = "obj_const"  # fixed at 1, carries the objective constant
TOL = 1e-6


class SolutionFileError(ValueError):
    pass


@dataclass
class MipModel:
    objective_kind: str
    K: int
    big_m: float
    big_n: float | None
    n_items: int
    n_orders: int
    variables: dict = field(default_factory=dict)  # name -> (kind, lb, ub)
    rows: list = field(default_factory=list)  # (name, {var: coef}, sense, rhs)
    objective: dict = field(default_factory=dict)
    objective_constant: float = 0.0

    def add_var(self, name, kind="C", lb=0.0, ub=math.inf):
        self.variables[name] = (kind, lb, ub)
        return name

    def add_row(self, name, coefs, sense, rhs):
        for v in coefs:
            if v not in self.variables:
                raise KeyError(f"row {name} uses undeclared variable {v}")
        self.rows.append((name, dict(coefs), sense, float(rhs)))

    def count(self, prefix: str) -> int:
        return sum(1 for v in self.variables if v.startswith(prefix))

    def objective_value(self, values: dict) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.objective.items()) + self.objective_constant


def node(i: int | None) -> str:
    return "d" if i is None else f"s{i + 1}"


def yname(k, i, l):
    return f"y_k{k}_{node(i)}_{node(l)}"


def batch_bound(inst: Instance) -> int:
    """Upper bound on the batches of some makespan-optimal solution (at least 1)."""
    return max(1, (2 * inst.n_orders) // (inst.capacity + 1))


def big_m_values(inst: Instance) -> tuple:
    """(M, N): release of the last order plus a bound on finishing everything after it."""
    v = inst.speed
    r_last = inst.orders[-1].release
    if isinstance(inst.distances, DerivedDistances):
        lay = inst.distances.layout
        tour = (2 * lay.L + (lay.num_aisles + 1) * lay.W) / v * math.ceil(inst.n_orders / inst.capacity)
        hop = (lay.L + lay.W) / v
    else:
        nm = inst.node_matrix()
        n = inst.n_items
        tour = sum(2 * nm[n, s] for s in range(n)) / v
        hop = nm.max() / v
    n_val = r_last + tour + inst.n_items * inst.pick_time
    return float(n_val + hop), float(n_val)


def _build(inst: Instance, K: int, kind: str) -> MipModel:
    n = inst.n_items
    no = inst.n_orders
    M, N = big_m_values(inst)
    model = MipModel(kind, K, M, N if kind == "turnover" else None, n, no)
    T = inst.time_matrix()
    dep = n
    tp = inst.pick_time
    nodes = [None] + list(range(n))
    ks = range(1, K + 1)
    for k in ks:
        for i in nodes:
            for l in nodes:
                if i != l:
                    model.add_var(yname(k, i, l), "B", 0, 1)
    for k in ks:
        for j in range(no):
            model.add_var(f"x_k{k}_o{j + 1}", "B", 0, 1)
    for s in range(n):
        model.add_var(f"t_s{s + 1}")
    for k in range(1, K + 2):
        model.add_var(f"tld_k{k}")
    model.add_var(CONST, "C", 1.0, 1.0)

    for s in range(n):
        model.add_row(f"eq18_s{s + 1}", {yname(k, i, s): 1 for k in ks for i in nodes if i != s}, "=", 1)
    for k in ks:
        model.add_row(f"eq19_k{k}", {yname(k, s, None): 1 for s in range(n)}, "<=", 1)
    for s in range(n):
        for k in ks:
            coefs = {yname(k, i, s): 1 for i in nodes if i != s}
            for i in nodes:
                if i != s:
                    coefs[yname(k, s, i)] = coefs.get(yname(k, s, i), 0) - 1
            model.add_row(f"eq20_s{s + 1}_k{k}", coefs, "<=", 0)
    coefs = {}
    for k in ks:
        for s in range(n):
            coefs[yname(k, s, None)] = 1
            coefs[yname(k, None, s)] = -1
    model.add_row("eq21", coefs, "=", 0)
    for k in range(2, K + 1):
        coefs = {yname(k, None, s): 1 for s in range(n)}
        for s in range(n):
            coefs[yname(k - 1, None, s)] = -1
        model.add_row(f"eq22_k{k}", coefs, "<=", 0)
    for j, o in enumerate(inst.orders):
        for k in ks:
            for it in o.items:
                s = it.item_id
                coefs = {f"x_k{k}_o{j + 1}": 1}
                for i in nodes:
                    if i != s:
                        coefs[yname(k, i, s)] = -1
                model.add_row(f"eq23_o{j + 1}_k{k}_s{s + 1}", coefs, ">=", 0)
    for j in range(no):
        model.add_row(f"eq24_o{j + 1}", {f"x_k{k}_o{j + 1}": 1 for k in ks}, "<=", 1)
    for k in ks:
        model.add_row(f"eq25_k{k}", {f"x_k{k}_o{j + 1}": 1 for j in range(no)}, "<=", inst.capacity)
    for s in range(n):
        for i in range(n):
            if i == s:
                continue
            coefs = {f"t_s{s + 1}": 1, f"t_s{i + 1}": -1}
            for k in ks:
                coefs[yname(k, i, s)] = -M
            model.add_row(f"eq26_s{s + 1}_i{i + 1}", coefs, ">=", T[i, s] + tp - M)
    for s in range(n):
        for k in ks:
            model.add_row(f"eq27_s{s + 1}_k{k}",
                          {f"t_s{s + 1}": 1, f"tld_k{k}": -1, yname(k, None, s): -M},
                          ">=", T[dep, s] + tp - M)
    for s in range(n):
        for k in range(2, K + 2):
            model.add_row(f"eq28_s{s + 1}_k{k}",
                          {f"tld_k{k}": 1, f"t_s{s + 1}": -1, yname(k - 1, s, None): -M},
                          ">=", T[s, dep] - M)
    for s in range(n):
        model.add_row(f"eq29_s{s + 1}", {f"t_s{s + 1}": 1}, ">=", inst.release_of_item(s) + tp)
    return model


def build_makespan_mip(inst: Instance) -> MipModel:
    model = _build(inst, batch_bound(inst), "makespan")
    model.add_var("z")
    for k in range(1, model.K + 2):
        model.add_row(f"eqz_k{k}", {"z": 1, f"tld_k{k}": -1}, ">=", 0)
    model.objective = {"z": 1.0}
    return model


def build_turnover_mip(inst: Instance) -> MipModel:
    model = _build(inst, inst.n_orders, "turnover")
    no = inst.n_orders
    N = model.big_n
    for j in range(no):
        model.add_var(f"tord_o{j + 1}")
    for j in range(no):
        for k in range(1, model.K + 1):
            model.add_row(f"eqto_o{j + 1}_k{k}",
                          {f"tord_o{j + 1}": 1, f"tld_k{k + 1}": -1, f"x_k{k}_o{j + 1}": -N},
                          ">=", -N)
    model.objective = {f"tord_o{j + 1}": 1.0 / no for j in range(no)}
    model.objective_constant = -sum(o.release for o in inst.orders) / no
    return model


def build_mip(inst: Instance, objective: str) -> MipModel:
    if objective == "makespan":
        return build_makespan_mip(inst)
    if objective == "turnover":
        return build_turnover_mip(inst)
    raise ValueError(f"unknown objective {objective!r}")


# ------------------------------------------------------------------ LP text

def _fmt(x: float) -> str:
    return repr(float(x))


def _expr(coefs: dict) -> list:
    terms = []
    for v, c in coefs.items():
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = v if mag == 1 else f"{_fmt(mag)} {v}"
        terms.append(f"{sign} {body}")
    if not terms:
        terms = ["+ 0 " + CONST]
    return terms


def _wrap(head: str, terms: list, tail: str = "") -> str:
    lines = []
    cur = head
    for t in terms:
        if len(cur) + len(t) > 200:
            lines.append(cur)
            cur = "   "
        cur += " " + t
    cur += tail
    lines.append(cur)
    return "\n".join(lines)


def lp_text(model: MipModel) -> str:
    out = [f"\\ {model.objective_kind} model, K = {model.K}, M = {model.big_m!r}"]
    out.append("Minimize")
    obj = dict(model.objective)
    if model.objective_constant:
        obj[CONST] = obj.get(CONST, 0.0) + model.objective_constant
    out.append(_wrap(" obj:", _expr(obj)))
    out.append("Subject To")
    sense = {"<=": "<=", ">=": ">=", "=": "="}
    for name, coefs, s, rhs in model.rows:
        out.append(_wrap(f" {name}:", _expr(coefs), f" {sense[s]} {_fmt(rhs)}"))
    out.append("Bounds")
    for v, (kind, lb, ub) in model.variables.items():
        if kind == "B":
            continue
        if lb == ub:
            out.append(f" {v} = {_fmt(lb)}")
        elif ub != math.inf:
            out.append(f" {_fmt(lb)} <= {v} <= {_fmt(ub)}")
        elif lb != 0:
            out.append(f" {v} >= {_fmt(lb)}")
    out.append("Binaries")
    bins = [v for v, (kind, _, _) in model.variables.items() if kind == "B"]
    for i in range(0, len(bins), 8):
        out.append(" " + " ".join(bins[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(model: MipModel, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(lp_text(model))
    os.replace(tmp, path)


def read_solution(model: MipModel, path) -> dict:
    """Parse ``name value`` lines; other lines are ignored."""
    values = {}
    with open(path) as fh:
        for line in fh:
            toks = line.split()
            for i, tok in enumerate(toks[:-1]):
                if tok in model.variables:
                    try:
                        values[tok] = float(toks[i + 1])
                    except ValueError:
                        continue
                    break
    if not values:
        raise SolutionFileError(f"{path}: no variable values found")
    for v, (kind, lb, ub) in model.variables.items():
        if v not in values and lb == ub:
            values[v] = lb
        values.setdefault(v, 0.0)
    return values


def write_solution(values: dict, path) -> None:
    with open(path, "w") as fh:
        for v, x in values.items():
            fh.write(f"{v} {x!r}\n")


def check_solution(model: MipModel, values: dict, tol: float = TOL) -> list:
    """Violated rows and bounds, each reported with its row name."""
    bad = []
    for v, (kind, lb, ub) in model.variables.items():
        x = values.get(v, 0.0)
        if x < lb - tol or x > ub + tol:
            bad.append(f"bound {v}={x}")
        if kind == "B" and abs(x - round(x)) > tol:
            bad.append(f"integrality {v}={x}")
    for name, coefs, sense, rhs in model.rows:
        lhs = sum(c * values.get(v, 0.0) for v, c in coefs.items())
        scale = tol * max(1.0, abs(rhs), max((abs(c) for c in coefs.values()), default=1.0))
        if sense == "<=" and lhs > rhs + scale:
            bad.append(f"{name}: {lhs} > {rhs}")
        elif sense == ">=" and lhs < rhs - scale:
            bad.append(f"{name}: {lhs} < {rhs}")
        elif sense == "=" and abs(lhs - rhs) > scale:
            bad.append(f"{name}: {lhs} != {rhs}")
    return bad


def decode(model: MipModel, inst: Instance, values: dict) -> Solution:
    """Batches and pick sequences encoded by the arc variables."""
    n = inst.n_items
    batches = []
    seqs = []
    for k in range(1, model.K + 1):
        first = [s for s in range(n) if values.get(yname(k, None, s), 0) > 0.5]
        if not first:
            continue
        if len(first) > 1:
            raise ValueError(f"batch {k} leaves the depot more than once")
        seq = [first[0]]
        seen = {first[0]}
        while True:
            cur = seq[-1]
            nxt = [l for l in range(n) if l != cur and values.get(yname(k, cur, l), 0) > 0.5]
            if not nxt:
                break
            if len(nxt) > 1 or nxt[0] in seen:
                raise ValueError(f"batch {k} does not form a simple path")
            seq.append(nxt[0])
            seen.add(nxt[0])
        orders = []
        for s in seq:
            o = inst.items[s].order_id
            if o not in orders:
                orders.append(o)
        batches.append(orders)
        seqs.append(seq)
    covered = {s for seq in seqs for s in seq}
    if len(covered) != n:
        missing = sorted(set(range(n)) - covered)
        raise ValueError(f"items {missing} lie on arcs detached from the depot (subtour)")
    return Solution.of(batches, seqs)


def encode(model: MipModel, inst: Instance, sol: Solution) -> dict:
    """Variable assignment of a solution with its earliest-pick times."""
    bad = validate(inst, sol)
    if bad:
        raise ValueError("; ".join(bad))
    if len(sol.batches) > model.K:
        raise ValueError(f"solution uses {len(sol.batches)} batches, model allows {model.K}")
    sched = reconstruct(inst, sol)
    values = {v: 0.0 for v in model.variables}
    values[CONST] = 1.0
    for b, (orders, seq) in enumerate(zip(sol.batches, sol.item_sequence)):
        k = b + 1
        path = [None] + list(seq) + [None]
        for i, l in zip(path, path[1:]):
            values[yname(k, i, l)] = 1.0
        for o in orders:
            values[f"x_k{k}_o{o + 1}"] = 1.0
        values[f"tld_k{k}"] = sched.batch_start[b]
    for k in range(len(sol.batches) + 1, model.K + 2):
        values[f"tld_k{k}"] = sched.makespan
    for s in range(inst.n_items):
        values[f"t_s{s + 1}"] = sched.completion[s]
    if model.objective_kind == "makespan":
        values["z"] = sched.makespan
    else:
        for j in range(inst.n_orders):
            values[f"tord_o{j + 1}"] = sched.order_completion[j]
    return values


# ------------------------------------------------------------ solver hook

def available_solver() -> str | None:
    try:
        import highspy  # noqa: F401
        return "highspy"
    except ImportError:
        pass
    for exe in ("highs", "cbc"):
        if shutil.which(exe):
            return exe
    return None


def solve_lp(lp_path, sol_path, time_limit: float = 600.0) -> float:
    """Solve an LP file with an external solver and write ``name value`` lines."""
    solver = available_solver()
    if solver is None:
        raise RuntimeError("no MIP solver available (install highspy, highs or cbc)")
    if solver == "highspy":
        import highspy
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("time_limit", float(time_limit))
        h.setOptionValue("mip_rel_gap", 0.0)
        h.readModel(str(lp_path))
        h.run()
        lp = h.getLp()
        sol = h.getSolution()
        names = list(lp.col_names_)
        with open(sol_path, "w") as fh:
            for nm, x in zip(names, sol.col_value):
                fh.write(f"{nm} {x!r}\n")
        return float(h.getInfo().objective_function_value)
    if solver == "highs":
        with tempfile.TemporaryDirectory() as tmp:
            raw = os.path.join(tmp, "out.sol")
            subprocess.run([solver, "--model_file", str(lp_path), "--solution_file", raw,
                            "--time_limit", str(time_limit)], check=True, capture_output=True)
            shutil.copy(raw, sol_path)
        return float("nan")
    subprocess.run([solver, str(lp_path), "solve", "solu", str(sol_path)], check=True,
                   capture_output=True)
    return float("nan")

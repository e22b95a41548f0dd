import re
from fractions import Fraction

import pytest

from oracles import all_solutions, random_instance
from orderpick import mip_export
from orderpick.dp_core import solve_makespan
from orderpick.dp_turnover import solve_turnover
from orderpick.instance import golden_path, load
from orderpick.mip_export import (SolutionFileError, available_solver, batch_bound, build_mip,
                                  check_solution, decode, encode, lp_text, read_solution,
                                  solve_lp, write_lp, write_solution)
from orderpick.schedule import Solution, evaluate, reconstruct, validate

needs_solver = pytest.mark.skipif(available_solver() is None, reason="no MIP solver installed")


def test_batch_bounds():
    inst = load(golden_path("i1"))
    assert batch_bound(inst) == 2
    assert build_mip(inst, "makespan").K == 2
    assert build_mip(inst, "turnover").K == 3
    one = random_instance(0, max_orders=1, max_items=1).replace(capacity=2)
    assert batch_bound(one) == 1
    assert batch_bound(one.replace(capacity=1)) == 1


def test_variable_counts():
    for seed in range(10):
        inst = random_instance(seed)
        m = build_mip(inst, "makespan")
        n, K = inst.n_items, m.K
        assert m.count("y_") == K * (n + 1) * n
        assert m.count("x_") == K * inst.n_orders
        assert m.count("t_s") == n
        assert m.count("tld_") == K + 1


def test_turnover_constant():
    inst = load(golden_path("i2"))
    m = build_mip(inst, "turnover")
    assert Fraction(m.objective_constant).limit_denominator(100) == Fraction(-17, 3)
    assert "obj_const" in lp_text(m).split("Subject To")[0]


def test_lp_rows_are_named():
    m = build_mip(load(golden_path("i1")), "makespan")
    text = lp_text(m)
    for name in ("eq18_s1", "eq26_s2_i1", "eq27_s3_k1", "eq29_s3", "eqz_k1"):
        assert re.search(rf"^\s*{name}:", text, re.M), name
    assert "Binaries" in text or "Binary" in text
    assert text.rstrip().endswith("End")


def _small_instances(objective):
    for seed in range(40):
        inst = random_instance(seed, max_orders=3, max_items=4, pick_times=(1.0, 3.0))
        yield inst, build_mip(inst, objective)


@pytest.mark.parametrize("objective", ["makespan", "turnover"])
def test_every_solution_encodes_to_a_feasible_point(objective):
    checked = 0
    for inst, m in _small_instances(objective):
        for part, seqs in all_solutions(inst, max_batches=m.K):
            sol = Solution.of(part, seqs)
            sched = reconstruct(inst, sol)
            if max(sched.completion) > m.big_m:
                continue
            values = encode(m, inst, sol)
            assert check_solution(m, values) == []
            assert m.objective_value(values) == pytest.approx(evaluate(inst, sol, objective))
            checked += 1
    assert checked > 100


def _canonical(sol):
    return [sorted(b) for b in sol.batches], sol.item_sequence


def test_decode_inverts_encode():
    for inst, m in _small_instances("makespan"):
        for part, seqs in all_solutions(inst, max_batches=m.K):
            sol = Solution.of(part, seqs)
            assert _canonical(decode(m, inst, encode(m, inst, sol))) == _canonical(sol)


def test_encode_rejects_too_many_batches():
    inst = load(golden_path("i1"))
    m = build_mip(inst, "makespan")
    with pytest.raises(ValueError, match="batches"):
        encode(m, inst, Solution.of([[0], [1], [2]], [[0], [1], [2]]))


def test_tampered_release_is_reported():
    inst = load(golden_path("i2"))
    m = build_mip(inst, "makespan")
    values = encode(m, inst, solve_makespan(inst).solution)
    values["t_s3"] = 16.0
    assert any(v.startswith("eq29_s3") for v in check_solution(m, values))


def test_solution_file_round_trip(tmp_path):
    inst = load(golden_path("i1"))
    m = build_mip(inst, "makespan")
    values = encode(m, inst, solve_makespan(inst).solution)
    path = tmp_path / "x.sol"
    write_solution(values, path)
    with open(path, "a") as fh:
        fh.write("# comment line\nObjective 16\n")
    assert read_solution(m, path) == values
    bad = tmp_path / "bad.sol"
    bad.write_text("not a solution\n")
    with pytest.raises(SolutionFileError):
        read_solution(m, bad)


def test_decode_rejects_detached_cycles():
    inst = random_instance(1000, max_orders=3, max_items=4, explicit=False)
    m = build_mip(inst, "makespan")
    values = encode(m, inst, solve_makespan(inst).solution)
    values = {k: (0.0 if k.startswith("y_") else x) for k, x in values.items()}
    values[mip_export.yname(1, None, 0)] = values[mip_export.yname(1, 0, None)] = 1.0
    values[mip_export.yname(1, 1, 2)] = values[mip_export.yname(1, 2, 1)] = 1.0
    with pytest.raises(ValueError, match="subtour"):
        decode(m, inst, values)


@needs_solver
def test_first_worked_instance_solved(tmp_path):
    inst = load(golden_path("i1"))
    m = build_mip(inst, "makespan")
    write_lp(m, tmp_path / "i1.lp")
    solve_lp(tmp_path / "i1.lp", tmp_path / "i1.sol")
    values = read_solution(m, tmp_path / "i1.sol")
    assert m.objective_value(values) == pytest.approx(16.0, abs=1e-6)
    assert validate(inst, decode(m, inst, values)) == []


@needs_solver
def test_turnover_model_solved(tmp_path):
    inst = load(golden_path("i2"))
    m = build_mip(inst, "turnover")
    write_lp(m, tmp_path / "i2.lp")
    solve_lp(tmp_path / "i2.lp", tmp_path / "i2.sol")
    values = read_solution(m, tmp_path / "i2.sol")
    assert m.objective_value(values) == pytest.approx(25 / 3, abs=1e-6)
    assert m.objective_value(values) <= solve_turnover(inst).avg_turnover + 1e-9


@needs_solver
def test_larger_big_m_gives_the_same_optimum(tmp_path, monkeypatch):
    orig = mip_export.big_m_values
    for seed in range(5):
        inst = random_instance(2000 + seed, max_orders=3, max_items=4, pick_times=(1.0, 3.0))
        values = []
        for scale in (1.0, 10.0):
            monkeypatch.setattr(mip_export, "big_m_values",
                                lambda i, s=scale: tuple(s * x for x in orig(i)))
            m = build_mip(inst, "makespan")
            path = tmp_path / f"s{seed}_{scale}.lp"
            write_lp(m, path)
            solve_lp(path, tmp_path / "out.sol")
            values.append(m.objective_value(read_solution(m, tmp_path / "out.sol")))
        assert values[0] == pytest.approx(values[1], abs=1e-6)

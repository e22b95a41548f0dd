import csv
import json

import pytest

from orderpick import __version__
from orderpick.cli import EXIT_BUDGET, EXIT_INVALID, EXIT_USAGE, as_fraction, main
from orderpick.instance import golden_path, load
from orderpick.mip_export import available_solver, build_mip, encode
from orderpick.dp_core import solve_makespan

I1 = str(golden_path("i1"))
I2 = str(golden_path("i2"))
LADDER_POLICIES = ["VTWB", "+opt-routing", "+opt-batching", "+intervention", "+no-wait",
                   "Reopt*"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_as_fraction():
    assert as_fraction(40 / 3) == "40/3"
    assert as_fraction(16.0) == "16"
    assert as_fraction(0.123456789) == "0.123456789"


def test_solve_turnover_prints_the_exact_average(capsys):
    assert main(["solve", I1, "--objective", "turnover", "--fifo-order-start"]) == 0
    out = capsys.readouterr().out
    assert "avg_turnover 40/3" in out
    assert "batches o1,o2 | o3" in out


def test_solve_makespan(capsys):
    assert main(["solve", I1]) == 0
    assert "makespan 16" in capsys.readouterr().out


def test_solve_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", I2, "--objective", "turnover", "--out", str(out),
                     "--trace", str(out) + ".jsonl"]) == 0
    for name in ("solution.json", "schedule.csv", "stats.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    rows = [json.loads(line) for line in open(tmp_path / "a.jsonl")]
    assert rows[0]["parent"] == -1 and "comp_plus" in rows[0]


def test_solve_budget_exit_code(capsys):
    assert main(["solve", I1, "--budget", "3"]) == EXIT_BUDGET
    assert "error" in capsys.readouterr().err


def test_missing_instance_is_a_usage_error():
    assert main(["solve", "/nonexistent/inst.json"]) == EXIT_USAGE


def test_bad_arguments_exit_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        main(["solve", I1, "--objective", "speed"])
    assert exc.value.code == EXIT_USAGE


def test_invalid_instance_exit_code(tmp_path):
    doc = json.load(open(I1))
    doc["picker"]["c"] = 0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["solve", str(path)]) == EXIT_INVALID


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_gen_single_and_many(tmp_path):
    one = tmp_path / "one.json"
    assert main(["gen", "--orders", "4", "--seed", "3", "-o", str(one)]) == 0
    assert load(one).n_orders == 4
    many = tmp_path / "many"
    assert main(["gen", "--orders", "3", "--count", "3", "-o", str(many)]) == 0
    assert sorted(p.name for p in many.iterdir()) == ["inst_0.json", "inst_1.json", "inst_2.json"]


def _write_solution(path, values):
    path.write_text("".join(f"{k} {v!r}\n" for k, v in values.items()))


def test_export_and_check_solution(tmp_path, capsys):
    lp = tmp_path / "i1.lp"
    assert main(["export-mip", I1, "-o", str(lp)]) == 0
    assert lp.read_text().strip()
    inst = load(I1)
    model = build_mip(inst, "makespan")
    values = encode(model, inst, solve_makespan(inst).solution)
    sol = tmp_path / "ok.sol"
    _write_solution(sol, values)
    capsys.readouterr()
    assert main(["check-solution", I1, str(sol)]) == 0
    assert "feasible" in capsys.readouterr().out


def test_check_solution_exit_codes(tmp_path):
    inst = load(I1)
    model = build_mip(inst, "makespan")
    values = encode(model, inst, solve_makespan(inst).solution)
    values = dict(values)
    broken = next(k for k in values if k.startswith("x"))
    values[broken] = 1.0 - values[broken]
    bad = tmp_path / "bad.sol"
    _write_solution(bad, values)
    assert main(["check-solution", I1, str(bad)]) == EXIT_INVALID
    garbage = tmp_path / "garbage.sol"
    garbage.write_text("this is not a solution\n")
    assert main(["check-solution", I1, str(garbage)]) == EXIT_USAGE


@pytest.mark.skipif(available_solver() is None, reason="no MIP solver installed")
def test_export_and_solve(tmp_path, capsys):
    lp, sol = tmp_path / "i1.lp", tmp_path / "i1.sol"
    assert main(["export-mip", I1, "-o", str(lp), "--solve", str(sol)]) == 0
    capsys.readouterr()
    assert main(["check-solution", I1, str(sol)]) == 0
    assert "schedule objective 16.0" in capsys.readouterr().out


def test_simulate_and_report(tmp_path, capsys):
    manifest = tmp_path / "manifest.yaml"
    manifest.write_text("seeds: 20\ngenerator: {n_orders: 6}\n"
                        f"policies: {json.dumps(LADDER_POLICIES)}\nobjectives: [makespan]\n")
    out = tmp_path / "results"
    assert main(["simulate", str(manifest), "-o", str(out)]) == 0
    rows = _rows(out / "results.csv")
    assert len(rows) == 120
    assert {r["instance"] for r in rows} == {f"seed{s}" for s in range(20)}
    assert all(float(r["gap"]) >= -1e-9 for r in rows)
    assert len(list((out / "traces").iterdir())) == 120
    assert len(_rows(out / "cios_waiting.csv")) == 20
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 6
    assert len(_rows(out / "ladder_means.csv")) == 6
    assert len(_rows(out / "interventions.csv")) == 6
    assert len(_rows(out / "waiting_taxonomy.csv")) == 1


def test_simulate_with_instance_list_and_workers(tmp_path):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"instances": [I1, I2], "policies": ["FIFO", "Reopt*"],
                                    "objectives": ["makespan", "turnover"]}))
    out = tmp_path / "r"
    assert main(["simulate", str(manifest), "-o", str(out), "--workers", "2"]) == 0
    rows = _rows(out / "results.csv")
    assert len(rows) == 8
    assert [r["instance"] for r in rows[:4]] == ["i1"] * 4


@pytest.mark.parametrize("text", ["seeds: 2\n", "policies: [VTWB]\n",
                                  "seeds: 2\npolicies: [nonsense]\n",
                                  "seeds: 2\npolicies: [VTWB]\nobjectives: [speed]\n"])
def test_bad_manifests(tmp_path, text):
    manifest = tmp_path / "m.yaml"
    manifest.write_text(text)
    assert main(["simulate", str(manifest), "-o", str(tmp_path / "r")]) in (EXIT_USAGE,
                                                                             EXIT_INVALID)

import json
import subprocess
import sys

import pytest

from beliefgames.cli import main
from beliefgames.formats import load_game, loads_report, save_game, save_profile
from beliefgames.game import StrategyProfile
from beliefgames.scenarios import (
    TruncatedNormalSpec,
    bos_equilibria,
    build_battle_of_sexes,
    build_public_good_discretized,
    cyclic_game,
    generate_random_game,
    matching_pennies,
)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def bos_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("games") / "bos.json"
    save_game(build_battle_of_sexes(1.0), path)
    return path


# -- check -------------------------------------------------------------------------


def test_check_bos(capsys, bos_file):
    code, out, err = run(capsys, "check", bos_file, "--nu", "canonical")
    report = loads_report(out)
    assert code == 0 and report["absolute_continuity"]["ok"]
    assert not report["consistency"]["feasible"]
    assert "infeasible (residual=" in err


def test_check_reports_witness_for_null_type(capsys, tmp_path):
    doc = {
        "players": 2,
        "states": [{"label": "s", "value": 0.0}],
        "types": [[0.0, 1.0], [0.0]],
        "actions": [[0.0], [0.0]],
        "payoffs": [{"expr": "0"}, {"expr": "0"}],
        "beliefs": [{"table": [1.0, 1.0]}, {"table": [0.5, 0.5]}],
        "nu": {"s": [1.0], "t": [[1.0, 0.0], [1.0]]},
    }
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    code, out, err = run(capsys, "check", path)
    report = loads_report(out)
    assert code == 1
    assert report["absolute_continuity"]["witness"]["player"] == 2
    assert "player 2" in err
    # the canonical measure dominates the same beliefs
    assert run(capsys, "check", path, "--nu", "canonical")[0] == 0


def test_check_truncated_file(capsys, bos_file, tmp_path):
    text = bos_file.read_text()
    path = tmp_path / "cut.json"
    path.write_text(text[: len(text) // 3])
    code, out, err = run(capsys, "check", path)
    assert code == 2 and out == "" and "line" in err and "column" in err


# -- solve -------------------------------------------------------------------------


@pytest.mark.parametrize("start, action", [("first", 0), ("last", 1)])
def test_solve_bos_pure(capsys, bos_file, tmp_path, start, action):
    out_path = tmp_path / "prof.json"
    code, out, _ = run(capsys, "solve", bos_file, "--start", start, "--out", out_path)
    report = loads_report(out)
    assert code == 0 and report["verdicts"]["BE"] and report["converged"]
    strategies = json.loads(out_path.read_text())["strategies"]
    assert all(row[action] == 1.0 for table in strategies for row in table)


def test_solve_public_good(capsys, tmp_path):
    spec = TruncatedNormalSpec(0.0, 2.0, 1.0)
    path = tmp_path / "pg.json"
    save_game(build_public_good_discretized(spec, spec, 201).game, path)
    code, out, _ = run(capsys, "solve", path, "--eps", 0.02)
    assert code == 0
    assert loads_report(out)["max_interim_regret"] <= 0.02


def test_solve_cycling_game(capsys, tmp_path):
    path = tmp_path / "cyc.json"
    save_game(cyclic_game(), path)
    code, out, err = run(capsys, "solve", path, "--method", "iterated_br", "--max-iters", 50)
    assert code == 3 and not loads_report(out)["converged"]
    assert "did not converge" in err


def test_solve_enumerate_without_pure_equilibrium(capsys, tmp_path):
    path = tmp_path / "mp.json"
    save_game(matching_pennies(), path)
    assert run(capsys, "solve", path, "--method", "enumerate_pure")[0] == 3


def test_solve_bad_flags(capsys, bos_file):
    assert run(capsys, "solve", bos_file, "--eps", -1)[0] == 2
    assert run(capsys, "solve", bos_file, "--method", "newton")[0] == 2


def test_solve_is_deterministic(capsys, tmp_path):
    path = tmp_path / "r.json"
    save_game(generate_random_game(3, (2, 2, 3, 2)), path)
    a = run(capsys, "solve", path, "--start", "random", "--seed", 9)
    b = run(capsys, "solve", path, "--start", "random", "--seed", 9)
    assert a == b


# -- verify ------------------------------------------------------------------------


def test_verify_mixed_equilibrium(capsys, bos_file, tmp_path):
    g, _ = load_game(bos_file)
    path = tmp_path / "mixed.json"
    save_profile(bos_equilibria(g, 1.0)["mixed"], path)
    code, out, _ = run(capsys, "verify", bos_file, path)
    assert code == 0 and loads_report(out)["verdict_BE"]


def test_verify_perturbed_profile(capsys, bos_file, tmp_path):
    g, _ = load_game(bos_file)
    tables = [t.copy() for t in bos_equilibria(g, 1.0)["mixed"].tables]
    tables[1][4, 0] += 0.1
    tables[1][4] /= tables[1][4].sum()
    path = tmp_path / "bent.json"
    save_profile(StrategyProfile.from_tables(tables), path)
    code, out, err = run(capsys, "verify", bos_file, path)
    report = loads_report(out)
    assert code == 1 and not report["verdict_BE"]
    worst = report["worst"]
    assert worst["player"] == 1 and f"player {worst['player']}, type {worst['type']}" in err


def test_verify_wrong_action_count(capsys, bos_file, tmp_path):
    path = tmp_path / "wide.json"
    path.write_text(json.dumps({"strategies": [[[1 / 3] * 3] * 9, [[0.5, 0.5]] * 9]}))
    code, _, err = run(capsys, "verify", bos_file, path)
    assert code == 2 and "shape" in err


# -- enumerate ---------------------------------------------------------------------


def test_enumerate_forward_inclusion(capsys, tmp_path):
    path = tmp_path / "r.json"
    save_game(generate_random_game(1, (2, 2, 3, 2)), path)
    code, out, _ = run(capsys, "enumerate", path, "--nu", "canonical")
    report = loads_report(out)
    assert code == 0
    assert all(c in report["surrogate"] for c in report["bayesian"])
    assert report["bayesian_only"] == []


def test_enumerate_matching_pennies(capsys, tmp_path):
    path = tmp_path / "mp.json"
    save_game(matching_pennies(), path)
    report = loads_report(run(capsys, "enumerate", path, "--nu", "canonical")[1])
    assert report["bayesian"] == [] and report["surrogate"] == []


def test_enumerate_dominance_solvable(capsys, tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({
        "players": 2,
        "states": [{"label": "s", "value": 0.0}],
        "types": [[0.0], [0.0]],
        "actions": [[0.0, 1.0], [0.0, 1.0]],
        "payoffs": [{"expr": "a1 + a2"}, {"expr": "a2 - a1"}],
        "beliefs": [{"table": [1.0]}, {"table": [1.0]}],
    }))
    report = loads_report(run(capsys, "enumerate", path, "--nu", "canonical")[1])
    assert report["bayesian"] == report["surrogate"] == [[[1], [1]]]


def test_enumerate_guard(capsys, tmp_path):
    path = tmp_path / "big.json"
    save_game(generate_random_game(0, (2, 1, 21, 2)), path)
    assert run(capsys, "enumerate", path)[0] == 2


# -- reproduce ---------------------------------------------------------------------


def test_reproduce_bos(capsys):
    code, out, _ = run(capsys, "reproduce", "bos", "--c", 1)
    report = loads_report(out)
    mixed = [r for r in report["equilibria"] if r["profile"] == "mixed"][0]
    assert code == 0 and (mixed["p"], mixed["q"]) == (0.5, 0.5)
    assert all(r["verdict_BE"] for r in report["equilibria"])
    assert report["pure_constant"] == [[[0] * 9, [0] * 9], [[1] * 9, [1] * 9]]


def test_reproduce_shared_signal(capsys):
    report = loads_report(run(capsys, "reproduce", "shared-signal", "--m", "4,8,16")[1])
    assert [r["condition_number"] for r in report["rows"]] == [4, 8, 16]


def test_reproduce_gaussian_consistency(capsys):
    report = loads_report(run(capsys, "reproduce", "gaussian-consistency", "--s1", 2, "--s2", 3)[1])
    assert report["criterion"] == -0.5 and report["residual"] > 1e-8


def test_reproduce_public_good_and_cournot(capsys):
    pg = loads_report(run(capsys, "reproduce", "public-good", "--m", "21,41")[1])
    assert pg["residual"] <= 1e-10 and len(pg["discretized"]) == 2
    co = loads_report(run(capsys, "reproduce", "cournot")[1])
    assert co["complete_information"]["matches_oracle"] and co["inconsistent"]["verdict_BE"]


def test_reproduce_unknown_scenario(capsys):
    code, _, err = run(capsys, "reproduce", "prisoners")
    assert code == 2 and "shared-signal" in err


def test_bad_parameter_is_input_error(capsys):
    assert run(capsys, "reproduce", "public-good", "--m", "5")[0] == 2
    assert run(capsys, "reproduce", "bos", "--s1", 0.5)[0] == 2


def test_module_entry_point(bos_file):
    proc = subprocess.run([sys.executable, "-m", "beliefgames", "check", str(bos_file)],
                          capture_output=True, text=True, env={"NO_COLOR": "1", "PATH": ""})
    assert proc.returncode == 0
    assert "\033[" not in proc.stderr
    assert json.loads(proc.stdout)["valid"]

import json

import pytest

from coverdyn.cli import main
from coverdyn.constructions import build_gf
from coverdyn.game import save_game
from coverdyn.rules import mc_rule


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pob_and_poa(capsys):
    code, out, _ = run(capsys, "pob", "--rule", "mc", "--n", "3", "--json")
    assert code == 0 and json.loads(out)["pob_one_round"] == "1/2"
    code, out, _ = run(capsys, "poa", "--rule", "pareto:X=4/5", "--n", "4", "--json")
    assert code == 0 and json.loads(out)["poa"] == "5/9"


def test_rule_output(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "rule", "--rule", "pareto:C=5/9", "--n", "3", "--out", str(path))
    assert code == 0
    assert "f(2) = 1/5" in out
    assert json.loads(path.read_text())["values"] == ["1", "1/5", "0"]


def test_frontier(capsys, tmp_path):
    code, out, _ = run(capsys, "frontier", "--C", "0.5")
    assert code == 0
    assert out.splitlines() == ["C,pob_opt", "0.5,0.5"]
    path = tmp_path / "f.csv"
    code, out, _ = run(capsys, "frontier", "--grid", "5", "--out", str(path))
    assert code == 0 and len(path.read_text().splitlines()) == 6
    code, _, err = run(capsys, "frontier", "--C", "0.7")
    assert code == 2 and "error" in err


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--rule", "pareto:X=4/5", "--n", "4", "--k", "2", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["pob_formula"] == doc["lp_pob"] == doc["construction_pob"] == "5/11"
    assert doc["gf_pob"] == "1/2"
    assert doc["all_consistent"] is True


def test_lp_verify(capsys, tmp_path):
    dump = tmp_path / "lp.txt"
    code, out, _ = run(capsys, "lp-verify", "--rule", "poa-opt", "--n", "3", "--dump", str(dump), "--json")
    assert code == 0 and json.loads(out)["equal"] is True
    assert dump.read_text().startswith("\\ ")


def test_worstcase_and_gf(capsys, tmp_path):
    code, out, _ = run(capsys, "worstcase", "--rule", "mc", "--n", "3", "--json")
    assert code == 0 and json.loads(out)["matched"] is True
    path = tmp_path / "g.json"
    code, out, _ = run(capsys, "gf", "--rule", "mc", "--n", "2", "--k", "3", "--out", str(path), "--json")
    assert code == 0 and json.loads(out)["achieved"] == "1/2"
    assert json.loads(path.read_text())["format"] == "set-covering-game"


def test_dynamics(capsys, tmp_path):
    game = tmp_path / "g.json"
    save_game(build_gf(mc_rule(2), 2), game)
    traj, ends = tmp_path / "t.csv", tmp_path / "e.json"
    code, out, _ = run(capsys, "dynamics", "--game", str(game), "--rule", "mc", "--k", "2",
                       "--out", str(traj), "--end-states", str(ends), "--json")
    assert code == 0
    assert len(traj.read_text().splitlines()) == 5
    assert json.loads(out)["end_state_count"] == len(json.loads(ends.read_text()))


def test_search(capsys, tmp_path):
    fam = tmp_path / "fam.json"
    fam.write_text(json.dumps({"n": 2, "max_actions": 2, "max_resources": 2}))
    code, out, _ = run(capsys, "search", "--family", str(fam), "--rule", "mc", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["above_bound"] is True


def test_montecarlo(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"runs": 5, "n": 3, "set_size": 3, "rounds": 2}))
    out_csv, summary = tmp_path / "s.csv", tmp_path / "sum.json"
    code, out, _ = run(capsys, "montecarlo", "--config", str(cfg), "--out", str(out_csv),
                       "--summary", str(summary), "--seed", "4")
    assert code == 0
    assert len(out_csv.read_text().splitlines()) == 1 + 3 * 2 + 1
    assert "final_mean" in json.loads(summary.read_text())


def test_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"values": ["0", "1"]}))
    code, _, err = run(capsys, "pob", "--rule", f"custom:@{bad}", "--n", "2")
    assert code == 2 and "f(1)" in err
    code, _, _ = run(capsys, "pob", "--rule", "nonsense", "--n", "2")
    assert code == 2
    short = tmp_path / "short.json"
    short.write_text(json.dumps({"values": ["1", "1/2"]}))
    code, _, _ = run(capsys, "pob", "--rule", f"custom:@{short}", "--n", "3")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["montecarlo", "--config", str(bad)])
    assert exc.value.code == 2

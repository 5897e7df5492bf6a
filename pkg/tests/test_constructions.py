import json
from fractions import Fraction

import pytest

from coverdyn.constructions import (
    GameFamily,
    build_gf,
    search_games,
    verify_gf,
    verify_worst_case,
    worst_case_one_round,
)
from coverdyn.dynamics import best_responses, empirical_pob, run_round
from coverdyn.errors import ConstructionInapplicableError, InvalidInputError, ResourceLimitError
from coverdyn.game import UtilityRule, welfare
from coverdyn.rules import ParetoParameter, mc_rule, pareto_rule, poa_optimal_rule, pob_one_round

F = Fraction

RULES = [
    mc_rule(6),
    poa_optimal_rule(6).to_exact(),
    pareto_rule(ParetoParameter(F(4, 5)), 6),
    UtilityRule((F(1),) * 6, name="ones"),
    UtilityRule((F(1), F(1, 2), F(1, 3), F(1, 4), F(1, 5), F(1, 6)), name="harmonic"),
]


@pytest.mark.parametrize("rule", RULES, ids=lambda r: r.name)
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_worst_case_is_tight(rule, n):
    rep = verify_worst_case(rule, n)
    assert rep.matched
    assert rep.achieved == pob_one_round(rule, n)


def test_worst_case_path_is_lowest_index_path():
    rule = pareto_rule(ParetoParameter(F(4, 5)), 4)
    g = worst_case_one_round(rule, 4)
    traj = run_round(g, rule, 1)
    assert welfare(g, traj.end) == 1
    assert all(s.action != 2 for s in traj.steps)


def test_worst_case_needs_minimum_at_n():
    rule = UtilityRule((F(1), F(0), F(1, 2)))
    with pytest.raises(ConstructionInapplicableError):
        worst_case_one_round(rule, 3)
    with pytest.raises(InvalidInputError):
        worst_case_one_round(mc_rule(2), 3)


@pytest.mark.parametrize("rule", RULES[:3], ids=lambda r: r.name)
@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_gf_is_one_half(rule, n, k):
    rep = verify_gf(rule, n, k)
    assert rep.achieved == F(1, 2)
    assert rep.matched


def test_gf_witness_is_tie_consistent():
    rule = poa_optimal_rule(4).to_exact()
    rep = verify_gf(rule, 2, 3)
    a = rep.witness.start
    for s in rep.witness.steps:
        assert s.action in best_responses(rep.game, rule, s.agent, a)
        a = a[:s.agent] + (s.action,) + a[s.agent + 1:]
    assert welfare(rep.game, a) == 1


def test_gf_float_rule_matches_exact():
    rule = poa_optimal_rule(4)
    ratio, _ = empirical_pob(build_gf(rule, 3), rule, 2, with_poa=False)
    assert ratio == pytest.approx(0.5)


def test_family_limits_and_roundtrip(tmp_path):
    with pytest.raises(ResourceLimitError):
        GameFamily(4, 2, 2)
    fam = GameFamily(2, 2, 3, value_grid=(F(0), F(1)))
    path = tmp_path / "fam.json"
    path.write_text(json.dumps(fam.to_dict()))
    assert GameFamily.load(path) == fam
    with pytest.raises(InvalidInputError):
        GameFamily.from_dict({"n": 2})


def test_search_respects_bound_and_finds_tight_game():
    best, game = search_games(GameFamily(2, 2, 3), mc_rule(2), 1)
    assert best == F(1, 2) == pob_one_round(mc_rule(2), 2)
    ratio, _ = empirical_pob(game, mc_rule(2), 1, with_poa=False)
    assert ratio == best


def test_search_independent_of_workers():
    fam = GameFamily(2, 2, 2)
    rule = pareto_rule(ParetoParameter(F(4, 5)), 2)
    one = search_games(fam, rule, 1, workers=1)
    four = search_games(fam, rule, 1, workers=4)
    assert one == four
    assert one[0] >= pob_one_round(rule, 2)


def test_search_cap():
    with pytest.raises(ResourceLimitError):
        search_games(GameFamily(3, 3, 4), mc_rule(3), 1, cap=1000)

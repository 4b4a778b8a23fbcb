import pickle
from dataclasses import replace
from fractions import Fraction

import pytest

from qrobust.core import InstanceBuilder, Quantifier, VarKind, fix_variables
from qrobust.errors import ConfigError, ModelContractError, NonSeparableError, TreeTooLargeError
from qrobust.problems import KnapsackParams, build_knapsack_qippu
from qrobust.search import (
    INFINITY,
    MoveOrdering,
    SearchConfig,
    SolveStatus,
    game_tree_leaves,
    legal_universal_moves,
    optimal_plays,
    oracle_solve,
    resolve_trailing,
    solve,
)


def test_infinity_orders_above_everything():
    assert Fraction(10 ** 9) < INFINITY
    assert INFINITY > Fraction(-1)
    assert not INFINITY < Fraction(0)
    assert INFINITY >= INFINITY
    assert min(INFINITY, Fraction(3)) == 3


def test_infinity_survives_pickling():
    assert pickle.loads(pickle.dumps(INFINITY)) is INFINITY


def test_coin_game(coin_game):
    result = solve(coin_game)
    assert result.status is SolveStatus.OPTIMAL
    assert result.value == 3
    assert result.first_stage == {0: 0}


def test_maximisation_reports_model_sense(max_game):
    result = solve(max_game)
    assert result.value == 1
    assert result.first_stage == {0: 1}
    assert oracle_solve(max_game).value == 1


def test_adversary_can_force_infeasibility(max_game):
    result = solve(fix_variables(max_game, {0: 2}))
    assert result.status is SolveStatus.INFEASIBLE
    assert result.value is INFINITY


def test_infeasible_first_stage():
    b = InstanceBuilder("nothing")
    b.new_block(Quantifier.EXISTS)
    x = b.add_var("x")
    b.ge({x: 1}, 2, name="impossible")
    result = solve(b.build())
    assert result.status is SolveStatus.INFEASIBLE
    assert result.first_stage == {}


def test_selection_waits_for_the_scenario(selection_qippu):
    result = solve(selection_qippu)
    assert result.value == 3
    assert result.first_stage == {0: 0, 1: 0}


def test_knapsack_protects_against_weight_increase(knapsack_qippu):
    result = solve(knapsack_qippu)
    assert result.value == 13
    assert result.first_stage == {0: 1, 1: 0}


@pytest.mark.parametrize("config", [
    SearchConfig(bounds_enabled=False),
    SearchConfig(move_ordering=MoveOrdering.DOMAIN_ASCENDING),
    SearchConfig(bounds_enabled=False, move_ordering=MoveOrdering.DOMAIN_ASCENDING),
])
def test_heuristics_do_not_change_values(config, selection_qippu, knapsack_qippu, coin_game):
    for instance in (selection_qippu, knapsack_qippu, coin_game):
        assert solve(instance, config).value == solve(instance).value


def test_pruned_search_visits_no_more_nodes_than_oracle(selection_qippu, knapsack_qippu, coin_game):
    for instance in (selection_qippu, knapsack_qippu, coin_game):
        pruned = solve(instance)
        full = oracle_solve(instance)
        assert pruned.value == full.value
        assert pruned.nodes <= full.nodes


def test_node_budget_gives_time_limit(knapsack_qippu):
    result = solve(knapsack_qippu, SearchConfig(node_limit=3))
    assert result.status is SolveStatus.TIME_LIMIT
    assert result.nodes == 4


@pytest.mark.parametrize("kwargs", [dict(time_limit_ms=0), dict(node_limit=0)])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SearchConfig(**kwargs)


def test_oracle_guard(selection_qippu):
    assert game_tree_leaves(selection_qippu) == 2 ** 6
    with pytest.raises(TreeTooLargeError):
        oracle_solve(selection_qippu, leaf_limit=10)


def test_legal_moves_respect_budgets():
    instance = build_knapsack_qippu(KnapsackParams(n=2, T=1, alpha=2, beta=1))
    assert legal_universal_moves(instance, {}, 1) == [(0, 0), (0, 1), (1, 0)]
    with pytest.raises(ConfigError):
        legal_universal_moves(instance, {}, 0)


def test_resolve_trailing_uses_active_scenario(selection_qippu):
    # x0 = (0, 0), scenario 1 revealed, item 1 bought afterwards
    assignment = {0: 0, 1: 0, 2: 1, 3: 0, 4: 1, 5: 0}
    assert resolve_trailing(selection_qippu, assignment) == 3
    with pytest.raises(ConfigError):
        resolve_trailing(selection_qippu, {0: 0})


def test_optimal_plays_cover_every_scenario(selection_qippu):
    plays = optimal_plays(selection_qippu)
    assert len(plays) == 2
    names = selection_qippu.var_names
    for play in plays:
        chosen = [names[j] for j, v in play.items() if names[j].startswith("x_") and v == 1]
        assert len(chosen) == 1
        assert play[names.index("z_1")] == 3 if play[2] == 1 else play[names.index("z_1")] == 2


def _trailing_in_equality():
    b = InstanceBuilder("coupled")
    b.new_block(Quantifier.EXISTS)
    x = b.add_var("x")
    b.new_block(Quantifier.FORALL)
    a = b.add_var("a")
    b.new_block(Quantifier.EXISTS)
    w = b.add_var("w", 0, 3, VarKind.TRAILING_CONTINUOUS)
    b.add_objective(w, 1)
    b.eq({w: 1, x: -1, a: -1}, 0, name="tie")
    b.universal_le({a: 1}, 1)
    return b.build()


def test_non_separable_trailing_variable_is_rejected():
    with pytest.raises(NonSeparableError):
        solve(_trailing_in_equality())


def test_missing_immediate_violation_is_a_contract_error():
    b = InstanceBuilder("late")
    b.new_block(Quantifier.EXISTS)
    b.add_var("x")
    b.new_block(Quantifier.FORALL)
    a1 = b.add_var("a1")
    b.new_block(Quantifier.EXISTS)
    b.add_var("y")
    b.new_block(Quantifier.FORALL)
    a2 = b.add_var("a2")
    b.new_block(Quantifier.EXISTS)
    b.add_var("z")
    b.universal_eq({a1: 1, a2: 1}, 0, name="late")
    with pytest.raises(ModelContractError):
        solve(b.build())


def test_fixing_the_first_stage_keeps_the_value(oracle_suite):
    for game in oracle_suite:
        result = solve(game)
        if result.status is not SolveStatus.OPTIMAL:
            continue
        fixed = fix_variables(game, result.first_stage)
        again = solve(fixed)
        assert again.value == result.value, game.name
        assert again.first_stage == result.first_stage
        assert oracle_solve(fixed).value == result.value


def _late_game(immediate_violation):
    b = InstanceBuilder("late", immediate_violation=immediate_violation)
    b.new_block(Quantifier.EXISTS)
    b.add_var("x")
    b.new_block(Quantifier.FORALL)
    a1 = b.add_var("a1")
    b.new_block(Quantifier.EXISTS)
    b.add_var("y")
    b.new_block(Quantifier.FORALL)
    a2 = b.add_var("a2")
    b.new_block(Quantifier.EXISTS)
    b.add_var("z")
    b.universal_eq({a1: 1, a2: 1}, 0, name="late")
    return b.build()


def test_undeclared_immediate_violation_is_checked_up_front():
    with pytest.raises(ModelContractError, match="cannot be completed"):
        solve(_late_game(immediate_violation=False))
    with pytest.raises(ModelContractError, match="no legal move"):
        solve(_late_game(immediate_violation=True))


def test_undeclared_property_that_holds_still_solves(coin_game):
    assert solve(replace(coin_game, immediate_violation=False)).value == 3


def test_undeclared_property_on_a_large_universal_part():
    b = InstanceBuilder("wide", immediate_violation=False)
    b.new_block(Quantifier.EXISTS)
    b.add_var("x")
    b.new_block(Quantifier.FORALL)
    qs = [b.add_var(f"q{k}") for k in range(13)]
    b.new_block(Quantifier.EXISTS)
    b.add_var("y")
    b.universal_le({q: 1 for q in qs}, 13)
    with pytest.raises(ModelContractError, match="general legality"):
        solve(b.build())

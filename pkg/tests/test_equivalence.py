"""
Every route to a game value must agree: alpha-beta search on each QIP model,
branch-and-bound on the flattened program and on the hand-built equivalent,
and the exhaustive oracle wherever its tree is small enough.
"""
from collections import Counter

import pytest

from qrobust.dep import flatten
from qrobust.mip import solve_mip
from qrobust.problems import LotSizingData, get_family, inventory
from qrobust.search import SolveStatus, game_tree_leaves, optimal_plays, oracle_solve, solve

# Oracle runs in the default suite stay below this many leaves.
ORACLE_LEAVES = 2 ** 13
SLOW_ORACLE_LEAVES = 2 ** 16

CASES = [
    ("sel", {"n": 2, "p": 1, "T": 1, "N": 2}),
    ("sel", {"n": 2, "p": 1, "T": 1, "N": 3}),
    ("sel", {"n": 2, "p": 1, "T": 2, "N": 2}),
    ("sel", {"n": 2, "p": 1, "T": 2, "N": 3}),
    ("sel", {"n": 4, "p": 2, "T": 1, "N": 2}),
    ("sel", {"n": 4, "p": 2, "T": 1, "N": 3}),
    ("sel", {"n": 4, "p": 2, "T": 2, "N": 2}),
    ("ass", {"n": 2, "T": 1, "N": 2}),
    ("ass", {"n": 2, "T": 1, "N": 3}),
    ("ass", {"n": 2, "T": 2, "N": 2}),
    ("lot", {"B": 2, "U": 2, "T": 1}),
    ("lot", {"B": 3, "U": 2, "T": 1}),
    ("lot", {"B": 2, "U": 1, "T": 2}),
    ("lot", {"B": 3, "U": 2, "T": 2}),
    ("kna", {"n": 2, "T": 1}),
    ("kna", {"n": 2, "T": 1, "alpha": 1, "beta": 1}),
]

SLOW_CASES = [
    ("lot", {"B": 2, "U": 2, "T": 3}),
    ("lot", {"B": 3, "U": 2, "T": 3}),
    ("lot", {"B": 3, "U": 2, "T": 4}),
    ("kna", {"n": 2, "T": 2}),
    ("kna", {"n": 3, "T": 1}),
    ("ass", {"n": 3, "T": 1, "N": 2}),
    ("sel", {"n": 6, "p": 3, "T": 1, "N": 3}),
]


def _case_id(case):
    family, values = case
    return family + "-" + "-".join(f"{k}{v}" for k, v in values.items())


def _agree(family, values, seed, oracle_leaves):
    fam = get_family(family)
    params = fam.params({**values, "seed": seed})
    games = [fam.build(model, params) for model in fam.models if model != "dep"]
    seen = set()
    for game in games:
        result = solve(game)
        assert result.status is SolveStatus.OPTIMAL
        seen.add(result.value)
        if game_tree_leaves(game) <= oracle_leaves:
            oracle = oracle_solve(game)
            seen.add(oracle.value)
            assert result.nodes <= oracle.nodes
    seen.add(solve_mip(flatten(games[0])).value)
    seen.add(solve_mip(fam.build("dep", params)).value)
    assert len(seen) == 1, f"{params.tag}: {sorted(seen)}"


@pytest.mark.parametrize("case", CASES, ids=_case_id)
@pytest.mark.parametrize("seed", range(20))
def test_models_agree(case, seed):
    _agree(*case, seed, ORACLE_LEAVES)


@pytest.mark.slow
@pytest.mark.parametrize("case", CASES, ids=_case_id)
def test_models_agree_wide(case):
    for seed in range(20, 50):
        _agree(*case, seed, ORACLE_LEAVES)


@pytest.mark.slow
@pytest.mark.parametrize("case", SLOW_CASES, ids=_case_id)
@pytest.mark.parametrize("seed", range(5))
def test_larger_models_agree(case, seed):
    _agree(*case, seed, SLOW_ORACLE_LEAVES)


# Structure of the optimal strategy

def _plays(family, values, seed, model):
    fam = get_family(family)
    params = fam.params({**values, "seed": seed})
    game = fam.build(model, params)
    assert game_tree_leaves(game) <= ORACLE_LEAVES
    named = [{game.var_names[j]: v for j, v in play.items()} for play in optimal_plays(game)]
    assert named
    return params, named


def _chosen(play, prefix="x_"):
    return [name.split("_")[1:] for name, v in play.items() if name.startswith(prefix) and v == 1]


@pytest.mark.parametrize("values", [
    {"n": 2, "p": 1, "T": 2, "N": 2},
    {"n": 4, "p": 2, "T": 1, "N": 3},
])
@pytest.mark.parametrize("seed", range(5))
def test_selection_plays_pick_p_distinct_items(values, seed):
    params, plays = _plays("sel", values, seed, "qippu")
    for play in plays:
        items = [item for _, item in _chosen(play)]
        assert len(items) == params.p
        assert len(set(items)) == len(items)
        assert sum(play[f"q_{t}_{k}"] for t in range(1, params.T + 1)
                   for k in range(1, params.N + 1)) == params.T


@pytest.mark.parametrize("values", [{"n": 2, "T": 1, "N": 2}, {"n": 2, "T": 1, "N": 3}])
@pytest.mark.parametrize("seed", range(5))
def test_assignment_plays_are_perfect_matchings(values, seed):
    params, plays = _plays("ass", values, seed, "qippu")
    for play in plays:
        chosen = _chosen(play)
        assert len(chosen) == params.n
        assert Counter(i for _, i, _ in chosen) == Counter(str(i) for i in range(1, params.n + 1))
        assert Counter(j for _, _, j in chosen) == Counter(str(j) for j in range(1, params.n + 1))


@pytest.mark.parametrize("values", [{"B": 2, "U": 2, "T": 2}, {"B": 3, "U": 2, "T": 2}])
@pytest.mark.parametrize("seed", range(5))
def test_lotsizing_plays_never_run_short(values, seed):
    params, plays = _plays("lot", values, seed, "qip")
    data = LotSizingData.generate(params)
    demands = set()
    for play in plays:
        basic = [[play[f"x_{t}_{k}"] for k in range(1, params.B + 1)] for t in range(params.T)]
        urgent = [[]] + [[play[f"y_{t}_{u}"] for u in range(1, params.U + 1)]
                         for t in range(1, params.T + 1)]
        high = [play[f"z_{t}"] for t in range(1, params.T + 1)]
        demands.add(tuple(high))
        assert all(level >= 0 for level in inventory(data, basic, urgent, high))
    assert len(demands) == 2 ** params.T


@pytest.mark.parametrize("values", [{"n": 2, "T": 1}, {"n": 2, "T": 1, "alpha": 1, "beta": 1}])
@pytest.mark.parametrize("seed", range(5))
def test_knapsack_plays_respect_the_budget(values, seed):
    params, plays = _plays("kna", values, seed, "qippu")
    for play in plays:
        raised = _chosen(play, prefix="z_")
        per_period = Counter(t for t, _ in raised)
        assert all(count <= params.period_budget for count in per_period.values())
        assert len(raised) <= params.total_budget

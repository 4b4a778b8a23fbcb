"""Shared fixtures: small hand-checked instances of every family."""
import pytest

from qrobust.core import InstanceBuilder, ObjectiveSense, Quantifier
from qrobust.problems import (
    KnapsackData,
    KnapsackParams,
    SelectionData,
    SelectionParams,
    build_knapsack_qippu,
    build_selection_qippu,
    get_family,
)

# Small generated instances whose full game trees the oracle can walk.
SMALL_FAMILY_CASES = [
    ("sel", {"n": 2, "p": 1, "T": 1, "N": 2}),
    ("ass", {"n": 2, "T": 1, "N": 2}),
    ("lot", {"B": 2, "U": 1, "T": 1}),
    ("kna", {"n": 2, "T": 1}),
]


@pytest.fixture
def selection_params():
    return SelectionParams(n=2, p=1, T=1, N=2)


@pytest.fixture
def selection_data():
    """Item 1 is cheap in scenario 1, item 2 in scenario 2; waiting costs at most 3."""
    return SelectionData(first_costs=(5, 9), costs=(((3, 100), (100, 2)),))


@pytest.fixture
def selection_qippu(selection_params, selection_data):
    return build_selection_qippu(selection_params, selection_data)


@pytest.fixture
def knapsack_params():
    return KnapsackParams(n=2, T=1, alpha=2, beta=2)


@pytest.fixture
def knapsack_data():
    """Only item 1 fits at first; both raised weights overflow the capacity."""
    return KnapsackData(
        profits=((10, 20), (7, 7)),
        weights=((5, 8), (4, 4)),
        extra=((5, 5),),
        bonus=(3, 3),
        capacity=6,
    )


@pytest.fixture
def knapsack_qippu(knapsack_params, knapsack_data):
    return build_knapsack_qippu(knapsack_params, knapsack_data)


@pytest.fixture
def coin_game():
    """
    min over x of max over a of (x + 2a + y) with x in 0..2, a in 0..1 and
    the reply y forced to cover a - x: value 3, first reached at x = 0.
    """
    b = InstanceBuilder("coin")
    b.new_block(Quantifier.EXISTS)
    x = b.add_var("x", 0, 2)
    b.new_block(Quantifier.FORALL)
    a = b.add_var("a", 0, 1)
    b.new_block(Quantifier.EXISTS)
    y = b.add_var("y", 0, 1)
    b.add_objective(x, 1)
    b.add_objective(a, 2)
    b.add_objective(y, 1)
    b.ge({x: 1, y: 1, a: -1}, 0, name="cover")
    b.universal_le({a: 1}, 1, name="budget")
    return b.build()


@pytest.fixture
def max_game():
    """max over x of min over a of (3x - 2a) with x + a <= 2, x in 0..2."""
    b = InstanceBuilder("maxgame", ObjectiveSense.MAXIMIZE)
    b.new_block(Quantifier.EXISTS)
    x = b.add_var("x", 0, 2)
    b.new_block(Quantifier.FORALL)
    a = b.add_var("a", 0, 1)
    b.new_block(Quantifier.EXISTS)
    s = b.add_var("s", 0, 2)
    b.add_objective(x, 3)
    b.add_objective(a, -2)
    b.eq({x: 1, a: 1, s: 1}, 2, name="slack")
    b.universal_le({a: 1}, 1, name="budget")
    return b.build()


@pytest.fixture
def oracle_suite(coin_game, max_game, selection_qippu, knapsack_qippu):
    games = [coin_game, max_game, selection_qippu, knapsack_qippu]
    for family, values in SMALL_FAMILY_CASES:
        fam = get_family(family)
        for seed in range(3):
            params = fam.params({**values, "seed": seed})
            games.extend(fam.build(model, params) for model in fam.models if model != "dep")
    return games

"""
Multistage robust knapsack with adversarial weight increases.

Purpose: Items are packed anew in each period. Before period t's packing the
adversary raises the weight of at most alpha items (at most beta over the whole
horizon); a bonus is paid for every item whose packing state is unchanged from
the previous period. Profit is maximised.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..core import InstanceBuilder, ObjectiveSense, QipInstance, Quantifier
from ..dep import DEFAULT_SCENARIO_CAP, DepBuilder, MipInstance, ScenarioNode, enumerate_scenarios
from ..errors import ConfigError
from .rng import SplitMix64

PROFIT_RANGE = (0, 100)
WEIGHT_RANGE = (0, 50)
EXTRA_RANGE = (5, 20)
BONUS_RANGE = (0, 50)


@dataclass(frozen=True)
class KnapsackParams:
    """``alpha`` and ``beta`` default to ceil(n/(T+1)) + 1 and n."""
    n: int
    T: int
    seed: int = 0
    alpha: Optional[int] = None
    beta: Optional[int] = None

    def __post_init__(self):
        if self.n < 1 or self.T < 1:
            raise ConfigError(f"knapsack needs n >= 1 and T >= 1, got n={self.n}, T={self.T}")
        if self.alpha is not None and self.alpha < 0:
            raise ConfigError(f"alpha must be non-negative, got {self.alpha}")
        if self.beta is not None and self.beta < 0:
            raise ConfigError(f"beta must be non-negative, got {self.beta}")

    @property
    def period_budget(self) -> int:
        if self.alpha is not None:
            return self.alpha
        return -(-self.n // (self.T + 1)) + 1

    @property
    def total_budget(self) -> int:
        return self.n if self.beta is None else self.beta

    @property
    def tag(self) -> str:
        return f"kna-n{self.n}-T{self.T}-a{self.period_budget}-b{self.total_budget}-s{self.seed}"


@dataclass(frozen=True)
class KnapsackData:
    """
    ``profits`` and ``weights`` are indexed [t][i] for t = 0..T; ``extra`` is
    indexed [t-1][i] for the periods 1..T. Bonuses are the same every period.
    """
    profits: Tuple[Tuple[int, ...], ...]
    weights: Tuple[Tuple[int, ...], ...]
    extra: Tuple[Tuple[int, ...], ...]
    bonus: Tuple[int, ...]
    capacity: int

    @classmethod
    def generate(cls, params: KnapsackParams) -> "KnapsackData":
        rng = SplitMix64(params.seed)
        n, T = params.n, params.T
        profits = tuple(tuple(rng.draws(n, *PROFIT_RANGE)) for _ in range(T + 1))
        weights = tuple(tuple(rng.draws(n, *WEIGHT_RANGE)) for _ in range(T + 1))
        extra = tuple(tuple(rng.draws(n, *EXTRA_RANGE)) for _ in range(T))
        bonus = tuple(rng.draws(n, *BONUS_RANGE))
        total = sum(weights[0])
        capacity = rng.draw(total // 3, total)
        return cls(profits, weights, extra, bonus, capacity)

    def check(self, params: KnapsackParams) -> None:
        n, T = params.n, params.T
        if len(self.profits) != T + 1 or len(self.weights) != T + 1 or len(self.extra) != T:
            raise ConfigError("knapsack data does not match T")
        rows = list(self.profits) + list(self.weights) + list(self.extra) + [self.bonus]
        if any(len(row) != n for row in rows):
            raise ConfigError("knapsack data does not match n")
        if self.capacity < 0:
            raise ConfigError(f"capacity must be non-negative, got {self.capacity}")


def _data(params: KnapsackParams, data: Optional[KnapsackData]) -> KnapsackData:
    data = data or KnapsackData.generate(params)
    data.check(params)
    return data


def build_knapsack_qippu(params: KnapsackParams, data: Optional[KnapsackData] = None) -> QipInstance:
    data = _data(params, data)
    n, T = params.n, params.T
    b = InstanceBuilder(f"{params.tag}-qippu", ObjectiveSense.MAXIMIZE)
    b.new_block(Quantifier.EXISTS)
    x = {0: [b.add_var(f"x_0_{i}") for i in range(1, n + 1)]}
    for j, p in zip(x[0], data.profits[0]):
        b.add_objective(j, p)
    b.le(dict(zip(x[0], data.weights[0])), data.capacity, name="capacity_0")
    spent: Dict[int, int] = {}
    for t in range(1, T + 1):
        b.new_block(Quantifier.FORALL)
        z = [b.add_var(f"z_{t}_{i}") for i in range(1, n + 1)]
        b.universal_le({j: 1 for j in z}, params.period_budget, name=f"budget_{t}")
        spent.update({j: 1 for j in z})
        b.universal_le(spent, params.total_budget, name=f"total_{t}")
        b.new_block(Quantifier.EXISTS)
        x[t] = [b.add_var(f"x_{t}_{i}") for i in range(1, n + 1)]
        y = [b.add_var(f"y_{t}_{i}") for i in range(1, n + 1)]
        v = [b.add_var(f"v_{t}_{i}") for i in range(1, n + 1)]
        capacity = dict(zip(x[t], data.weights[t]))
        capacity.update(zip(v, data.extra[t - 1]))
        b.le(capacity, data.capacity, name=f"capacity_{t}")
        for i in range(n):
            prev, cur = x[t - 1][i], x[t][i]
            b.add_objective(cur, data.profits[t][i])
            b.add_objective(y[i], data.bonus[i])
            b.le({v[i]: 1, cur: -1}, 0, name=f"raised_x_{t}_{i + 1}")
            b.le({v[i]: 1, z[i]: -1}, 0, name=f"raised_z_{t}_{i + 1}")
            b.le({cur: 1, z[i]: 1, v[i]: -1}, 1, name=f"raised_xz_{t}_{i + 1}")
            b.le({y[i]: 1, prev: 1, cur: -1}, 1, name=f"keep_in_{t}_{i + 1}")
            b.le({y[i]: 1, prev: -1, cur: 1}, 1, name=f"keep_out_{t}_{i + 1}")
    return b.build()


def build_knapsack_dep(params: KnapsackParams, data: Optional[KnapsackData] = None,
                       cap: int = DEFAULT_SCENARIO_CAP) -> MipInstance:
    """
    Robust counterpart over every budget-feasible weight-increase pattern.
    Realised weights enter the capacity rows directly, so no product
    variables are needed; the epigraph bounds the later-period profit from
    below for every pattern.
    """
    data = _data(params, data)
    n = params.n
    tree = enumerate_scenarios(build_knapsack_qippu(params, data), cap)
    b = DepBuilder(f"{params.tag}-dep", ObjectiveSense.MAXIMIZE)
    first = [b.add_var(f"x_0_{i}") for i in range(1, n + 1)]
    for j, p in zip(first, data.profits[0]):
        b.add_objective(j, p)
    b.le(dict(zip(first, data.weights[0])), data.capacity, name="capacity_0")
    exprs = []

    def walk(node: ScenarioNode, prev: List[int], profit: Dict[int, int]) -> None:
        t = node.depth
        suffix = node.history.suffix
        x = prev
        if t:
            raised = node.history.scenario(t)
            x = [b.add_var(f"x_{t}_{i}@{suffix}") for i in range(1, n + 1)]
            y = [b.add_var(f"y_{t}_{i}@{suffix}") for i in range(1, n + 1)]
            weights = {x[i]: data.weights[t][i] + data.extra[t - 1][i] * raised[i] for i in range(n)}
            b.le(weights, data.capacity, name=f"capacity_{t}@{suffix}")
            profit = dict(profit)
            for i in range(n):
                profit[x[i]] = data.profits[t][i]
                profit[y[i]] = data.bonus[i]
                b.le({y[i]: 1, prev[i]: 1, x[i]: -1}, 1, name=f"keep_in_{t}_{i + 1}@{suffix}")
                b.le({y[i]: 1, prev[i]: -1, x[i]: 1}, 1, name=f"keep_out_{t}_{i + 1}@{suffix}")
        if node.is_leaf:
            exprs.append(((profit, 0), suffix))
            return
        for child in node.children:
            walk(child, x, profit)

    walk(tree.root, first, {})
    b.add_epigraph(exprs)
    return b.build(tree.num_leaves)

"""
Multistage robust lot-sizing with discrete orders.

Purpose: A single product over T periods. Each period's demand is either its
lower or its upper estimate (a universal binary). Basic orders placed in
period t-1 arrive in period t; urgent orders arrive immediately at a higher
unit cost; stock is charged per unit. Inventory is substituted by its
cumulative formula, so the models only carry order variables.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..core import InstanceBuilder, QipInstance, Quantifier
from ..dep import DEFAULT_SCENARIO_CAP, DepBuilder, MipInstance
from ..errors import ConfigError, ScenarioExplosionError
from .rng import SplitMix64

BASIC_SIZES = (64, 32, 16, 8)
BASIC_COST_RANGE = (0, 5)
URGENT_COST_MAX = 10
STORAGE_COST_RANGE = (0, 10)
DEMAND_LOW_RANGE = (0, 25)
DEMAND_HIGH_RANGE = (75, 100)


@dataclass(frozen=True)
class LotSizingParams:
    B: int
    U: int
    T: int
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.B <= len(BASIC_SIZES):
            raise ConfigError(f"lot-sizing supports 1..{len(BASIC_SIZES)} basic orders, got B={self.B}")
        if self.U < 1 or self.T < 1:
            raise ConfigError(f"lot-sizing needs U >= 1 and T >= 1, got U={self.U}, T={self.T}")

    @property
    def tag(self) -> str:
        return f"lot-B{self.B}-U{self.U}-T{self.T}-s{self.seed}"


@dataclass(frozen=True)
class LotSizingData:
    """Demand tuples are indexed by period - 1."""
    basic_cost: int
    urgent_cost: int
    storage_cost: int
    basic_sizes: Tuple[int, ...]
    urgent_sizes: Tuple[int, ...]
    demand_low: Tuple[int, ...]
    demand_high: Tuple[int, ...]

    @classmethod
    def generate(cls, params: LotSizingParams) -> "LotSizingData":
        rng = SplitMix64(params.seed)
        basic = rng.draw(*BASIC_COST_RANGE)
        urgent = rng.draw(basic + 1, URGENT_COST_MAX)
        storage = rng.draw(*STORAGE_COST_RANGE)
        low, high = [], []
        for _ in range(params.T):
            low.append(rng.draw(*DEMAND_LOW_RANGE))
            high.append(rng.draw(*DEMAND_HIGH_RANGE))
        return cls(
            basic_cost=basic,
            urgent_cost=urgent,
            storage_cost=storage,
            basic_sizes=BASIC_SIZES[:params.B],
            urgent_sizes=tuple(100 // u for u in range(1, params.U + 1)),
            demand_low=tuple(low),
            demand_high=tuple(high),
        )

    def check(self, params: LotSizingParams) -> None:
        if len(self.basic_sizes) != params.B or len(self.urgent_sizes) != params.U:
            raise ConfigError("lot-sizing data does not match B and U")
        if len(self.demand_low) != params.T or len(self.demand_high) != params.T:
            raise ConfigError("lot-sizing data does not match T")
        if self.basic_cost >= self.urgent_cost:
            raise ConfigError("urgent orders must cost more than basic orders")
        if any(lo > hi for lo, hi in zip(self.demand_low, self.demand_high)):
            raise ConfigError("demand lower estimate exceeds upper estimate")

    def demand(self, t: int, high: int) -> int:
        return self.demand_low[t - 1] + (self.demand_high[t - 1] - self.demand_low[t - 1]) * high


def inventory(data: LotSizingData, basic: List[List[int]], urgent: List[List[int]],
              demand_high: List[int]) -> List[int]:
    """
    Stock after each period 1..T from explicit 0/1 decisions.

    ``basic[t]`` are the basic orders placed in period t, ``urgent[t]`` the
    urgent orders of period t (index 0 unused) and ``demand_high[t-1]`` the
    demand indicator of period t.
    """
    level = 0
    levels = []
    for t in range(1, len(demand_high) + 1):
        level += sum(q * x for q, x in zip(data.basic_sizes, basic[t - 1]))
        level += sum(p * y for p, y in zip(data.urgent_sizes, urgent[t]))
        level -= data.demand(t, demand_high[t - 1])
        levels.append(level)
    return levels


def _data(params: LotSizingParams, data: Optional[LotSizingData]) -> LotSizingData:
    data = data or LotSizingData.generate(params)
    data.check(params)
    return data


def build_lotsizing_qip(params: LotSizingParams, data: Optional[LotSizingData] = None) -> QipInstance:
    """
    Blocks: basic orders of period 0, then per period the demand indicator,
    the urgent orders and (before the last period) the next basic orders.
    """
    data = _data(params, data)
    T = params.T
    b = InstanceBuilder(f"{params.tag}-qip")
    b.new_block(Quantifier.EXISTS)
    x = {0: [b.add_var(f"x_0_{k}") for k in range(1, params.B + 1)]}
    y: Dict[int, List[int]] = {}
    z: Dict[int, int] = {}
    for t in range(1, T + 1):
        b.new_block(Quantifier.FORALL)
        z[t] = b.add_var(f"z_{t}")
        b.new_block(Quantifier.EXISTS)
        y[t] = [b.add_var(f"y_{t}_{u}") for u in range(1, params.U + 1)]
        if t < T:
            x[t] = [b.add_var(f"x_{t}_{k}") for k in range(1, params.B + 1)]

    stock: Dict[int, int] = {}
    baseline = 0
    for t in range(1, T + 1):
        for j, q in zip(x[t - 1], data.basic_sizes):
            stock[j] = q
            b.add_objective(j, data.basic_cost * q)
        for j, p in zip(y[t], data.urgent_sizes):
            stock[j] = p
            b.add_objective(j, data.urgent_cost * p)
        stock[z[t]] = -(data.demand_high[t - 1] - data.demand_low[t - 1])
        baseline += data.demand_low[t - 1]
        b.ge(stock, baseline, name=f"stock_{t}")
        for j, c in stock.items():
            b.add_objective(j, data.storage_cost * c)
        b.add_offset(-data.storage_cost * baseline)
    return b.build()


def build_lotsizing_dep(params: LotSizingParams, data: Optional[LotSizingData] = None,
                        cap: int = DEFAULT_SCENARIO_CAP, substitute: bool = True) -> MipInstance:
    """
    Robust counterpart over all 2^T demand patterns, minimising the epigraph.

    With ``substitute=False`` every node keeps an explicit inventory variable
    tied to its cumulative formula by an equality row.
    """
    data = _data(params, data)
    T = params.T
    leaves = 2 ** T
    if leaves > cap:
        raise ScenarioExplosionError(cap, leaves)
    b = DepBuilder(f"{params.tag}-dep")
    first = [b.add_var(f"x_0_{k}") for k in range(1, params.B + 1)]
    inflow_max = sum(data.basic_sizes) + sum(data.urgent_sizes)
    exprs = []

    def walk(history: Tuple[int, ...], basic: List[int], stock: Dict[int, int], demand: int,
             cost: Dict[int, int], const: int) -> None:
        t = len(history)
        suffix = "_".join(map(str, history))
        if t:
            urgent = [b.add_var(f"y_{t}_{u}@{suffix}") for u in range(1, params.U + 1)]
            stock = dict(stock)
            cost = dict(cost)
            for j, q in zip(basic, data.basic_sizes):
                stock[j] = q
                cost[j] = cost.get(j, 0) + data.basic_cost * q
            for j, p in zip(urgent, data.urgent_sizes):
                stock[j] = p
                cost[j] = cost.get(j, 0) + data.urgent_cost * p
            demand += data.demand(t, history[-1])
            if substitute:
                b.ge(stock, demand, name=f"stock_{t}@{suffix}")
                for j, c in stock.items():
                    cost[j] = cost.get(j, 0) + data.storage_cost * c
                const -= data.storage_cost * demand
            else:
                level = b.add_var(f"I_{t}@{suffix}", 0, inflow_max * t)
                b.eq({**{j: -c for j, c in stock.items()}, level: 1}, -demand, name=f"stock_{t}@{suffix}")
                cost[level] = data.storage_cost
        if t == T:
            exprs.append(((cost, const), suffix))
            return
        orders = basic if t == 0 else [b.add_var(f"x_{t}_{k}@{suffix}") for k in range(1, params.B + 1)]
        for high in (0, 1):
            walk(history + (high,), orders, stock, demand, cost, const)

    walk((), first, {}, 0, {}, 0)
    b.add_epigraph(exprs)
    return b.build(leaves)

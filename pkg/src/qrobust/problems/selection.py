"""
Multistage robust selection.

Purpose: Choose exactly p of n items over an initial stage and T periods;
each period first reveals one of N cost scenarios. Costs are drawn from
{0..99}; experiments use n = 2p.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..core import QipInstance
from ..dep import DEFAULT_SCENARIO_CAP, MipInstance
from ..errors import ConfigError
from .pool import PoolModel
from .rng import SplitMix64

COST_RANGE = (0, 99)


@dataclass(frozen=True)
class SelectionParams:
    n: int
    p: int
    T: int
    N: int
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n != 2 * self.p:
            raise ConfigError(f"selection needs n = 2p with p >= 1, got n={self.n}, p={self.p}")
        if self.T < 1 or self.N < 1:
            raise ConfigError(f"selection needs T >= 1 and N >= 1, got T={self.T}, N={self.N}")

    @property
    def tag(self) -> str:
        return f"sel-n{self.n}-p{self.p}-T{self.T}-N{self.N}-s{self.seed}"


@dataclass(frozen=True)
class SelectionData:
    """``costs[t-1][k-1][i]`` is the cost of item i in scenario k of period t."""
    first_costs: Tuple[int, ...]
    costs: Tuple[Tuple[Tuple[int, ...], ...], ...]

    @classmethod
    def generate(cls, params: SelectionParams) -> "SelectionData":
        rng = SplitMix64(params.seed)
        first = tuple(rng.draws(params.n, *COST_RANGE))
        costs = tuple(
            tuple(tuple(rng.draws(params.n, *COST_RANGE)) for _ in range(params.N))
            for _ in range(params.T))
        return cls(first, costs)

    def check(self, params: SelectionParams) -> None:
        if len(self.first_costs) != params.n or len(self.costs) != params.T:
            raise ConfigError("selection data does not match n and T")
        for period in self.costs:
            if len(period) != params.N or any(len(row) != params.n for row in period):
                raise ConfigError("selection data does not match N and n")


def _rows(p: int):
    def add(b, stages: List[List[int]], tag: str) -> None:
        b.eq({j: 1 for stage in stages for j in stage}, p, name=f"select{tag}")
        for i in range(len(stages[0])):
            b.le({stage[i]: 1 for stage in stages}, 1, name=f"once_{i + 1}{tag}")
    return add


def _model(params: SelectionParams, data: Optional[SelectionData]) -> PoolModel:
    data = data or SelectionData.generate(params)
    data.check(params)
    labels = tuple(str(i) for i in range(1, params.n + 1))
    return PoolModel(params.tag, labels, data.first_costs, data.costs, _rows(params.p))


def build_selection_qippu(params: SelectionParams, data: Optional[SelectionData] = None) -> QipInstance:
    """Scenario choice as a universal unit vector restricted by one universal row per period."""
    return _model(params, data).qippu()


def build_selection_qip(params: SelectionParams, data: Optional[SelectionData] = None) -> QipInstance:
    """Scenario choice as a universal integer in [1, N] decoded by existential indicators."""
    return _model(params, data).qip()


def build_selection_dep(params: SelectionParams, data: Optional[SelectionData] = None,
                        cap: int = DEFAULT_SCENARIO_CAP) -> MipInstance:
    return _model(params, data).dep(cap)

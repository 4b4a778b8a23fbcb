"""
Multistage robust assignment.

Purpose: Build a perfect matching of the complete bipartite graph on n + n
nodes over an initial stage and T periods; each period first reveals one of
N cost scenarios for all edges. Costs are drawn from {0..99}.
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
class AssignmentParams:
    n: int
    T: int
    N: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.T < 1 or self.N < 1:
            raise ConfigError(f"assignment needs n, T, N >= 1, got n={self.n}, T={self.T}, N={self.N}")

    @property
    def tag(self) -> str:
        return f"ass-n{self.n}-T{self.T}-N{self.N}-s{self.seed}"


@dataclass(frozen=True)
class AssignmentData:
    """Edge costs flattened row-major: edge (i, j) sits at position i * n + j."""
    first_costs: Tuple[int, ...]
    costs: Tuple[Tuple[Tuple[int, ...], ...], ...]

    @classmethod
    def generate(cls, params: AssignmentParams) -> "AssignmentData":
        rng = SplitMix64(params.seed)
        edges = params.n * params.n
        first = tuple(rng.draws(edges, *COST_RANGE))
        costs = tuple(
            tuple(tuple(rng.draws(edges, *COST_RANGE)) for _ in range(params.N))
            for _ in range(params.T))
        return cls(first, costs)

    def check(self, params: AssignmentParams) -> None:
        edges = params.n * params.n
        if len(self.first_costs) != edges or len(self.costs) != params.T:
            raise ConfigError("assignment data does not match n and T")
        for period in self.costs:
            if len(period) != params.N or any(len(row) != edges for row in period):
                raise ConfigError("assignment data does not match N and n")


def _rows(n: int):
    def add(b, stages: List[List[int]], tag: str) -> None:
        for i in range(n):
            b.eq({stage[i * n + j]: 1 for stage in stages for j in range(n)}, 1, name=f"row_{i + 1}{tag}")
        for j in range(n):
            b.eq({stage[i * n + j]: 1 for stage in stages for i in range(n)}, 1, name=f"col_{j + 1}{tag}")
    return add


def _model(params: AssignmentParams, data: Optional[AssignmentData]) -> PoolModel:
    data = data or AssignmentData.generate(params)
    data.check(params)
    n = params.n
    labels = tuple(f"{i}_{j}" for i in range(1, n + 1) for j in range(1, n + 1))
    return PoolModel(params.tag, labels, data.first_costs, data.costs, _rows(n))


def build_assignment_qippu(params: AssignmentParams, data: Optional[AssignmentData] = None) -> QipInstance:
    return _model(params, data).qippu()


def build_assignment_qip(params: AssignmentParams, data: Optional[AssignmentData] = None) -> QipInstance:
    return _model(params, data).qip()


def build_assignment_dep(params: AssignmentParams, data: Optional[AssignmentData] = None,
                         cap: int = DEFAULT_SCENARIO_CAP) -> MipInstance:
    return _model(params, data).dep(cap)

"""
qrobust: multistage robust discrete optimization via quantified integer programs.

Game-tree search with alpha-beta pruning over QIPs with a universal
constraint system, the deterministic-equivalent expansion, a branch-and-bound
MIP solver and the instance families used to compare them.
"""

__version__ = "0.4.0"

from .core import (
    InstanceBuilder,
    LinConstraint,
    ObjectiveSense,
    QipInstance,
    QuantBlock,
    Quantifier,
    VarDomain,
    VarKind,
    validate,
)
from .dep import MipInstance, ScenarioHistory, enumerate_scenarios, flatten
from .mip import MipResult, solve_mip
from .qipfile import parse, write
from .search import (
    INFINITY,
    SearchConfig,
    SolveResult,
    SolveStatus,
    legal_universal_moves,
    optimal_plays,
    oracle_solve,
    resolve_trailing,
    solve,
)

__all__ = [
    'INFINITY',
    'InstanceBuilder',
    'LinConstraint',
    'MipInstance',
    'MipResult',
    'ObjectiveSense',
    'QipInstance',
    'QuantBlock',
    'Quantifier',
    'ScenarioHistory',
    'SearchConfig',
    'SolveResult',
    'SolveStatus',
    'VarDomain',
    'VarKind',
    'enumerate_scenarios',
    'flatten',
    'legal_universal_moves',
    'optimal_plays',
    'oracle_solve',
    'parse',
    'resolve_trailing',
    'solve',
    'solve_mip',
    'validate',
    'write',
]

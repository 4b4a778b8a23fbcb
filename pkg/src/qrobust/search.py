"""
Alpha-beta game-tree search for quantified integer programs.

Purpose: Compute the optimal worst-case value and the first-stage assignment
of a QipInstance as the nested min/max over integer assignments. The
existential player minimises; universal blocks move as a whole and only
through legal moves. Also hosts the exhaustive oracle used to cross-check.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .core import (
    MAX_EXHAUSTIVE_UNIVERSALS,
    ObjectiveSense,
    QipInstance,
    RowSense,
    VarKind,
    check_immediate_violation,
    objective_bounds,
    validate,
)
from .errors import (
    ConfigError,
    ModelContractError,
    NonSeparableError,
    QipSemanticError,
    TreeTooLargeError,
)
from .relax import BoundsState, Direction, Propagator, compile_row, optimistic_value

logger = logging.getLogger(__name__)


class _PlusInfinity:
    """The existential player's loss: ordered above every rational."""
    __slots__ = ()

    def __repr__(self) -> str:
        return "INFINITY"

    def __str__(self) -> str:
        return "inf"

    def __reduce__(self):
        return "INFINITY"

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("qrobust.INFINITY")

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True


INFINITY = _PlusInfinity()
Value = Union[Fraction, _PlusInfinity]

DEFAULT_ORACLE_LEAF_LIMIT = 10 ** 7


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"


class MoveOrdering(str, Enum):
    DOMAIN_ASCENDING = "domain"
    OBJECTIVE_GUIDED = "objective"


@dataclass(frozen=True)
class SearchConfig:
    """Budget and heuristics for one solver call."""
    time_limit_ms: int = 60_000
    move_ordering: MoveOrdering = MoveOrdering.OBJECTIVE_GUIDED
    bounds_enabled: bool = True
    node_limit: Optional[int] = None

    def __post_init__(self):
        if self.time_limit_ms <= 0:
            raise ConfigError(f"time limit must be positive, got {self.time_limit_ms}")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ConfigError(f"node limit must be positive, got {self.node_limit}")


@dataclass
class SolveResult:
    """
    Outcome of a search.

    ``value`` is in model sense: a Fraction when Optimal, INFINITY when
    Infeasible, and on TimeLimit the best proven root bound (``bound_only``)
    or None.
    """
    status: SolveStatus
    value: Optional[Value]
    first_stage: Dict[int, int] = field(default_factory=dict)
    nodes: int = 0
    elapsed_ms: int = 0
    bound_only: bool = False

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


class _BudgetExhausted(Exception):
    pass


# Shared pieces

@dataclass(frozen=True)
class _Plan:
    """Decision sequence: existential integer variables one at a time, universal blocks whole."""
    decisions: Tuple[Tuple[bool, int], ...]
    first_len: int
    trailing: Tuple[int, ...]


def _plan(instance: QipInstance) -> _Plan:
    decisions: List[Tuple[bool, int]] = []
    first_len = 0
    trailing: List[int] = []
    for b, block in enumerate(instance.blocks):
        if block.is_universal:
            decisions.append((True, b))
            continue
        for j in block.var_indices:
            if instance.domains[j].kind is VarKind.TRAILING_CONTINUOUS:
                trailing.append(j)
            else:
                decisions.append((False, j))
                if b == 0:
                    first_len += 1
    return _Plan(tuple(decisions), first_len, tuple(trailing))


def _require_valid(instance: QipInstance) -> None:
    report = validate(instance)
    if not report.ok:
        raise QipSemanticError(report.findings)
    if instance.immediate_violation or not instance.universal_rows:
        return
    # Undeclared property: only small universal parts can be checked here.
    if len(instance.universal_vars) > MAX_EXHAUSTIVE_UNIVERSALS:
        raise ModelContractError(
            f"{instance.name} does not declare immediate violation and has "
            f"{len(instance.universal_vars)} universal variables; general legality checks are not supported")
    missing = check_immediate_violation(instance)
    if missing:
        raise ModelContractError(f"{instance.name}: {missing[0].message}")


class TrailingResolver:
    """
    Optimal values of the closing block's continuous variables.

    Each such variable must sit alone (among continuous variables) in LE rows
    whose coefficients all carry the sign that makes the objective push it
    against those rows: with a nonnegative min-form cost, rows read
    ``residual <= |a| * w`` and ``w = max(lower, residuals)``; with a
    nonpositive cost the mirror image applies.
    """

    def __init__(self, instance: QipInstance):
        cost = dict(instance.min_objective)
        trailing = [j for j, d in enumerate(instance.domains) if d.kind is VarKind.TRAILING_CONTINUOUS]
        trailing_set = set(trailing)
        rows_of: Dict[int, List[Tuple[Tuple[Tuple[int, Fraction], ...], Fraction, Fraction]]] = {w: [] for w in trailing}
        for row in instance.existential_rows:
            inside = [j for j in row.var_indices if j in trailing_set]
            if not inside:
                continue
            if len(inside) > 1:
                raise NonSeparableError(f"row {row.name!r} couples several continuous variables")
            if row.sense is not RowSense.LE:
                raise NonSeparableError(f"continuous variable in equality row {row.name!r}")
            w = inside[0]
            a = row.coeffs[w]
            rest = tuple((j, c) for j, c in row.terms if j != w)
            rows_of[w].append((rest, a, row.rhs))
        self.entries: List[Tuple[int, Fraction, bool, int, int, list]] = []
        for w in trailing:
            rows = rows_of[w]
            c = cost.get(w, Fraction(0))
            signs = {a > 0 for _, a, _ in rows}
            if len(signs) > 1:
                raise NonSeparableError(f"continuous variable {instance.var_names[w]} bounded from both sides")
            if rows:
                pushes_down = not signs.pop()
            else:
                pushes_down = c >= 0
            if (c > 0 and not pushes_down) or (c < 0 and pushes_down):
                raise NonSeparableError(
                    f"objective drives {instance.var_names[w]} away from its defining rows")
            dom = instance.domains[w]
            self.entries.append((w, c, pushes_down, dom.lower, dom.upper, rows))
        self.trailing = tuple(trailing)

    def resolve(self, assignment: Sequence) -> Optional[Tuple[Fraction, Dict[int, Fraction]]]:
        """Min-form contribution and values, or None when some variable has no feasible value."""
        total = Fraction(0)
        values: Dict[int, Fraction] = {}
        for w, c, pushes_down, lower, upper, rows in self.entries:
            if pushes_down:
                best = Fraction(lower)
                for rest, a, rhs in rows:
                    residual = (sum((k * assignment[j] for j, k in rest), Fraction(0)) - rhs) / -a
                    if residual > best:
                        best = residual
                if best > upper:
                    return None
            else:
                best = Fraction(upper)
                for rest, a, rhs in rows:
                    residual = (rhs - sum((k * assignment[j] for j, k in rest), Fraction(0))) / a
                    if residual < best:
                        best = residual
                if best < lower:
                    return None
            values[w] = best
            total += c * best
        return total, values


class UniversalMoves:
    """Legal block assignments of the universal player under the immediate-violation rule."""

    def __init__(self, instance: QipInstance):
        self.instance = instance
        block_of = instance.block_of
        self._boxes: Dict[int, List[Tuple[int, ...]]] = {}
        self._rows: Dict[int, List] = {b: [] for b in instance.universal_block_indices}
        self._context: Dict[int, Tuple[int, ...]] = {}
        for row in instance.universal_rows:
            last = max((block_of[j] for j in row.var_indices), default=-1)
            if last in self._rows:
                self._rows[last].extend(compile_row(row))
        for b in self._rows:
            own = set(instance.blocks[b].var_indices)
            earlier = sorted({j for vars_, _, _ in self._rows[b] for j in vars_ if j not in own})
            self._context[b] = tuple(earlier)
        self._cache: Dict[Tuple[int, Tuple], List[Tuple[int, ...]]] = {}

    def box(self, b: int) -> List[Tuple[int, ...]]:
        if b not in self._boxes:
            block = self.instance.blocks[b].var_indices
            self._boxes[b] = list(itertools.product(*(self.instance.domains[j].values() for j in block)))
        return self._boxes[b]

    def legal(self, b: int, assignment: Sequence) -> List[Tuple[int, ...]]:
        if b not in self._rows:
            raise ConfigError(f"block {b} is not universal")
        key = (b, tuple(assignment[j] for j in self._context[b]))
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        block = self.instance.blocks[b].var_indices
        rows = self._rows[b]
        moves = []
        for move in self.box(b):
            local = dict(zip(block, move))
            ok = True
            for vars_, coefs, rhs in rows:
                act = 0
                for j, a in zip(vars_, coefs):
                    act += a * (local[j] if j in local else assignment[j])
                if act > rhs:
                    ok = False
                    break
            if ok:
                moves.append(move)
        if not moves:
            raise ModelContractError(f"no legal move for universal block {b}")
        self._cache[key] = moves
        return moves


def _min_form_floor(instance: QipInstance) -> Fraction:
    """A value strictly below every attainable min-form objective."""
    low, high = objective_bounds(instance)
    base = low if instance.sense is ObjectiveSense.MINIMIZE else -high
    for j, d in enumerate(instance.domains):
        if d.kind is VarKind.TRAILING_CONTINUOUS:
            c = dict(instance.min_objective).get(j, Fraction(0))
            base -= abs(c) * (abs(d.lower) + abs(d.upper))
    return base - 1


def _to_model(instance: QipInstance, value: Value) -> Value:
    return value if value is INFINITY else instance.to_model_value(value)


# Alpha-beta search

class GameTreeSearch:
    """
    Depth-first alpha-beta over the quantifier prefix.

    Existential integer variables are branched one at a time inside their
    block, universal blocks by whole legal moves. Existential rows are
    propagated after every fixing; an empty box means the existential player
    has lost that line.
    """

    def __init__(self, instance: QipInstance, config: Optional[SearchConfig] = None):
        self.instance = instance
        self.config = config or SearchConfig()
        self.plan = _plan(instance)
        self.propagator = Propagator(instance.existential_rows, instance.num_vars)
        self.resolver = TrailingResolver(instance)
        self.moves = UniversalMoves(instance)
        self.objective = instance.min_objective
        self.cost = [Fraction(0)] * instance.num_vars
        for j, c in self.objective:
            self.cost[j] = c
        self.integer_objective = tuple((j, c) for j, c in self.objective
                                       if instance.domains[j].kind is VarKind.INTEGER)
        self.offset = instance.min_offset
        self.nodes = 0
        self._deadline = 0.0
        self._root_best: Value = INFINITY

    def solve(self) -> SolveResult:
        start = time.perf_counter()
        self._deadline = start + self.config.time_limit_ms / 1000.0
        self.nodes = 0
        self._root_best = INFINITY
        state = BoundsState.from_domains(self.instance.domains)
        self.propagator.seed_all(state)
        assignment: List[Optional[int]] = [None] * self.instance.num_vars
        try:
            if not self.propagator.run(state):
                value, line = INFINITY, ()
            else:
                value, line = self._search(0, state, assignment, _min_form_floor(self.instance), INFINITY)
        except _BudgetExhausted:
            elapsed = int((time.perf_counter() - start) * 1000)
            bound = None if self._root_best is INFINITY else self.instance.to_model_value(self._root_best)
            logger.debug("search %s: budget exhausted after %d nodes", self.instance.name, self.nodes)
            return SolveResult(SolveStatus.TIME_LIMIT, bound, {}, self.nodes, elapsed, bound_only=True)
        elapsed = int((time.perf_counter() - start) * 1000)
        if value is INFINITY:
            result = SolveResult(SolveStatus.INFEASIBLE, INFINITY, {}, self.nodes, elapsed)
        else:
            first = {j: v for (_, j), v in zip(self.plan.decisions, line)}
            result = SolveResult(SolveStatus.OPTIMAL, self.instance.to_model_value(value), first,
                                 self.nodes, elapsed)
        logger.debug("search %s: %s value=%s nodes=%d", self.instance.name,
                     result.status.value, result.value, result.nodes)
        return result

    def _enter(self) -> None:
        self.nodes += 1
        limit = self.config.node_limit
        if limit is not None and self.nodes > limit:
            raise _BudgetExhausted()
        if time.perf_counter() > self._deadline:
            raise _BudgetExhausted()

    def _leaf_value(self, assignment: Sequence) -> Value:
        resolved = self.resolver.resolve(assignment)
        if resolved is None:
            return INFINITY
        total = self.offset + resolved[0]
        for j, c in self.integer_objective:
            total += c * assignment[j]
        return total

    def _search(self, pos: int, state: BoundsState, assignment: List,
                alpha: Value, beta: Value) -> Tuple[Value, Tuple[int, ...]]:
        self._enter()
        decisions = self.plan.decisions
        if pos == len(decisions):
            return self._leaf_value(assignment), ()
        if self.config.bounds_enabled:
            bound = self.offset + optimistic_value(self.objective, state, Direction.MIN)
            if bound >= beta:
                return bound, ()
        is_universal, ref = decisions[pos]
        if is_universal:
            return self._universal_node(pos, ref, state, assignment, alpha, beta), ()
        return self._existential_node(pos, ref, state, assignment, alpha, beta)

    def _existential_node(self, pos, j, state, assignment, alpha, beta):
        values = list(range(state.lower[j], state.upper[j] + 1))
        if pos >= self.plan.first_len and self.config.move_ordering is MoveOrdering.OBJECTIVE_GUIDED:
            c = self.cost[j]
            values.sort(key=lambda v: (c * v, v))
        best: Value = INFINITY
        line: Tuple[int, ...] = ()
        for v in values:
            child = state.copy()
            if not (self.propagator.fix(child, j, v) and self.propagator.run(child)):
                continue
            assignment[j] = v
            value, sub = self._search(pos + 1, child, assignment, alpha, min(beta, best))
            assignment[j] = None
            if value < best:
                best = value
                if pos < self.plan.first_len:
                    line = (v,) + sub
                if pos == 0:
                    self._root_best = best
                if best <= alpha:
                    break
        return best, line

    def _universal_node(self, pos, b, state, assignment, alpha, beta) -> Value:
        block = self.instance.blocks[b].var_indices
        moves = self.moves.legal(b, assignment)
        if self.config.move_ordering is MoveOrdering.OBJECTIVE_GUIDED:
            cost = self.cost
            moves = sorted(moves, key=lambda m: -sum((cost[j] * v for j, v in zip(block, m)), Fraction(0)))
        best: Optional[Value] = None
        for move in moves:
            child = state.copy()
            feasible = all(self.propagator.fix(child, j, v) for j, v in zip(block, move))
            if not (feasible and self.propagator.run(child)):
                return INFINITY
            for j, v in zip(block, move):
                assignment[j] = v
            floor = alpha if best is None else max(alpha, best)
            value, _ = self._search(pos + 1, child, assignment, floor, beta)
            for j in block:
                assignment[j] = None
            if best is None or value > best:
                best = value
            if best >= beta:
                break
        return best


def solve(instance: QipInstance, config: Optional[SearchConfig] = None) -> SolveResult:
    """Optimal worst-case value and first-stage assignment by alpha-beta search."""
    _require_valid(instance)
    return GameTreeSearch(instance, config).solve()


# Exhaustive oracle

def game_tree_leaves(instance: QipInstance) -> int:
    """Leaf count of the unpruned tree over the integer box."""
    total = 1
    for d in instance.domains:
        if d.kind is VarKind.INTEGER:
            total *= d.size
    return total


class ExhaustiveOracle:
    """Plain minimax over every play: no propagation, no bounds, no pruning."""

    def __init__(self, instance: QipInstance, leaf_limit: int = DEFAULT_ORACLE_LEAF_LIMIT):
        leaves = game_tree_leaves(instance)
        if leaves > leaf_limit:
            raise TreeTooLargeError(leaves, leaf_limit)
        self.instance = instance
        self.plan = _plan(instance)
        self.resolver = TrailingResolver(instance)
        self.moves = UniversalMoves(instance)
        trailing = set(self.plan.trailing)
        self.rows = [compiled for row in instance.existential_rows
                     if not any(j in trailing for j in row.var_indices)
                     for compiled in compile_row(row)]
        self.integer_objective = tuple((j, c) for j, c in instance.min_objective
                                       if instance.domains[j].kind is VarKind.INTEGER)
        self.offset = instance.min_offset
        self.nodes = 0

    def _leaf(self, assignment: Sequence) -> Tuple[Value, Optional[Dict[int, Fraction]]]:
        for vars_, coefs, rhs in self.rows:
            act = 0
            for j, a in zip(vars_, coefs):
                act += a * assignment[j]
            if act > rhs:
                return INFINITY, None
        resolved = self.resolver.resolve(assignment)
        if resolved is None:
            return INFINITY, None
        total = self.offset + resolved[0]
        for j, c in self.integer_objective:
            total += c * assignment[j]
        return total, resolved[1]

    def value(self, pos: int, assignment: List) -> Tuple[Value, Tuple[int, ...]]:
        self.nodes += 1
        decisions = self.plan.decisions
        if pos == len(decisions):
            return self._leaf(assignment)[0], ()
        is_universal, ref = decisions[pos]
        if is_universal:
            block = self.instance.blocks[ref].var_indices
            best: Optional[Value] = None
            for move in self.moves.legal(ref, assignment):
                for j, v in zip(block, move):
                    assignment[j] = v
                value, _ = self.value(pos + 1, assignment)
                if best is None or value > best:
                    best = value
            for j in block:
                assignment[j] = None
            return best, ()
        best = INFINITY
        line: Tuple[int, ...] = ()
        for v in self.instance.domains[ref].values():
            assignment[ref] = v
            value, sub = self.value(pos + 1, assignment)
            if value < best:
                best = value
                if pos < self.plan.first_len:
                    line = (v,) + sub
        assignment[ref] = None
        return best, line

    def plays(self, pos: int, assignment: List) -> Tuple[Value, List[Dict[int, Union[int, Fraction]]]]:
        """Value plus every leaf reached by the optimal strategy below this node."""
        decisions = self.plan.decisions
        if pos == len(decisions):
            value, trailing = self._leaf(assignment)
            play: Dict[int, Union[int, Fraction]] = {j: v for j, v in enumerate(assignment) if v is not None}
            if trailing:
                play.update(trailing)
            return value, [play]
        is_universal, ref = decisions[pos]
        if is_universal:
            block = self.instance.blocks[ref].var_indices
            best: Optional[Value] = None
            collected: List[Dict[int, Union[int, Fraction]]] = []
            for move in self.moves.legal(ref, assignment):
                for j, v in zip(block, move):
                    assignment[j] = v
                value, sub = self.plays(pos + 1, assignment)
                collected.extend(sub)
                if best is None or value > best:
                    best = value
            for j in block:
                assignment[j] = None
            return best, collected
        best = INFINITY
        chosen: List[Dict[int, Union[int, Fraction]]] = []
        for v in self.instance.domains[ref].values():
            assignment[ref] = v
            value, sub = self.plays(pos + 1, assignment)
            if value < best or not chosen:
                if value < best:
                    best = value
                chosen = sub
        assignment[ref] = None
        return best, chosen

    def solve(self) -> SolveResult:
        start = time.perf_counter()
        self.nodes = 0
        assignment: List[Optional[int]] = [None] * self.instance.num_vars
        value, line = self.value(0, assignment)
        elapsed = int((time.perf_counter() - start) * 1000)
        if value is INFINITY:
            return SolveResult(SolveStatus.INFEASIBLE, INFINITY, {}, self.nodes, elapsed)
        first = {j: v for (_, j), v in zip(self.plan.decisions, line)}
        return SolveResult(SolveStatus.OPTIMAL, self.instance.to_model_value(value), first, self.nodes, elapsed)


def oracle_solve(instance: QipInstance, leaf_limit: int = DEFAULT_ORACLE_LEAF_LIMIT) -> SolveResult:
    """Exact game value by exhaustive minimax; raises TreeTooLargeError past the guard."""
    _require_valid(instance)
    return ExhaustiveOracle(instance, leaf_limit).solve()


def optimal_plays(instance: QipInstance,
                  leaf_limit: int = DEFAULT_ORACLE_LEAF_LIMIT) -> List[Dict[int, Union[int, Fraction]]]:
    """
    Leaves of the oracle's optimal strategy, one per legal universal line.

    Existential choices follow the lexicographically smallest optimal move.
    Each play maps every variable (trailing ones resolved) to its value.
    """
    _require_valid(instance)
    oracle = ExhaustiveOracle(instance, leaf_limit)
    _, plays = oracle.plays(0, [None] * instance.num_vars)
    return plays


# Single-purpose helpers

def resolve_trailing(instance: QipInstance, assignment: Mapping[int, int]) -> Value:
    """
    Optimal contribution (model sense) of the trailing continuous variables.

    All integer variables must be assigned. Returns INFINITY when a trailing
    variable's implied bound crosses its domain.
    """
    resolver = TrailingResolver(instance)
    values: List[Optional[int]] = [None] * instance.num_vars
    for j, v in assignment.items():
        values[j] = v
    missing = [instance.var_names[j] for j, d in enumerate(instance.domains)
               if d.kind is VarKind.INTEGER and values[j] is None]
    if missing:
        raise ConfigError(f"unassigned integer variables: {', '.join(missing)}")
    resolved = resolver.resolve(values)
    if resolved is None:
        return INFINITY
    return instance.to_model_value(resolved[0]) if instance.is_maximization else resolved[0]


def legal_universal_moves(instance: QipInstance, prefix: Mapping[int, int],
                          block_index: int) -> List[Tuple[int, ...]]:
    """Block assignments violating no universal row that is fully assigned once the block is set."""
    if not 0 <= block_index < len(instance.blocks) or not instance.blocks[block_index].is_universal:
        raise ConfigError(f"block {block_index} is not a universal block")
    values: List[Optional[int]] = [None] * instance.num_vars
    for j, v in prefix.items():
        values[j] = v
    return UniversalMoves(instance).legal(block_index, values)
